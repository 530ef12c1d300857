use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use boxcheck::linearizer::ViewMode;
use boxcheck::trace::{read_trace_file, write_trace_file};
use boxcheck::workload::{
    emit_fuzzer_template, record_run, sweep_mix, sweep_point, BugId, Jitter, OpMix, SweepError,
    WorkloadConfig, WorkloadError, SWEEP_HEADER,
};
use boxcheck::{
    check, export_graph, oracle_check, shrink_timeboxes, with_builtin_model, BuiltinModel,
    CheckError, CheckOptions, OracleError, OracleVerdict, Trace, TraceError, Verdict,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "boxcheck",
    version,
    about = "Record and check timeboxed concurrent traces"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a reference structure and write its trace.
    Record(RecordArgs),
    /// Decide linearizability of a trace.
    Check(CheckArgs),
    /// Decide linearizability of a short trace by brute force.
    Oracle(OracleArgs),
    /// Narrow each timebox to its refined timestamp.
    Retime(RetimeArgs),
    /// Record-then-check sweep, written as CSV.
    Bench(BenchArgs),
    /// Write a fuzzer skeleton for a model.
    GenTemplate(TemplateArgs),
}

#[derive(Args)]
struct RecordArgs {
    #[arg(long)]
    model: BuiltinModel,
    #[arg(long, default_value_t = 4)]
    threads: usize,
    /// Operations per thread.
    #[arg(long, default_value_t = 1000)]
    ops: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    bug: Option<BugId>,
    /// `probability,max_delay_ns`
    #[arg(long)]
    jitter: Option<Jitter>,
    #[arg(long, default_value_t = boxcheck::workload::DEFAULT_UNIVERSE)]
    universe: usize,
    /// Action weights `Action=w,...`; uniform by default.
    #[arg(long, default_value = "")]
    mix: OpMix,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Defaults to the model named in the trace header.
    #[arg(long)]
    model: Option<BuiltinModel>,
    trace: PathBuf,
    /// Write the explored state graph as SGX1.
    #[arg(long)]
    export: Option<PathBuf>,
    #[arg(long = "max-ce", default_value_t = 10)]
    max_ce: usize,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Memory budget in MiB.
    #[arg(long = "mem-cap")]
    mem_cap: Option<u64>,
    /// Fingerprint every state identically (lossy).
    #[arg(long)]
    constant_view: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    model: Option<BuiltinModel>,
    trace: PathBuf,
    #[arg(long, default_value_t = boxcheck::oracle::DEFAULT_BOUND)]
    bound: usize,
}

#[derive(Args)]
struct RetimeArgs {
    trace: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "queue")]
    model: BuiltinModel,
    /// A count or an inclusive range `lo..hi`, swept by doubling.
    #[arg(long, default_value = "5")]
    threads: Sweep,
    /// Total operations; a count or a range swept by doubling.
    #[arg(long, default_value = "500..450000", conflicts_with = "ops_per_thread")]
    ops: Sweep,
    /// Fixed operations per thread instead of a total.
    #[arg(long)]
    ops_per_thread: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long)]
    jitter: Option<Jitter>,
    /// Action weights `Action=w,...`; the queue defaults to a dequeue bias.
    #[arg(long)]
    mix: Option<OpMix>,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// CSV destination; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TemplateArgs {
    #[arg(long)]
    model: BuiltinModel,
    #[arg(short, long)]
    output: PathBuf,
}

/// `n` or `lo..hi`, expanded as lo, 2lo, 4lo, ... and finally hi.
#[derive(Clone, Debug)]
struct Sweep(Vec<usize>);

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
        let Some((lo, hi)) = s.split_once("..") else {
            return Ok(Sweep(vec![num(s)?]));
        };
        let (lo, hi) = (num(lo)?, num(hi)?);
        if lo == 0 || lo > hi {
            return Err(format!("range `{s}` must satisfy 0 < lo <= hi"));
        }
        let mut v = Vec::new();
        let mut x = lo;
        while x < hi {
            v.push(x);
            x *= 2;
        }
        v.push(hi);
        Ok(Sweep(v))
    }
}

enum Failure {
    Usage(String),
    Resource(String),
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Io(_) => Failure::Resource(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::MemoryBudget { .. } | CheckError::TooManyNodes(_) => {
                Failure::Resource(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<WorkloadError> for Failure {
    fn from(e: WorkloadError) -> Self {
        match e {
            WorkloadError::WorkerPanicked => Failure::Resource(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Resource(e.to_string())
    }
}

/// Exit status for a successful run: accepted or rejected.
type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Command::Record(a) => record(a),
        Command::Check(a) => run_check(a),
        Command::Oracle(a) => oracle(a),
        Command::Retime(a) => retime(a),
        Command::Bench(a) => bench(a),
        Command::GenTemplate(a) => template(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Resource(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn model_for(flag: Option<BuiltinModel>, tr: &Trace) -> Result<BuiltinModel, Failure> {
    match flag {
        Some(m) => Ok(m),
        None => BuiltinModel::from_name(&tr.meta.model).map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn record(a: RecordArgs) -> Outcome {
    let cfg = WorkloadConfig {
        model: a.model,
        threads: a.threads,
        ops_per_thread: a.ops,
        seed: a.seed,
        value_universe_size: a.universe,
        bug: a.bug,
        jitter: a.jitter,
        mix: a.mix,
    };
    let tr = record_run(&cfg)?;
    write_trace_file(&tr, &a.output)?;
    println!(
        "recorded {} actions on {} threads to {}",
        tr.len(),
        tr.thread_count(),
        a.output.display()
    );
    Ok(true)
}

fn run_check(a: CheckArgs) -> Outcome {
    let tr = read_trace_file(&a.trace)?;
    let model = model_for(a.model, &tr)?;
    let opts = CheckOptions {
        max_counterexamples: a.max_ce,
        parallelism: a.parallelism.max(1),
        mem_cap_bytes: a.mem_cap.map(|mb| mb.saturating_mul(1 << 20)),
        record_graph: a.export.is_some(),
        view: if a.constant_view {
            ViewMode::Constant
        } else {
            ViewMode::Model
        },
    };
    let out = with_builtin_model!(model, m => check(&tr, &m, &opts))?;
    let exported = match (&a.export, &out.graph) {
        (Some(path), Some(graph)) => {
            export_graph(
                graph,
                &tr,
                &out.verdict,
                BufWriter::new(File::create(path)?),
            )?;
            Some((graph.nodes.len(), path))
        }
        _ => None,
    };
    let mut stdout = io::stdout().lock();
    let printed = report(&mut stdout, &tr, &out.verdict).and_then(|()| match exported {
        Some((n, path)) => writeln!(stdout, "exported {n} nodes to {}", path.display()),
        None => Ok(()),
    });
    // A closed reader (e.g. `| head`) does not change the verdict.
    match printed {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(e.into()),
        _ => {}
    }
    Ok(out.verdict.is_accepted())
}

fn report(w: &mut impl Write, tr: &Trace, v: &Verdict) -> io::Result<()> {
    writeln!(w, "{v}")?;
    let s = v.stats();
    writeln!(
        w,
        "nodes {} transitions {} peak_frontier {} peak_mem_estimate {} wall_ms {:.3}",
        s.nodes,
        s.transitions,
        s.peak_frontier,
        s.peak_mem_bytes,
        s.wall.as_secs_f64() * 1e3
    )?;
    if let Verdict::Rejected {
        counterexamples, ..
    } = v
    {
        for (i, ce) in counterexamples.iter().enumerate() {
            writeln!(w, "counterexample {}: initial {}", i + 1, ce.initial)?;
            for step in &ce.steps {
                writeln!(
                    w,
                    "  {} {} -> {}",
                    step.action,
                    tr.action(step.action),
                    step.state
                )?;
            }
            let stuck: Vec<String> = ce
                .stuck
                .iter()
                .map(|r| format!("{r} {}", tr.action(*r)))
                .collect();
            writeln!(w, "  stuck: {}", stuck.join(", "))?;
        }
    }
    Ok(())
}

fn oracle(a: OracleArgs) -> Outcome {
    let tr = read_trace_file(&a.trace)?;
    let model = model_for(a.model, &tr)?;
    let verdict =
        with_builtin_model!(model, m => oracle_check(&tr, &m, a.bound)).map_err(|e| match e {
            OracleError::BoundExceeded { .. }
            | OracleError::InvalidTrace(_)
            | OracleError::Model(_) => Failure::Usage(e.to_string()),
        })?;
    match verdict {
        OracleVerdict::Accept => println!("ACCEPTED"),
        OracleVerdict::Reject => println!("REJECTED"),
    }
    Ok(verdict == OracleVerdict::Accept)
}

fn retime(a: RetimeArgs) -> Outcome {
    let tr = read_trace_file(&a.trace)?;
    let narrowed = shrink_timeboxes(&tr)?;
    write_trace_file(&narrowed, &a.output)?;
    Ok(true)
}

fn bench(a: BenchArgs) -> Outcome {
    let mut out: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(out, "{SWEEP_HEADER}")?;
    let opts = CheckOptions {
        parallelism: a.parallelism.max(1),
        ..CheckOptions::default()
    };
    for &threads in &a.threads.0 {
        let per_thread: Vec<usize> = match a.ops_per_thread {
            Some(n) => vec![n],
            None => a
                .ops
                .0
                .iter()
                .map(|&ops| (ops / threads.max(1)).max(1))
                .collect(),
        };
        for &ops_per_thread in &per_thread {
            for seed in 0..a.seeds {
                let mut cfg = WorkloadConfig::new(a.model, threads, ops_per_thread, seed);
                cfg.jitter = a.jitter;
                cfg.mix = a.mix.clone().unwrap_or_else(|| sweep_mix(a.model));
                let row = sweep_point(&cfg, &opts).map_err(|e| match e {
                    SweepError::Workload(e) => Failure::from(e),
                    SweepError::Check(e) => Failure::from(e),
                })?;
                writeln!(out, "{row}")?;
                out.flush()?;
            }
        }
    }
    Ok(true)
}

fn template(a: TemplateArgs) -> Outcome {
    let src = with_builtin_model!(a.model, m => emit_fuzzer_template(&m));
    std::fs::write(&a.output, src)?;
    Ok(true)
}
