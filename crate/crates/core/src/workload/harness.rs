//! The multithreaded recorder shared by built-in and generated fuzzers.

use std::sync::{Barrier, OnceLock};
use std::thread;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::WorkloadError;
use crate::trace::{TimeboxedAction, Trace, TraceMeta};
use crate::value::Value;

/// Nanoseconds on the process-wide monotonic clock.
pub fn now_ns() -> u64 {
    static BASE: OnceLock<Instant> = OnceLock::new();
    BASE.get_or_init(Instant::now).elapsed().as_nanos() as u64
}

/// Seeded scheduling noise injected at yield points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jitter {
    /// Chance that a yield point delays at all.
    pub probability: f64,
    pub max_delay_ns: u64,
}

impl std::str::FromStr for Jitter {
    type Err = String;

    /// Parses `probability,max_delay_ns`, e.g. `0.05,20000`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, d) = s
            .split_once(',')
            .ok_or_else(|| format!("expected `probability,max_ns`, got `{s}`"))?;
        let probability: f64 = p
            .trim()
            .parse()
            .map_err(|e| format!("bad probability: {e}"))?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(format!("probability {probability} is outside [0, 1]"));
        }
        let max_delay_ns = d.trim().parse().map_err(|e| format!("bad delay: {e}"))?;
        Ok(Jitter {
            probability,
            max_delay_ns,
        })
    }
}

/// Relative action frequencies. Unlisted actions weigh 1; empty is uniform.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpMix(pub Vec<(String, u32)>);

impl OpMix {
    pub fn weight(&self, action: &str) -> u32 {
        self.0
            .iter()
            .find(|(a, _)| a == action)
            .map_or(1, |&(_, w)| w)
    }
}

impl std::str::FromStr for OpMix {
    type Err = String;

    /// Parses `Action=weight,...`, e.g. `Enqueue=2,Dequeue=3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let (a, w) = p
                    .split_once('=')
                    .ok_or_else(|| format!("expected `Action=weight`, got `{p}`"))?;
                let w = w
                    .trim()
                    .parse()
                    .map_err(|e| format!("bad weight for {a}: {e}"))?;
                Ok((a.trim().to_owned(), w))
            })
            .collect::<Result<_, _>>()
            .map(OpMix)
    }
}

/// Per-thread source of jitter delays.
pub struct Yielder {
    jitter: Option<Jitter>,
    rng: ChaCha8Rng,
}

impl Yielder {
    fn new(jitter: Option<Jitter>, seed: u64, thread: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2 * u64::from(thread) + 1);
        Yielder { jitter, rng }
    }

    pub fn point(&mut self) {
        let Some(j) = self.jitter else { return };
        if j.max_delay_ns == 0 || !self.rng.gen_bool(j.probability) {
            return;
        }
        // Spins rather than sleeps so the delay stays a micro-delay.
        let until = Instant::now() + Duration::from_nanos(self.rng.gen_range(0..=j.max_delay_ns));
        while Instant::now() < until {
            std::hint::spin_loop();
        }
    }
}

/// Handle passed into a structure call while its timebox is open.
pub struct Probe<'a> {
    yielder: &'a mut Yielder,
    refined: Option<u64>,
}

impl Probe<'_> {
    /// Marks the instant the call's effect became visible.
    pub fn commit(&mut self) {
        self.refined = Some(now_ns());
    }

    /// An annotated scheduling point; may delay under jitter.
    pub fn yield_point(&mut self) {
        self.yielder.point();
    }

    /// A race window: always offers the CPU to other threads.
    pub fn window(&mut self) {
        thread::yield_now();
        self.yielder.point();
    }
}

/// Result of a timed call.
pub struct Timed<R> {
    pub value: R,
    pub start_ns: u64,
    pub end_ns: u64,
    pub refined_ns: Option<u64>,
}

/// Per-thread context handed to [`FuzzTarget::call`].
pub struct CallCtx<'a> {
    pub thread: u32,
    pub rng: &'a mut ChaCha8Rng,
    yielder: &'a mut Yielder,
    universe: i64,
}

impl CallCtx<'_> {
    /// A value drawn uniformly from the configured universe.
    pub fn pick(&mut self) -> i64 {
        self.rng.gen_range(0..self.universe)
    }

    pub fn universe(&self) -> i64 {
        self.universe
    }

    /// Runs `f` inside a timebox. Keep argument construction and result
    /// formatting outside of `f`.
    pub fn timed<R>(&mut self, f: impl FnOnce(&mut Probe<'_>) -> R) -> Timed<R> {
        let mut probe = Probe {
            yielder: &mut *self.yielder,
            refined: None,
        };
        let start_ns = now_ns();
        let value = f(&mut probe);
        let end_ns = now_ns();
        Timed {
            value,
            start_ns,
            end_ns,
            refined_ns: probe.refined,
        }
    }
}

/// One recorded operation as produced by a fuzzer binding.
#[derive(Clone, Debug)]
pub struct Recorded {
    pub op: &'static str,
    pub args: Vec<Value>,
    pub start_ns: u64,
    pub end_ns: u64,
    pub refined_ns: Option<u64>,
}

impl Recorded {
    pub fn new<R>(op: &'static str, args: Vec<Value>, timed: &Timed<R>) -> Self {
        Recorded {
            op,
            args,
            start_ns: timed.start_ns,
            end_ns: timed.end_ns,
            refined_ns: timed.refined_ns,
        }
    }
}

/// Glue between the harness and an implementation under test.
pub trait FuzzTarget: Sync {
    /// Actions the harness picks among.
    fn actions(&self) -> &[&'static str];

    /// Performs one action. Returns `None` when the action is not bound.
    fn call(&self, action: &str, ctx: &mut CallCtx<'_>) -> Option<Recorded>;
}

#[derive(Clone, Debug)]
pub struct HarnessConfig {
    pub model: String,
    pub threads: usize,
    pub ops_per_thread: usize,
    pub seed: u64,
    pub value_universe_size: usize,
    pub jitter: Option<Jitter>,
    pub mix: OpMix,
}

impl HarnessConfig {
    pub fn new(model: impl Into<String>, threads: usize, ops_per_thread: usize, seed: u64) -> Self {
        HarnessConfig {
            model: model.into(),
            threads,
            ops_per_thread,
            seed,
            value_universe_size: super::DEFAULT_UNIVERSE,
            jitter: None,
            mix: OpMix::default(),
        }
    }
}

/// Runs `cfg.threads` workers against `target` and merges their logs.
pub fn run_fuzzer<T: FuzzTarget>(target: &T, cfg: &HarnessConfig) -> Result<Trace, WorkloadError> {
    if cfg.threads == 0 {
        return Err(WorkloadError::InvalidConfig(
            "threads must be at least 1".into(),
        ));
    }
    if cfg.value_universe_size == 0 {
        return Err(WorkloadError::InvalidConfig(
            "value universe must be non-empty".into(),
        ));
    }
    let actions = target.actions();
    if let Some((a, _)) = cfg
        .mix
        .0
        .iter()
        .find(|(a, _)| !actions.contains(&a.as_str()))
    {
        return Err(WorkloadError::InvalidConfig(format!(
            "mix names unknown action `{a}`"
        )));
    }
    let choice = WeightedIndex::new(actions.iter().map(|a| cfg.mix.weight(a)))
        .map_err(|e| WorkloadError::InvalidConfig(format!("action weights: {e}")))?;
    now_ns();
    let barrier = Barrier::new(cfg.threads);
    let logs: Vec<Vec<Recorded>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.threads as u32)
            .map(|thread| {
                let (barrier, choice) = (&barrier, &choice);
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(2 * u64::from(thread));
                    let mut yielder = Yielder::new(cfg.jitter, cfg.seed, thread);
                    let mut log = Vec::with_capacity(cfg.ops_per_thread);
                    barrier.wait();
                    for _ in 0..cfg.ops_per_thread {
                        let action = actions[choice.sample(&mut rng)];
                        let mut ctx = CallCtx {
                            thread,
                            rng: &mut rng,
                            yielder: &mut yielder,
                            universe: cfg.value_universe_size as i64,
                        };
                        if let Some(rec) = target.call(action, &mut ctx) {
                            log.push(rec);
                        }
                        yielder.point();
                    }
                    log
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().map_err(|_| WorkloadError::WorkerPanicked))
            .collect::<Result<Vec<_>, _>>()
    })?;

    // Serialization happens here, after every timebox has closed.
    let threads = logs
        .into_iter()
        .enumerate()
        .map(|(t, log)| {
            log.into_iter()
                .map(|r| TimeboxedAction {
                    op: r.op.to_owned(),
                    args: r.args,
                    thread: t as u32,
                    start_ns: r.start_ns,
                    end_ns: r.end_ns,
                    refined_ns: r.refined_ns,
                })
                .collect()
        })
        .collect();
    let mut meta = TraceMeta::new(cfg.model.clone());
    meta.seed = Some(cfg.seed);
    Ok(Trace::from_threads(meta, threads))
}
