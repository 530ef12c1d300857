//! Inputs shared by the benchmarks under `benches/`.

use boxcheck::workload::{record_run, WorkloadConfig};
use boxcheck::{BuiltinModel, TimeboxedAction, Trace, TraceMeta, Value};

/// A recorded run of the reference structure for `model`, without jitter.
pub fn recorded(model: BuiltinModel, threads: usize, total_ops: usize, seed: u64) -> Trace {
    let cfg = WorkloadConfig::new(model, threads, total_ops / threads, seed);
    record_run(&cfg).expect("reference run")
}

/// `n` enqueues on `n` threads, all overlapping.
pub fn overlapping_enqueues(n: u32) -> Trace {
    let threads = (0..n)
        .map(|t| {
            vec![TimeboxedAction::new(
                "Enqueue",
                vec![Value::Int(i64::from(t))],
                t,
                0,
                100,
            )]
        })
        .collect();
    Trace::from_threads(TraceMeta::new("queue"), threads)
}
