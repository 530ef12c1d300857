//! Fuzzer for an implementation of the `queue` model.
//!
//! Bind each action to the implementation under test. Wrap only the
//! implementation call in `ctx.timed`; build arguments and results outside.

#![allow(unused_imports, unused_variables, dead_code)]

use boxcheck::value::Value;
use boxcheck::workload::LockQueue;
use boxcheck::workload::{run_fuzzer, CallCtx, FuzzTarget, HarnessConfig, Recorded, WorkloadError};
use boxcheck::Trace;

pub const MODEL: &str = "queue";

/// State shared by every fuzzer thread.
pub struct Target {
    pub queue: LockQueue,
}

impl FuzzTarget for Target {
    fn actions(&self) -> &[&'static str] {
        &["Enqueue", "Dequeue", "DequeueEmpty"]
    }

    fn call(&self, action: &str, ctx: &mut CallCtx<'_>) -> Option<Recorded> {
        match action {
            "Enqueue" => self.enqueue(ctx),
            "Dequeue" => self.dequeue(ctx),
            "DequeueEmpty" => self.dequeue_empty(ctx),
            _ => None,
        }
    }
}

impl Target {
    /// Records `Enqueue(Any)`.
    fn enqueue(&self, ctx: &mut CallCtx<'_>) -> Option<Recorded> {
        let v = Value::Int(ctx.pick());
        let t = ctx.timed(|p| self.queue.enqueue(v.clone(), p));
        Some(Recorded::new("Enqueue", vec![v], &t))
    }

    /// Records `Dequeue(Any)`.
    fn dequeue(&self, ctx: &mut CallCtx<'_>) -> Option<Recorded> {
        let t = ctx.timed(|p| self.queue.dequeue(p));
        Some(match &t.value {
            Some(v) => Recorded::new("Dequeue", vec![v.clone()], &t),
            None => Recorded::new("DequeueEmpty", vec![], &t),
        })
    }

    /// Records `DequeueEmpty()`.
    fn dequeue_empty(&self, ctx: &mut CallCtx<'_>) -> Option<Recorded> {
        // Recorded by the Dequeue binding.
        None
    }
}

/// Runs the fuzzer against `target` and returns the recorded trace.
pub fn record(
    target: &Target,
    threads: usize,
    ops_per_thread: usize,
    seed: u64,
) -> Result<Trace, WorkloadError> {
    let cfg = HarnessConfig::new(MODEL, threads, ops_per_thread, seed);
    run_fuzzer(target, &cfg)
}
