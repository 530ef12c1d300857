//! Recording traces from real concurrent executions.
//!
//! Worker threads issue random operations against a reference structure,
//! each wrapped in a timebox read from one process-wide monotonic clock.
//! Structures can carry one injected bug; the checker is expected to reject
//! traces that exercise it.

mod harness;
pub mod structures;
mod sweep;
mod targets;
mod template;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::BuiltinModel;
use crate::trace::Trace;

pub use harness::{
    now_ns, run_fuzzer, CallCtx, FuzzTarget, HarnessConfig, Jitter, OpMix, Probe, Recorded, Timed,
};
pub use structures::{LockQueue, SegQueue, SnapshotMap};
pub use sweep::{sweep_mix, sweep_point, SweepError, SweepRow, SWEEP_HEADER};
pub use targets::{FifoTarget, MapTarget, QueueTarget};
pub use template::emit_fuzzer_template;

pub const DEFAULT_UNIVERSE: usize = 16;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("bug {bug} does not apply to model {model}")]
    BugModelMismatch { bug: BugId, model: BuiltinModel },
    #[error("invalid workload: {0}")]
    InvalidConfig(String),
    #[error("a worker thread panicked")]
    WorkerPanicked,
}

/// Injectable implementation bugs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BugId {
    /// Dequeue peeks under the lock but removes the head later.
    Q1ReadUnlocked,
    /// Enqueue returns before its element is visible.
    Q2ReturnBeforeLinearized,
    /// Enqueue writes back a stale copy of the queue.
    Q3LostElement,
    /// Find reads the map that writers mutate in place.
    M1ReadMutable,
    /// RangeCount reads a snapshot that is not yet published.
    M2FutureSnapshot,
    /// Failing Insert/Delete decide without the writer lock.
    M3EarlyFailedUpdate,
    /// Bulk dequeue skips a producer's front block.
    S1BatchSplit,
}

impl BugId {
    pub const ALL: [BugId; 7] = [
        BugId::Q1ReadUnlocked,
        BugId::Q2ReturnBeforeLinearized,
        BugId::Q3LostElement,
        BugId::M1ReadMutable,
        BugId::M2FutureSnapshot,
        BugId::M3EarlyFailedUpdate,
        BugId::S1BatchSplit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BugId::Q1ReadUnlocked => "Q1_READ_UNLOCKED",
            BugId::Q2ReturnBeforeLinearized => "Q2_RETURN_BEFORE_LINEARIZED",
            BugId::Q3LostElement => "Q3_LOST_ELEMENT",
            BugId::M1ReadMutable => "M1_READ_MUTABLE",
            BugId::M2FutureSnapshot => "M2_FUTURE_SNAPSHOT",
            BugId::M3EarlyFailedUpdate => "M3_EARLY_FAILED_UPDATE",
            BugId::S1BatchSplit => "S1_BATCH_SPLIT",
        }
    }

    /// The model whose reference structure carries this bug.
    pub fn model(self) -> BuiltinModel {
        match self {
            BugId::Q1ReadUnlocked | BugId::Q2ReturnBeforeLinearized | BugId::Q3LostElement => {
                BuiltinModel::Queue
            }
            BugId::M1ReadMutable | BugId::M2FutureSnapshot | BugId::M3EarlyFailedUpdate => {
                BuiltinModel::OrderedMapRange
            }
            BugId::S1BatchSplit => BuiltinModel::PerProducerFifo,
        }
    }
}

impl fmt::Display for BugId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BugId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown bug `{s}`"))
    }
}

#[derive(Clone, Debug)]
pub struct WorkloadConfig {
    pub model: BuiltinModel,
    pub threads: usize,
    pub ops_per_thread: usize,
    pub seed: u64,
    pub value_universe_size: usize,
    pub bug: Option<BugId>,
    pub jitter: Option<Jitter>,
    pub mix: OpMix,
}

impl WorkloadConfig {
    pub fn new(model: BuiltinModel, threads: usize, ops_per_thread: usize, seed: u64) -> Self {
        WorkloadConfig {
            model,
            threads,
            ops_per_thread,
            seed,
            value_universe_size: DEFAULT_UNIVERSE,
            bug: None,
            jitter: None,
            mix: OpMix::default(),
        }
    }

    pub fn with_bug(mut self, bug: BugId) -> Self {
        self.bug = Some(bug);
        self
    }

    fn harness(&self) -> HarnessConfig {
        HarnessConfig {
            model: self.model.name().to_owned(),
            threads: self.threads,
            ops_per_thread: self.ops_per_thread,
            seed: self.seed,
            value_universe_size: self.value_universe_size,
            jitter: self.jitter,
            mix: self.mix.clone(),
        }
    }
}

/// Records one run of the reference structure for `cfg.model`.
pub fn record_run(cfg: &WorkloadConfig) -> Result<Trace, WorkloadError> {
    if let Some(bug) = cfg.bug {
        if bug.model() != cfg.model {
            return Err(WorkloadError::BugModelMismatch {
                bug,
                model: cfg.model,
            });
        }
    }
    let h = cfg.harness();
    match cfg.model {
        BuiltinModel::Queue => run_fuzzer(&QueueTarget(LockQueue::new(cfg.bug)), &h),
        BuiltinModel::OrderedMapRange => run_fuzzer(&MapTarget(SnapshotMap::new(cfg.bug)), &h),
        BuiltinModel::PerProducerFifo => {
            run_fuzzer(&FifoTarget(SegQueue::new(cfg.threads.max(1), cfg.bug)), &h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearizer::{check, CheckOptions};
    use crate::trace::validate_trace;

    fn accepted(cfg: &WorkloadConfig) -> bool {
        let tr = record_run(cfg).unwrap();
        assert!(validate_trace(&tr).is_empty());
        crate::with_builtin_model!(cfg.model, m => check(&tr, &m, &CheckOptions::default()))
            .unwrap()
            .verdict
            .is_accepted()
    }

    #[test]
    fn bug_names_round_trip() {
        for b in BugId::ALL {
            assert_eq!(b.name().parse::<BugId>().unwrap(), b);
        }
        assert!("Q9".parse::<BugId>().is_err());
    }

    #[test]
    fn bug_must_match_model() {
        let cfg = WorkloadConfig::new(BuiltinModel::Queue, 2, 10, 0).with_bug(BugId::M1ReadMutable);
        assert!(matches!(
            record_run(&cfg),
            Err(WorkloadError::BugModelMismatch { .. })
        ));
    }

    #[test]
    fn zero_threads_is_rejected() {
        let cfg = WorkloadConfig::new(BuiltinModel::Queue, 0, 10, 0);
        assert!(matches!(
            record_run(&cfg),
            Err(WorkloadError::InvalidConfig(_))
        ));
    }

    #[test]
    fn mix_must_name_known_actions() {
        let mut cfg = WorkloadConfig::new(BuiltinModel::Queue, 1, 10, 0);
        cfg.mix = "Insert=2".parse().unwrap();
        assert!(matches!(
            record_run(&cfg),
            Err(WorkloadError::InvalidConfig(_))
        ));
        cfg.mix = "Enqueue=1,Dequeue=0".parse().unwrap();
        let tr = record_run(&cfg).unwrap();
        assert!(tr.iter().all(|(_, a)| a.op == "Enqueue"));
    }

    #[test]
    fn recorded_trace_has_requested_shape() {
        let cfg = WorkloadConfig::new(BuiltinModel::OrderedMapRange, 3, 50, 7);
        let tr = record_run(&cfg).unwrap();
        assert_eq!(tr.thread_count(), 3);
        assert_eq!(tr.len(), 150);
        assert_eq!(tr.meta.seed, Some(7));
        for (_, a) in tr.iter() {
            let r = a.refined_ns.expect("every reference call commits");
            assert!(a.start_ns <= r && r <= a.end_ns);
        }
    }

    #[test]
    fn correct_structures_are_accepted() {
        for model in BuiltinModel::ALL {
            for seed in 0..3 {
                let mut cfg = WorkloadConfig::new(model, 4, 200, seed);
                cfg.jitter = Some(Jitter {
                    probability: 0.05,
                    max_delay_ns: 2_000,
                });
                assert!(accepted(&cfg), "{model} seed {seed}");
            }
        }
    }

    #[test]
    fn every_bug_is_detected() {
        for bug in BugId::ALL {
            let detected = (0..20).any(|seed| {
                !accepted(&WorkloadConfig::new(bug.model(), 4, 1000, seed).with_bug(bug))
            });
            assert!(detected, "{bug} was never detected");
        }
    }
}
