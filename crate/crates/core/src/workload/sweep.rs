//! Record-then-check measurements for the benchmark sweep.

use std::fmt;

use thiserror::Error;

use super::{record_run, OpMix, WorkloadConfig, WorkloadError};
use crate::linearizer::{check, CheckError, CheckOptions};
use crate::model::BuiltinModel;

pub const SWEEP_HEADER: &str =
    "ops,threads,seed,verdict,wall_ms,peak_nodes,peak_frontier,peak_mem_estimate";

/// Operation mix for benchmark runs.
///
/// A uniform queue mix is a balanced random walk whose length grows with the
/// run, and the number of states a pending enqueue can occupy grows with it.
/// Biasing toward dequeues keeps the queue short on long runs.
pub fn sweep_mix(model: BuiltinModel) -> OpMix {
    match model {
        BuiltinModel::Queue => OpMix(vec![("Enqueue".into(), 2), ("Dequeue".into(), 3)]),
        _ => OpMix::default(),
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// One CSV row. `wall_ms` covers `check` only, not recording.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub ops: usize,
    pub threads: usize,
    pub seed: u64,
    pub accepted: bool,
    pub wall_ms: f64,
    /// Nodes resident at the end of the search; every node is retained.
    pub peak_nodes: u64,
    /// Largest single layer.
    pub peak_frontier: usize,
    pub peak_mem_estimate: u64,
}

impl fmt::Display for SweepRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{:.3},{},{},{}",
            self.ops,
            self.threads,
            self.seed,
            if self.accepted {
                "accepted"
            } else {
                "rejected"
            },
            self.wall_ms,
            self.peak_nodes,
            self.peak_frontier,
            self.peak_mem_estimate
        )
    }
}

/// Records `cfg` and checks it. `cfg.ops_per_thread * cfg.threads` is the
/// reported operation count.
pub fn sweep_point(cfg: &WorkloadConfig, opts: &CheckOptions) -> Result<SweepRow, SweepError> {
    let tr = record_run(cfg)?;
    let out = crate::with_builtin_model!(cfg.model, m => check(&tr, &m, opts))?;
    let stats = out.verdict.stats();
    Ok(SweepRow {
        ops: tr.len(),
        threads: cfg.threads,
        seed: cfg.seed,
        accepted: out.verdict.is_accepted(),
        wall_ms: stats.wall.as_secs_f64() * 1e3,
        peak_nodes: stats.nodes,
        peak_frontier: stats.peak_frontier,
        peak_mem_estimate: stats.peak_mem_bytes,
    })
}
