//! The checking engine.
//!
//! The search walks a graph whose nodes are `(vector timestamp, view of the
//! model state)` pairs, one breadth-first layer per linearized action. A
//! vector timestamp records how far each thread has progressed, so every node
//! at depth `d` has consumed exactly `d` actions, and two interleavings that
//! reach the same model state over the same set of actions are merged.
//!
//! From a node, the candidate next actions are the first unconsumed action of
//! every thread. A candidate is *viable* unless some other candidate ended
//! strictly before it started; equal timestamps count as concurrent.

use std::fmt;
use std::time::Duration;

use thiserror::Error;

use crate::model::ModelError;
use crate::trace::{ActionRef, Trace, VectorTimestamp, Violation};
use crate::value::Value;

mod graph;
mod search;
mod witness;

pub use graph::{
    export_graph, read_export, ExportDoc, GraphEdge, GraphNode, StateGraph, EXPORT_VERSION,
};
pub use search::{check, check_with_view, CheckOutcome};
pub use witness::replay_witness;

/// How the search decides that two model states are the same node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ViewMode {
    /// The model's own [`crate::Model::view`].
    #[default]
    Model,
    /// Every state has the same fingerprint. Maximally lossy; only useful to
    /// demonstrate that a bad view can reject but never wrongly accept.
    Constant,
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    /// Upper bound on counterexample paths reported for a rejection.
    pub max_counterexamples: usize,
    /// Worker threads used to expand a layer. `1` expands sequentially.
    pub parallelism: usize,
    /// Abort with [`CheckError::MemoryBudget`] once the estimated footprint
    /// of the search exceeds this many bytes.
    pub mem_cap_bytes: Option<u64>,
    /// Keep every node and edge so the run can be exported.
    pub record_graph: bool,
    pub view: ViewMode,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            max_counterexamples: 10,
            parallelism: 1,
            mem_cap_bytes: None,
            record_graph: false,
            view: ViewMode::Model,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Distinct nodes created, roots included.
    pub nodes: u64,
    /// Successor transitions generated, merged ones included.
    pub transitions: u64,
    /// Largest number of nodes held in one layer.
    pub peak_frontier: usize,
    /// Deepest layer reached.
    pub max_depth: u64,
    /// Estimated peak bytes held by the search structures.
    pub peak_mem_bytes: u64,
    pub wall: Duration,
}

/// One step of a counterexample path and the state it produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathStep {
    pub action: ActionRef,
    pub state: Value,
}

/// A longest non-failing interpretation of a rejected trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub initial: Value,
    pub steps: Vec<PathStep>,
    /// Actions that were viable at the end of the path, none of which the
    /// model accepts from the final state.
    pub stuck: Vec<ActionRef>,
}

impl Counterexample {
    pub fn final_state(&self) -> &Value {
        self.steps.last().map_or(&self.initial, |s| &s.state)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accepted {
        /// A total order of every action that replays through the model.
        witness: Vec<ActionRef>,
        final_state: Value,
        stats: Stats,
    },
    Rejected {
        max_depth: u64,
        counterexamples: Vec<Counterexample>,
        stats: Stats,
    },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted { .. })
    }

    pub fn stats(&self) -> &Stats {
        match self {
            Verdict::Accepted { stats, .. } | Verdict::Rejected { stats, .. } => stats,
        }
    }

    /// Depth reached: the trace length when accepted.
    pub fn max_depth(&self) -> u64 {
        match self {
            Verdict::Accepted { witness, .. } => witness.len() as u64,
            Verdict::Rejected { max_depth, .. } => *max_depth,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accepted {
                witness,
                final_state,
                stats,
            } => write!(
                f,
                "ACCEPTED: {} actions linearized, final state {final_state} ({} nodes)",
                witness.len(),
                stats.nodes
            ),
            Verdict::Rejected {
                max_depth,
                counterexamples,
                stats,
            } => write!(
                f,
                "REJECTED: max_depth {max_depth}, {} counterexample(s) ({} nodes)",
                counterexamples.len(),
                stats.nodes
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("trace is invalid: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    InvalidTrace(Vec<Violation>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("vector timestamp {0} is outside the trace bounds")]
    OutOfBounds(VectorTimestamp),
    #[error("memory budget of {budget} bytes exceeded at depth {} after {} nodes", .stats.max_depth, .stats.nodes)]
    MemoryBudget { budget: u64, stats: Stats },
    #[error("search exceeded {0} nodes")]
    TooManyNodes(u64),
}

/// Start/end times laid out per thread for the hot path.
pub(crate) struct Timeline {
    starts: Vec<Vec<u64>>,
    ends: Vec<Vec<u64>>,
}

impl Timeline {
    pub(crate) fn new(tr: &Trace) -> Self {
        Timeline {
            starts: tr
                .threads()
                .iter()
                .map(|s| s.iter().map(|a| a.start_ns).collect())
                .collect(),
            ends: tr
                .threads()
                .iter()
                .map(|s| s.iter().map(|a| a.end_ns).collect())
                .collect(),
        }
    }

    /// Threads whose next action is viable at `vt`, in ascending order.
    pub(crate) fn viable(&self, vt: &[u32], out: &mut Vec<u32>) {
        out.clear();
        let mut min = u64::MAX;
        let mut min_thread = usize::MAX;
        let mut second = u64::MAX;
        for (t, &i) in vt.iter().enumerate() {
            if let Some(&e) = self.ends[t].get(i as usize) {
                if e < min {
                    second = min;
                    min = e;
                    min_thread = t;
                } else if e < second {
                    second = e;
                }
            }
        }
        for (t, &i) in vt.iter().enumerate() {
            if let Some(&s) = self.starts[t].get(i as usize) {
                let earliest_other_end = if t == min_thread { second } else { min };
                if earliest_other_end >= s {
                    out.push(t as u32);
                }
            }
        }
    }
}

/// The actions that may be linearized next from `vt`.
pub fn viable_actions(tr: &Trace, vt: &VectorTimestamp) -> Result<Vec<ActionRef>, CheckError> {
    if !vt.within(tr) {
        return Err(CheckError::OutOfBounds(vt.clone()));
    }
    let mut threads = Vec::new();
    Timeline::new(tr).viable(vt.indices(), &mut threads);
    Ok(threads
        .into_iter()
        .map(|t| ActionRef::new(t, vt.get(t as usize)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::fixtures::{act, overlapping_queue};
    use crate::trace::TraceMeta;

    /// Direct transcription of the admissibility rule over all candidates.
    fn viable_by_definition(tr: &Trace, vt: &VectorTimestamp) -> Vec<ActionRef> {
        let candidates: Vec<ActionRef> = (0..tr.thread_count())
            .filter(|&t| (vt.get(t) as usize) < tr.thread(t).len())
            .map(|t| ActionRef::new(t as u32, vt.get(t)))
            .collect();
        candidates
            .iter()
            .copied()
            .filter(|&a1| {
                !candidates
                    .iter()
                    .any(|&a2| a2 != a1 && tr.action(a2).end_ns < tr.action(a1).start_ns)
            })
            .collect()
    }

    #[test]
    fn overlapping_enqueues_are_both_viable_at_start() {
        let tr = overlapping_queue(3);
        let v = viable_actions(&tr, &VectorTimestamp::zero(3)).unwrap();
        // E(3) on thread 2 starts after both opening enqueues end.
        assert_eq!(v, vec![ActionRef::new(0, 0), ActionRef::new(1, 0)]);
    }

    #[test]
    fn exhausted_trace_has_nothing_viable() {
        let tr = overlapping_queue(3);
        let vt = VectorTimestamp::from_indices(vec![1, 2, 1]);
        assert!(viable_actions(&tr, &vt).unwrap().is_empty());
    }

    #[test]
    fn single_thread_offers_its_next_action() {
        let tr = Trace::from_threads(
            TraceMeta::new("queue"),
            vec![vec![act("A", vec![], 0, 0, 1), act("B", vec![], 0, 5, 9)]],
        );
        let vt = VectorTimestamp::from_indices(vec![1]);
        assert_eq!(
            viable_actions(&tr, &vt).unwrap(),
            vec![ActionRef::new(0, 1)]
        );
    }

    #[test]
    fn equal_timestamps_are_concurrent() {
        let tr = Trace::from_threads(
            TraceMeta::new("queue"),
            vec![
                vec![act("A", vec![], 0, 0, 5)],
                vec![act("B", vec![], 1, 5, 6)],
            ],
        );
        assert_eq!(
            viable_actions(&tr, &VectorTimestamp::zero(2))
                .unwrap()
                .len(),
            2
        );
    }

    #[test]
    fn out_of_bounds_timestamp_is_rejected() {
        let tr = overlapping_queue(3);
        let vt = VectorTimestamp::from_indices(vec![2, 0, 0]);
        assert!(matches!(
            viable_actions(&tr, &vt),
            Err(CheckError::OutOfBounds(_))
        ));
    }

    #[test]
    fn fast_viability_matches_the_definition() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let threads = rng.gen_range(1..5);
            let seqs: Vec<Vec<_>> = (0..threads)
                .map(|t| {
                    let mut clock = 0;
                    (0..rng.gen_range(0..4))
                        .map(|_| {
                            let s = clock + rng.gen_range(0..4);
                            let e = s + rng.gen_range(0..4);
                            clock = e;
                            act("A", vec![], t as u32, s, e)
                        })
                        .collect()
                })
                .collect();
            let tr = Trace::from_threads(TraceMeta::new("q"), seqs);
            let vt = VectorTimestamp::from_indices(
                tr.threads()
                    .iter()
                    .map(|s| rng.gen_range(0..=s.len() as u32))
                    .collect(),
            );
            assert_eq!(
                viable_actions(&tr, &vt).unwrap(),
                viable_by_definition(&tr, &vt)
            );
        }
    }
}
