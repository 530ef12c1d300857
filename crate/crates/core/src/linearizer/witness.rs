use std::collections::HashSet;

use crate::model::Model;
use crate::trace::{ActionRef, Trace};

/// Independently validates a claimed linearization.
///
/// Returns `true` iff `witness` names every action exactly once, keeps each
/// thread's order, never places an action after one that ended before it
/// started, and replays through `model` from some initial state.
pub fn replay_witness<M: Model>(tr: &Trace, model: &M, witness: &[ActionRef]) -> bool {
    if witness.len() != tr.len() {
        return false;
    }
    let mut next = vec![0u32; tr.thread_count()];
    let mut latest_start = None::<u64>;
    for r in witness {
        let Some(expected) = next.get_mut(r.thread as usize) else {
            return false;
        };
        // Per-thread order, which also rules out duplicates and gaps.
        if r.index != *expected {
            return false;
        }
        *expected += 1;
        let Some(a) = tr.get(*r) else {
            return false;
        };
        // Some earlier-placed action started after this one ended.
        if latest_start.is_some_and(|s| a.end_ns < s) {
            return false;
        }
        latest_start = Some(latest_start.map_or(a.start_ns, |s| s.max(a.start_ns)));
    }

    let mut states: HashSet<M::State> = model.initial_states().into_iter().collect();
    for r in witness {
        let a = tr.action(*r);
        let mut succ = HashSet::new();
        for s in &states {
            match model.step(s, &a.op, &a.args) {
                Ok(next) => succ.extend(next),
                Err(_) => return false,
            }
        }
        if succ.is_empty() {
            return false;
        }
        states = succ;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearizer::{check, CheckOptions, Verdict};
    use crate::model::AtomicQueue;
    use crate::trace::fixtures::overlapping_queue;

    fn r(t: u32, i: u32) -> ActionRef {
        ActionRef::new(t, i)
    }

    #[test]
    fn accepted_witness_replays() {
        let tr = overlapping_queue(2);
        let Verdict::Accepted { witness, .. } = check(&tr, &AtomicQueue, &CheckOptions::default())
            .unwrap()
            .verdict
        else {
            panic!("expected acceptance");
        };
        assert!(replay_witness(&tr, &AtomicQueue, &witness));
    }

    #[test]
    fn thread_order_violation_is_refused() {
        let tr = overlapping_queue(2);
        // Dequeue of thread 1 before its own enqueue.
        assert!(!replay_witness(
            &tr,
            &AtomicQueue,
            &[r(1, 1), r(1, 0), r(0, 0), r(2, 0)]
        ));
    }

    #[test]
    fn real_time_violation_is_refused() {
        let tr = overlapping_queue(2);
        // E(3) starts at 15, after E(1) ended at 10, yet is placed first.
        assert!(!replay_witness(
            &tr,
            &AtomicQueue,
            &[r(2, 0), r(1, 0), r(0, 0), r(1, 1)]
        ));
        assert!(replay_witness(
            &tr,
            &AtomicQueue,
            &[r(1, 0), r(0, 0), r(1, 1), r(2, 0)]
        ));
    }

    #[test]
    fn illegal_sequence_or_wrong_length_is_refused() {
        let tr = overlapping_queue(3);
        assert!(!replay_witness(
            &tr,
            &AtomicQueue,
            &[r(0, 0), r(1, 0), r(2, 0), r(1, 1)]
        ));
        assert!(!replay_witness(&tr, &AtomicQueue, &[r(0, 0)]));
    }
}
