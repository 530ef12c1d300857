//! Timeboxed traces: per-thread sequences of recorded actions.

use std::fmt;

use thiserror::Error;

use crate::value::Value;

mod format;
mod retime;

pub use format::{
    action_from_json, action_to_json, read_trace, read_trace_file, value_from_json, value_to_json,
    write_trace, write_trace_file, FORMAT_VERSION,
};
pub use retime::shrink_timeboxes;

/// One recorded operation and the interval its effect must fall in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeboxedAction {
    pub op: String,
    pub args: Vec<Value>,
    pub thread: u32,
    pub start_ns: u64,
    pub end_ns: u64,
    /// A known commit instant inside the box, if the recorder captured one.
    pub refined_ns: Option<u64>,
}

impl TimeboxedAction {
    pub fn new(
        op: impl Into<String>,
        args: Vec<Value>,
        thread: u32,
        start_ns: u64,
        end_ns: u64,
    ) -> Self {
        TimeboxedAction {
            op: op.into(),
            args,
            thread,
            start_ns,
            end_ns,
            refined_ns: None,
        }
    }

    pub fn with_refined(mut self, refined_ns: u64) -> Self {
        self.refined_ns = Some(refined_ns);
        self
    }

    /// `true` when `self` finished strictly before `other` started.
    pub fn precedes(&self, other: &TimeboxedAction) -> bool {
        self.end_ns < other.start_ns
    }
}

impl fmt::Display for TimeboxedAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.op)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")@[{}, {}]", self.start_ns, self.end_ns)
    }
}

/// Identifies one action by its thread and position in that thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionRef {
    pub thread: u32,
    pub index: u32,
}

impl ActionRef {
    pub fn new(thread: u32, index: u32) -> Self {
        ActionRef { thread, index }
    }
}

impl fmt::Display for ActionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}#{}", self.thread, self.index)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceMeta {
    pub model: String,
    pub seed: Option<u64>,
}

impl TraceMeta {
    pub fn new(model: impl Into<String>) -> Self {
        TraceMeta {
            model: model.into(),
            seed: None,
        }
    }
}

/// Per-thread ordered sequences of timeboxed actions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub meta: TraceMeta,
    threads: Vec<Vec<TimeboxedAction>>,
}

impl Trace {
    pub fn empty(meta: TraceMeta, thread_count: usize) -> Self {
        Trace {
            meta,
            threads: vec![Vec::new(); thread_count],
        }
    }

    /// Wraps already-ordered per-thread sequences. Nothing is validated here;
    /// run [`validate_trace`] before relying on the trace invariants.
    pub fn from_threads(meta: TraceMeta, threads: Vec<Vec<TimeboxedAction>>) -> Self {
        Trace { meta, threads }
    }

    /// Groups actions given in any global order into per-thread sequences
    /// ordered by start time. Actions naming a thread outside
    /// `0..thread_count` are reported as violations.
    pub fn from_actions(
        meta: TraceMeta,
        thread_count: usize,
        actions: impl IntoIterator<Item = TimeboxedAction>,
    ) -> Result<Self, Vec<Violation>> {
        let mut threads = vec![Vec::new(); thread_count];
        let mut bad = Vec::new();
        for a in actions {
            match threads.get_mut(a.thread as usize) {
                Some(seq) => seq.push(a),
                None => bad.push(Violation {
                    thread: a.thread,
                    index: 0,
                    rule: Rule::UnknownThread {
                        declared: thread_count,
                    },
                }),
            }
        }
        if !bad.is_empty() {
            return Err(bad);
        }
        for seq in &mut threads {
            seq.sort_by_key(|a| a.start_ns);
        }
        Ok(Trace { meta, threads })
    }

    pub fn thread_count(&self) -> usize {
        self.threads.len()
    }

    pub fn thread(&self, t: usize) -> &[TimeboxedAction] {
        &self.threads[t]
    }

    pub fn threads(&self) -> &[Vec<TimeboxedAction>] {
        &self.threads
    }

    pub fn get(&self, r: ActionRef) -> Option<&TimeboxedAction> {
        self.threads.get(r.thread as usize)?.get(r.index as usize)
    }

    pub fn action(&self, r: ActionRef) -> &TimeboxedAction {
        &self.threads[r.thread as usize][r.index as usize]
    }

    pub fn len(&self) -> usize {
        self.threads.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All actions with their references, thread by thread.
    pub fn iter(&self) -> impl Iterator<Item = (ActionRef, &TimeboxedAction)> {
        self.threads.iter().enumerate().flat_map(|(t, seq)| {
            seq.iter()
                .enumerate()
                .map(move |(i, a)| (ActionRef::new(t as u32, i as u32), a))
        })
    }

    pub(crate) fn threads_mut(&mut self) -> &mut [Vec<TimeboxedAction>] {
        &mut self.threads
    }
}

/// Per-thread progress through a trace.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VectorTimestamp(Vec<u32>);

impl VectorTimestamp {
    pub fn zero(threads: usize) -> Self {
        VectorTimestamp(vec![0; threads])
    }

    pub fn from_indices(idx: Vec<u32>) -> Self {
        VectorTimestamp(idx)
    }

    pub fn get(&self, thread: usize) -> u32 {
        self.0[thread]
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> u64 {
        self.0.iter().map(|&i| u64::from(i)).sum()
    }

    pub fn advanced(&self, thread: usize) -> Self {
        let mut next = self.clone();
        next.0[thread] += 1;
        next
    }

    pub fn within(&self, tr: &Trace) -> bool {
        self.0.len() == tr.thread_count()
            && self
                .0
                .iter()
                .zip(tr.threads())
                .all(|(&i, seq)| i as usize <= seq.len())
    }

    pub fn is_exhausted(&self, tr: &Trace) -> bool {
        self.0
            .iter()
            .zip(tr.threads())
            .all(|(&i, seq)| i as usize == seq.len())
    }
}

impl fmt::Display for VectorTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A broken trace invariant, located by thread and index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub thread: u32,
    pub index: u32,
    pub rule: Rule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    /// `end_ns < start_ns`.
    EndBeforeStart,
    /// The refined instant lies outside `[start_ns, end_ns]`.
    RefinedOutsideBox,
    /// The box overlaps the previous box of the same thread.
    OverlapsPrevious,
    /// The action's own thread field disagrees with the sequence holding it.
    ThreadMismatch { recorded: u32 },
    /// Thread id outside the declared `0..declared` range.
    UnknownThread { declared: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "thread {} index {}: ", self.thread, self.index)?;
        match &self.rule {
            Rule::EndBeforeStart => f.write_str("end time precedes start time"),
            Rule::RefinedOutsideBox => f.write_str("refined time lies outside the timebox"),
            Rule::OverlapsPrevious => {
                f.write_str("timebox overlaps the previous action of the thread")
            }
            Rule::ThreadMismatch { recorded } => {
                write!(f, "action records thread {recorded}")
            }
            Rule::UnknownThread { declared } => {
                write!(f, "thread id outside the declared {declared} threads")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trace violates {} invariant(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
    #[error("re-timing thread {thread} makes action {second} overlap action {first}")]
    RetimeOverlap {
        thread: u32,
        first: u32,
        second: u32,
    },
}

/// Checks every trace invariant; an empty result means the trace is valid.
pub fn validate_trace(tr: &Trace) -> Vec<Violation> {
    let mut out = Vec::new();
    for (t, seq) in tr.threads().iter().enumerate() {
        let t = t as u32;
        for (i, a) in seq.iter().enumerate() {
            let at = |rule| Violation {
                thread: t,
                index: i as u32,
                rule,
            };
            if a.thread != t {
                out.push(at(Rule::ThreadMismatch { recorded: a.thread }));
            }
            if a.end_ns < a.start_ns {
                out.push(at(Rule::EndBeforeStart));
            }
            if let Some(r) = a.refined_ns {
                if r < a.start_ns || r > a.end_ns {
                    out.push(at(Rule::RefinedOutsideBox));
                }
            }
            if i > 0 && seq[i - 1].end_ns > a.start_ns {
                out.push(at(Rule::OverlapsPrevious));
            }
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn act(op: &str, args: Vec<Value>, thread: u32, s: u64, e: u64) -> TimeboxedAction {
        TimeboxedAction::new(op, args, thread, s, e)
    }

    /// The four-operation queue trace with two overlapping enqueue pairs:
    /// E(1) and E(2) overlap, then E(3) overlaps the final dequeue.
    pub fn overlapping_queue(dequeued: i64) -> Trace {
        let v = Value::Int;
        Trace::from_threads(
            TraceMeta::new("queue"),
            vec![
                vec![act("Enqueue", vec![v(1)], 0, 0, 10)],
                vec![
                    act("Enqueue", vec![v(2)], 1, 2, 12),
                    act("Dequeue", vec![v(dequeued)], 1, 16, 28),
                ],
                vec![act("Enqueue", vec![v(3)], 2, 15, 30)],
            ],
        )
    }
}
