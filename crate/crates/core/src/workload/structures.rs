//! Reference concurrent structures, each with optional injected bugs.

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Mutex, RwLock};

use super::harness::Probe;
use super::BugId;
use crate::value::Value;

/// Mutex-guarded FIFO queue.
#[derive(Debug, Default)]
pub struct LockQueue {
    inner: Mutex<VecDeque<Value>>,
    /// Enqueued but not yet visible elements.
    pending: Mutex<Vec<Value>>,
    bug: Option<BugId>,
}

impl LockQueue {
    pub fn new(bug: Option<BugId>) -> Self {
        LockQueue {
            bug,
            ..Self::default()
        }
    }

    pub fn enqueue(&self, v: Value, p: &mut Probe<'_>) {
        p.yield_point();
        match self.bug {
            Some(BugId::Q2ReturnBeforeLinearized) => {
                let mut pending = self.pending.lock().unwrap();
                if !pending.is_empty() {
                    let mut q = self.inner.lock().unwrap();
                    q.extend(pending.drain(..));
                }
                pending.push(v);
                p.commit();
            }
            Some(BugId::Q3LostElement) => {
                let mut copy = self.inner.lock().unwrap().clone();
                copy.push_back(v);
                p.window();
                *self.inner.lock().unwrap() = copy;
                p.commit();
            }
            _ => {
                let mut q = self.inner.lock().unwrap();
                q.push_back(v);
                p.commit();
            }
        }
    }

    pub fn dequeue(&self, p: &mut Probe<'_>) -> Option<Value> {
        p.yield_point();
        if self.bug == Some(BugId::Q1ReadUnlocked) {
            let head = self.inner.lock().unwrap().front().cloned();
            p.commit();
            p.window();
            self.inner.lock().unwrap().pop_front();
            return head;
        }
        let mut q = self.inner.lock().unwrap();
        let head = q.pop_front();
        p.commit();
        head
    }
}

type Snapshot = Arc<BTreeMap<i64, Value>>;

/// Ordered map with serialized writers and snapshot readers.
#[derive(Debug, Default)]
pub struct SnapshotMap {
    writer: Mutex<()>,
    mutable: RwLock<BTreeMap<i64, Value>>,
    published: RwLock<Snapshot>,
    /// Next snapshot, built before it is published.
    staged: RwLock<Option<Snapshot>>,
    bug: Option<BugId>,
}

impl SnapshotMap {
    pub fn new(bug: Option<BugId>) -> Self {
        SnapshotMap {
            bug,
            ..Self::default()
        }
    }

    fn snapshot(&self) -> Snapshot {
        self.published.read().unwrap().clone()
    }

    /// Returns whether `k` was absent and is now bound to `v`.
    pub fn insert(&self, k: i64, v: Value, p: &mut Probe<'_>) -> bool {
        self.update(k, false, p, |m| match m.entry(k) {
            std::collections::btree_map::Entry::Occupied(_) => false,
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(v);
                true
            }
        })
    }

    /// Returns whether `k` was present and is now removed.
    pub fn delete(&self, k: i64, p: &mut Probe<'_>) -> bool {
        self.update(k, true, p, |m| m.remove(&k).is_some())
    }

    /// `needs_present` says whether the update succeeds on a present key.
    fn update(
        &self,
        k: i64,
        needs_present: bool,
        p: &mut Probe<'_>,
        apply: impl FnOnce(&mut BTreeMap<i64, Value>) -> bool,
    ) -> bool {
        p.yield_point();
        if self.bug == Some(BugId::M3EarlyFailedUpdate) {
            // Fails fast without the writer lock.
            let present = self.mutable.read().unwrap().contains_key(&k);
            if present != needs_present {
                p.commit();
                return false;
            }
        }
        let _w = self.writer.lock().unwrap();
        let mut m = self.mutable.write().unwrap();
        let changed = apply(&mut m);
        if !changed {
            p.commit();
            return false;
        }
        let next: Snapshot = Arc::new(m.clone());
        drop(m);
        *self.staged.write().unwrap() = Some(next.clone());
        p.window();
        *self.published.write().unwrap() = next;
        p.commit();
        *self.staged.write().unwrap() = None;
        true
    }

    pub fn find(&self, k: i64, p: &mut Probe<'_>) -> Option<Value> {
        p.yield_point();
        let found = if self.bug == Some(BugId::M1ReadMutable) {
            self.mutable.read().unwrap().get(&k).cloned()
        } else {
            self.snapshot().get(&k).cloned()
        };
        p.commit();
        found
    }

    /// Counts keys in `lo..=hi`.
    pub fn range_count(&self, lo: i64, hi: i64, p: &mut Probe<'_>) -> usize {
        p.yield_point();
        let snap = match self.bug {
            Some(BugId::M2FutureSnapshot) => self
                .staged
                .read()
                .unwrap()
                .clone()
                .unwrap_or_else(|| self.snapshot()),
            _ => self.snapshot(),
        };
        p.commit();
        if lo > hi {
            return 0;
        }
        snap.range(lo..=hi).count()
    }
}

/// Elements per block in a producer subqueue.
pub const BLOCK: usize = 2;

/// Multi-producer queue with one FIFO subqueue per producer.
#[derive(Debug)]
pub struct SegQueue {
    /// Shared for single-subqueue work, exclusive to observe emptiness.
    gate: RwLock<()>,
    subqueues: Vec<Mutex<VecDeque<Value>>>,
    bug: Option<BugId>,
}

impl SegQueue {
    pub fn new(producers: usize, bug: Option<BugId>) -> Self {
        SegQueue {
            gate: RwLock::new(()),
            subqueues: (0..producers)
                .map(|_| Mutex::new(VecDeque::new()))
                .collect(),
            bug,
        }
    }

    pub fn producers(&self) -> usize {
        self.subqueues.len()
    }

    pub fn enqueue_bulk(&self, producer: usize, elems: Vec<Value>, p: &mut Probe<'_>) {
        p.yield_point();
        let _g = self.gate.read().unwrap();
        let mut q = self.subqueues[producer].lock().unwrap();
        q.extend(elems);
        p.commit();
    }

    /// Takes up to `max` elements from one subqueue, scanning from `from`.
    /// An empty result means every subqueue was empty at one instant.
    pub fn dequeue_bulk(&self, from: usize, max: usize, p: &mut Probe<'_>) -> Vec<Value> {
        p.yield_point();
        let n = self.subqueues.len();
        {
            let _g = self.gate.read().unwrap();
            for i in 0..n {
                let mut q = self.subqueues[(from + i) % n].lock().unwrap();
                if !q.is_empty() {
                    let got = self.take(&mut q, max);
                    p.commit();
                    return got;
                }
            }
        }
        let _g = self.gate.write().unwrap();
        for i in 0..n {
            let mut q = self.subqueues[(from + i) % n].lock().unwrap();
            if !q.is_empty() {
                let got = self.take(&mut q, max);
                p.commit();
                return got;
            }
        }
        p.commit();
        Vec::new()
    }

    fn take(&self, q: &mut VecDeque<Value>, max: usize) -> Vec<Value> {
        if self.bug == Some(BugId::S1BatchSplit) && max > BLOCK && q.len() > BLOCK {
            // Skips the front block and drains from the next one.
            let end = q.len().min(BLOCK + max);
            return q.drain(BLOCK..end).collect();
        }
        let k = q.len().min(max);
        q.drain(..k).collect()
    }
}
