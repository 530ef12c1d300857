use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rayon::prelude::*;

use super::graph::{GraphEdge, GraphNode, StateGraph};
use super::{
    CheckError, CheckOptions, Counterexample, PathStep, Stats, Timeline, Verdict, ViewMode,
};
use crate::model::{check_trace_signature, Model};
use crate::trace::{validate_trace, ActionRef, Trace, VectorTimestamp};
use crate::value::digest_bytes;

const NO_PARENT: u32 = u32::MAX;
const CHAIN_END: u32 = u32::MAX;

/// Arena record. Only the first parent is kept: it is the edge that
/// produced the node's representative state.
#[derive(Clone, Copy)]
struct NodeRec {
    parent: u32,
    /// Thread of the incoming action; for roots, the initial-state index.
    via: u32,
    digest: u64,
}

struct FrontierNode<S> {
    id: u32,
    vt: Box<[u32]>,
    fingerprint: Vec<u8>,
    state: S,
}

struct Successor<S> {
    thread: u32,
    digest: u64,
    fingerprint: Vec<u8>,
    state: S,
}

pub struct CheckOutcome {
    pub verdict: Verdict,
    /// Present when [`CheckOptions::record_graph`] was set.
    pub graph: Option<StateGraph>,
}

/// Decides whether `tr` linearizes against `model`.
pub fn check<M: Model>(
    tr: &Trace,
    model: &M,
    opts: &CheckOptions,
) -> Result<CheckOutcome, CheckError> {
    match opts.view {
        ViewMode::Model => check_with_view(tr, model, opts, |s| model.view(s)),
        ViewMode::Constant => check_with_view(tr, model, opts, |_| Vec::new()),
    }
}

/// [`check`] with a caller-supplied view. A lossy view may cause spurious
/// rejections but cannot cause a spurious acceptance: successors are always
/// computed from a state that was genuinely reached.
pub fn check_with_view<M, V>(
    tr: &Trace,
    model: &M,
    opts: &CheckOptions,
    view: V,
) -> Result<CheckOutcome, CheckError>
where
    M: Model,
    V: Fn(&M::State) -> Vec<u8> + Sync,
{
    let violations = validate_trace(tr);
    if !violations.is_empty() {
        return Err(CheckError::InvalidTrace(violations));
    }
    check_trace_signature(model, tr)?;

    let pool = if opts.parallelism > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.parallelism)
                .build()
                .expect("failed to build worker pool"),
        )
    } else {
        None
    };
    let mut search = Search {
        tr,
        model,
        view: &view,
        opts,
        timeline: Timeline::new(tr),
        arena: Vec::new(),
        graph: opts.record_graph.then(StateGraph::default),
        edge_seen: HashSet::new(),
        stats: Stats::default(),
        started: Instant::now(),
    };
    let verdict = match &pool {
        Some(pool) => pool.install(|| search.run()),
        None => search.run(),
    }?;
    Ok(CheckOutcome {
        verdict,
        graph: search.graph,
    })
}

struct Search<'a, M: Model, V> {
    tr: &'a Trace,
    model: &'a M,
    view: &'a V,
    opts: &'a CheckOptions,
    timeline: Timeline,
    arena: Vec<NodeRec>,
    graph: Option<StateGraph>,
    edge_seen: HashSet<(u32, u32, u32)>,
    stats: Stats,
    started: Instant,
}

impl<M, V> Search<'_, M, V>
where
    M: Model,
    V: Fn(&M::State) -> Vec<u8> + Sync,
{
    fn run(&mut self) -> Result<Verdict, CheckError> {
        let total = self.tr.len() as u64;
        let threads = self.tr.thread_count();

        let mut frontier: Vec<FrontierNode<M::State>> = Vec::new();
        let mut seen_roots: HashSet<Vec<u8>> = HashSet::new();
        let zero: Box<[u32]> = vec![0; threads].into_boxed_slice();
        for (i, state) in self.model.initial_states().into_iter().enumerate() {
            let fingerprint = (self.view)(&state);
            if !seen_roots.insert(fingerprint.clone()) {
                continue;
            }
            let id = self.push_node(
                NO_PARENT,
                i as u32,
                digest_bytes(&fingerprint),
                &zero,
                0,
                &state,
            )?;
            if let Some(g) = &mut self.graph {
                g.roots.push(id);
            }
            frontier.push(FrontierNode {
                id,
                vt: zero.clone(),
                fingerprint,
                state,
            });
        }
        self.note_layer(&frontier)?;
        if total == 0 {
            if let Some(root) = frontier.first() {
                return Ok(self.accept(root.id, &root.state));
            }
        }

        let mut depth = 0u64;
        loop {
            let expansions = self.expand_layer(&frontier)?;
            let mut next: Vec<FrontierNode<M::State>> = Vec::new();
            // Buckets by key digest; `chain` links nodes sharing a bucket.
            let mut index: HashMap<u64, u32> = HashMap::new();
            let mut chain: Vec<u32> = Vec::new();
            let mut vt = vec![0u32; threads];
            for (parent, succs) in frontier.iter().zip(expansions) {
                for succ in succs {
                    self.stats.transitions += 1;
                    vt.copy_from_slice(&parent.vt);
                    vt[succ.thread as usize] += 1;
                    let mut h = DefaultHasher::new();
                    vt.hash(&mut h);
                    succ.digest.hash(&mut h);
                    let bucket = index.entry(h.finish()).or_insert(CHAIN_END);
                    let mut at = *bucket;
                    while at != CHAIN_END {
                        let n = &next[at as usize];
                        if *n.vt == *vt && n.fingerprint == succ.fingerprint {
                            break;
                        }
                        at = chain[at as usize];
                    }
                    let dst = if at != CHAIN_END {
                        next[at as usize].id
                    } else {
                        let id = self.push_node(
                            parent.id,
                            succ.thread,
                            succ.digest,
                            &vt,
                            depth + 1,
                            &succ.state,
                        )?;
                        chain.push(*bucket);
                        *bucket = next.len() as u32;
                        next.push(FrontierNode {
                            id,
                            vt: vt.clone().into_boxed_slice(),
                            fingerprint: succ.fingerprint,
                            state: succ.state,
                        });
                        id
                    };
                    self.record_edge(parent.id, dst, succ.thread);
                }
            }
            if next.is_empty() {
                self.stats.max_depth = depth;
                return Ok(self.reject(depth, frontier));
            }
            depth += 1;
            self.stats.max_depth = depth;
            frontier = next;
            self.note_layer(&frontier)?;
            // The complete layer is kept so that every final state is counted.
            if depth == total {
                let first = &frontier[0];
                return Ok(self.accept(first.id, &first.state));
            }
        }
    }

    fn expand_layer(
        &self,
        frontier: &[FrontierNode<M::State>],
    ) -> Result<Vec<Vec<Successor<M::State>>>, CheckError> {
        if self.opts.parallelism > 1 && frontier.len() > 1 {
            frontier.par_iter().map(|n| self.expand(n)).collect()
        } else {
            let mut viable = Vec::new();
            frontier
                .iter()
                .map(|n| self.expand_with(n, &mut viable))
                .collect()
        }
    }

    fn expand(
        &self,
        node: &FrontierNode<M::State>,
    ) -> Result<Vec<Successor<M::State>>, CheckError> {
        self.expand_with(node, &mut Vec::new())
    }

    fn expand_with(
        &self,
        node: &FrontierNode<M::State>,
        viable: &mut Vec<u32>,
    ) -> Result<Vec<Successor<M::State>>, CheckError> {
        self.timeline.viable(&node.vt, viable);
        let mut out = Vec::new();
        for &t in viable.iter() {
            let a = &self.tr.thread(t as usize)[node.vt[t as usize] as usize];
            for state in self.model.step(&node.state, &a.op, &a.args)? {
                let fingerprint = (self.view)(&state);
                out.push(Successor {
                    thread: t,
                    digest: digest_bytes(&fingerprint),
                    fingerprint,
                    state,
                });
            }
        }
        Ok(out)
    }

    fn push_node(
        &mut self,
        parent: u32,
        via: u32,
        digest: u64,
        vt: &[u32],
        depth: u64,
        state: &M::State,
    ) -> Result<u32, CheckError> {
        let id = u32::try_from(self.arena.len())
            .ok()
            .filter(|&id| id != NO_PARENT)
            .ok_or(CheckError::TooManyNodes(self.arena.len() as u64))?;
        self.arena.push(NodeRec {
            parent,
            via,
            digest,
        });
        self.stats.nodes += 1;
        if let Some(g) = &mut self.graph {
            g.nodes.push(GraphNode {
                id,
                vt: VectorTimestamp::from_indices(vt.to_vec()),
                depth,
                state: self.model.render(state),
            });
        }
        Ok(id)
    }

    fn record_edge(&mut self, src: u32, dst: u32, thread: u32) {
        let Some(g) = &mut self.graph else { return };
        if !self.edge_seen.insert((src, dst, thread)) {
            return;
        }
        // The source's vector timestamp fixes which action of `thread` this is.
        let index = g.nodes[src as usize].vt.get(thread as usize);
        g.edges.push(GraphEdge {
            src,
            dst,
            action: ActionRef::new(thread, index),
        });
    }

    fn note_layer(&mut self, layer: &[FrontierNode<M::State>]) -> Result<(), CheckError> {
        self.stats.peak_frontier = self.stats.peak_frontier.max(layer.len());
        let per_node_fixed = std::mem::size_of::<FrontierNode<M::State>>() as u64
            + 4 * self.tr.thread_count() as u64
            + 48;
        let layer_bytes: u64 = layer
            .iter()
            .map(|n| per_node_fixed + 2 * n.fingerprint.len() as u64)
            .sum();
        let estimate =
            self.arena.len() as u64 * std::mem::size_of::<NodeRec>() as u64 + 2 * layer_bytes;
        self.stats.peak_mem_bytes = self.stats.peak_mem_bytes.max(estimate);
        if let Some(budget) = self.opts.mem_cap_bytes {
            if estimate > budget {
                self.stats.wall = self.started.elapsed();
                return Err(CheckError::MemoryBudget {
                    budget,
                    stats: self.stats.clone(),
                });
            }
        }
        Ok(())
    }

    /// Threads of the first-parent chain ending at `id`, root first.
    fn path_threads(&self, mut id: u32) -> (u32, Vec<u32>) {
        let mut threads = Vec::new();
        loop {
            let rec = self.arena[id as usize];
            if rec.parent == NO_PARENT {
                threads.reverse();
                return (rec.via, threads);
            }
            threads.push(rec.via);
            id = rec.parent;
        }
    }

    fn refs_for(threads: &[u32], thread_count: usize) -> Vec<ActionRef> {
        let mut next = vec![0u32; thread_count];
        threads
            .iter()
            .map(|&t| {
                let r = ActionRef::new(t, next[t as usize]);
                next[t as usize] += 1;
                r
            })
            .collect()
    }

    fn accept(&mut self, id: u32, state: &M::State) -> Verdict {
        let (_, threads) = self.path_threads(id);
        self.stats.wall = self.started.elapsed();
        Verdict::Accepted {
            witness: Self::refs_for(&threads, self.tr.thread_count()),
            final_state: self.model.render(state),
            stats: self.stats.clone(),
        }
    }

    fn reject(&mut self, depth: u64, mut deepest: Vec<FrontierNode<M::State>>) -> Verdict {
        deepest.sort_by(|a, b| {
            a.vt.cmp(&b.vt)
                .then_with(|| a.fingerprint.cmp(&b.fingerprint))
        });
        let counterexamples = deepest
            .iter()
            .take(self.opts.max_counterexamples)
            .map(|n| self.counterexample(n))
            .collect();
        self.stats.wall = self.started.elapsed();
        Verdict::Rejected {
            max_depth: depth,
            counterexamples,
            stats: self.stats.clone(),
        }
    }

    /// Rebuilds the states along a node's first-parent chain by replaying the
    /// model and following, at each step, the first successor whose view
    /// digest matches the recorded node. This is the same choice the search
    /// made when the node was created.
    fn counterexample(&self, node: &FrontierNode<M::State>) -> Counterexample {
        let (init_index, threads) = self.path_threads(node.id);
        let refs = Self::refs_for(&threads, self.tr.thread_count());
        let mut chain = Vec::with_capacity(threads.len() + 1);
        let mut id = node.id;
        loop {
            chain.push(self.arena[id as usize].digest);
            let parent = self.arena[id as usize].parent;
            if parent == NO_PARENT {
                break;
            }
            id = parent;
        }
        chain.reverse();

        let mut state = self.model.initial_states().swap_remove(init_index as usize);
        let initial = self.model.render(&state);
        let mut steps = Vec::with_capacity(refs.len());
        for (r, want) in refs.iter().zip(&chain[1..]) {
            let a = self.tr.action(*r);
            let succs = self
                .model
                .step(&state, &a.op, &a.args)
                .expect("step succeeded during search");
            state = succs
                .into_iter()
                .find(|s| digest_bytes(&(self.view)(s)) == *want)
                .expect("replay reaches the recorded node");
            steps.push(PathStep {
                action: *r,
                state: self.model.render(&state),
            });
        }
        let mut viable = Vec::new();
        self.timeline.viable(&node.vt, &mut viable);
        let stuck = viable
            .into_iter()
            .map(|t| ActionRef::new(t, node.vt[t as usize]))
            .collect();
        Counterexample {
            initial,
            steps,
            stuck,
        }
    }
}
