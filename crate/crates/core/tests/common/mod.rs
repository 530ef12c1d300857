//! Seeded random traces shared by the integration tests.
#![allow(dead_code)]

use boxcheck::model::{element, AtomicQueue, OrderedMapRange, PerProducerFifo, NOT_FOUND};
use boxcheck::trace::{Trace, TraceMeta};
use boxcheck::{BuiltinModel, Model, TimeboxedAction, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const UNIVERSE: i64 = 3;
pub const MAX_ACTIONS: usize = 8;
pub const MAX_THREADS: usize = 4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A mix of linearizable-by-construction, perturbed and unconstrained traces.
pub fn random_trace(model: BuiltinModel, rng: &mut ChaCha8Rng) -> Trace {
    let threads = rng.gen_range(1..=MAX_THREADS);
    let n = rng.gen_range(1..=MAX_ACTIONS);
    match rng.gen_range(0..10) {
        0..=3 => simulated(model, threads, n, rng),
        4..=6 => {
            let mut tr = simulated(model, threads, n, rng);
            perturb(model, &mut tr, rng);
            tr
        }
        _ => unconstrained(model, threads, n, rng),
    }
}

/// Picks a legal operation, applies it and returns the recorded form.
type Propose<S> = fn(&mut ChaCha8Rng, &mut S, u32) -> (&'static str, Vec<Value>);

/// Runs a sequential execution and draws timeboxes around its linearization
/// points. Refined timestamps are those points.
pub fn simulated(model: BuiltinModel, threads: usize, n: usize, rng: &mut ChaCha8Rng) -> Trace {
    match model {
        BuiltinModel::Queue => simulate(&AtomicQueue, threads, n, rng, propose_queue),
        BuiltinModel::OrderedMapRange => simulate(&OrderedMapRange, threads, n, rng, propose_map),
        BuiltinModel::PerProducerFifo => simulate(&PerProducerFifo, threads, n, rng, propose_fifo),
    }
}

fn simulate<M: Model>(
    m: &M,
    threads: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
    propose: Propose<M::State>,
) -> Trace {
    let mut state = m.initial_states().remove(0);
    let mut per_thread: Vec<Vec<(u64, &'static str, Vec<Value>)>> = vec![Vec::new(); threads];
    for i in 0..n {
        let t = rng.gen_range(0..threads) as u32;
        let (op, args) = propose(rng, &mut state, t);
        per_thread[t as usize].push((10 * (i as u64 + 1), op, args));
    }
    let actions = per_thread
        .into_iter()
        .enumerate()
        .map(|(t, ops)| {
            let points: Vec<u64> = ops.iter().map(|o| o.0).collect();
            let mut prev_end = None::<u64>;
            ops.into_iter()
                .enumerate()
                .map(|(j, (p, op, args))| {
                    let floor = prev_end.map_or(0, |e| e + 1);
                    let start = p.saturating_sub(rng.gen_range(0..40)).max(floor);
                    let mut end = p + rng.gen_range(0..40);
                    if let Some(&next) = points.get(j + 1) {
                        end = end.min(next - 1);
                    }
                    prev_end = Some(end);
                    TimeboxedAction::new(op, args, t as u32, start, end).with_refined(p)
                })
                .collect()
        })
        .collect();
    Trace::from_threads(TraceMeta::new(m.name()), actions)
}

fn int(rng: &mut ChaCha8Rng) -> i64 {
    rng.gen_range(0..UNIVERSE)
}

fn propose_queue(rng: &mut ChaCha8Rng, q: &mut Vec<Value>, _t: u32) -> (&'static str, Vec<Value>) {
    if rng.gen_bool(0.5) {
        let v = Value::Int(int(rng));
        q.push(v.clone());
        ("Enqueue", vec![v])
    } else if q.is_empty() {
        ("DequeueEmpty", vec![])
    } else {
        ("Dequeue", vec![q.remove(0)])
    }
}

type MapState = <OrderedMapRange as Model>::State;

fn propose_map(rng: &mut ChaCha8Rng, m: &mut MapState, _t: u32) -> (&'static str, Vec<Value>) {
    let k = int(rng);
    match rng.gen_range(0..4) {
        0 => {
            let v = Value::Int(int(rng));
            let ok = !m.contains_key(&k);
            if ok {
                m.insert(k, v.clone());
            }
            ("Insert", vec![Value::Int(k), v, Value::Bool(ok)])
        }
        1 => {
            let ok = m.remove(&k).is_some();
            ("Delete", vec![Value::Int(k), Value::Bool(ok)])
        }
        2 => {
            let found = m.get(&k).cloned().unwrap_or_else(|| Value::str(NOT_FOUND));
            ("Find", vec![Value::Int(k), found])
        }
        _ => {
            let (lo, hi) = (k, int(rng));
            let count = if lo > hi {
                0
            } else {
                m.range(lo..=hi).count() as i64
            };
            (
                "RangeCount",
                vec![Value::Int(lo), Value::Int(hi), Value::Int(count)],
            )
        }
    }
}

type FifoState = <PerProducerFifo as Model>::State;

fn propose_fifo(rng: &mut ChaCha8Rng, s: &mut FifoState, t: u32) -> (&'static str, Vec<Value>) {
    let p = i64::from(t);
    let producers: Vec<i64> = s.keys().copied().collect();
    match rng.gen_range(0..4) {
        0 => {
            let e = element(p, Value::Int(int(rng)));
            s.entry(p).or_default().push(e.clone());
            ("Enqueue", vec![Value::Int(p), e])
        }
        1 => {
            let elems: Vec<Value> = (0..rng.gen_range(1..=2))
                .map(|_| element(p, Value::Int(int(rng))))
                .collect();
            s.entry(p).or_default().extend(elems.iter().cloned());
            ("EnqueueBulk", vec![Value::Int(p), Value::tuple(elems)])
        }
        _ if producers.is_empty() => ("DequeueEmpty", vec![]),
        op => {
            let from = *producers.choose(rng).unwrap();
            let sub = s.get_mut(&from).unwrap();
            let taken: Vec<Value> = if op == 2 {
                vec![sub.remove(0)]
            } else {
                let k = rng.gen_range(1..=sub.len());
                sub.drain(..k).collect()
            };
            if sub.is_empty() {
                s.remove(&from);
            }
            if op == 2 {
                ("Dequeue", taken)
            } else {
                ("DequeueBulk", vec![Value::tuple(taken)])
            }
        }
    }
}

/// Any operation with arbitrary (but well-formed) arguments.
fn arbitrary_op(model: BuiltinModel, rng: &mut ChaCha8Rng, t: u32) -> (&'static str, Vec<Value>) {
    let iv = |rng: &mut ChaCha8Rng| Value::Int(int(rng));
    match model {
        BuiltinModel::Queue => match rng.gen_range(0..3) {
            0 => ("Enqueue", vec![iv(rng)]),
            1 => ("Dequeue", vec![iv(rng)]),
            _ => ("DequeueEmpty", vec![]),
        },
        BuiltinModel::OrderedMapRange => match rng.gen_range(0..4) {
            0 => ("Insert", vec![iv(rng), iv(rng), Value::Bool(rng.gen())]),
            1 => ("Delete", vec![iv(rng), Value::Bool(rng.gen())]),
            2 => {
                let found = if rng.gen_bool(0.3) {
                    Value::str(NOT_FOUND)
                } else {
                    iv(rng)
                };
                ("Find", vec![iv(rng), found])
            }
            _ => ("RangeCount", vec![iv(rng), iv(rng), iv(rng)]),
        },
        BuiltinModel::PerProducerFifo => {
            let p = i64::from(t);
            let any_elem = |rng: &mut ChaCha8Rng| {
                element(rng.gen_range(0..MAX_THREADS as i64), Value::Int(int(rng)))
            };
            match rng.gen_range(0..5) {
                0 => ("Enqueue", vec![Value::Int(p), element(p, iv(rng))]),
                1 => {
                    let elems = (0..rng.gen_range(1..=2)).map(|_| element(p, iv(rng)));
                    ("EnqueueBulk", vec![Value::Int(p), Value::tuple(elems)])
                }
                2 => ("Dequeue", vec![any_elem(rng)]),
                3 => {
                    let elems: Vec<Value> =
                        (0..rng.gen_range(1..=2)).map(|_| any_elem(rng)).collect();
                    ("DequeueBulk", vec![Value::tuple(elems)])
                }
                _ => ("DequeueEmpty", vec![]),
            }
        }
    }
}

/// Random operations in random, frequently overlapping timeboxes.
pub fn unconstrained(model: BuiltinModel, threads: usize, n: usize, rng: &mut ChaCha8Rng) -> Trace {
    let mut per_thread: Vec<Vec<TimeboxedAction>> = vec![Vec::new(); threads];
    for _ in 0..n {
        let t = rng.gen_range(0..threads);
        let (op, args) = arbitrary_op(model, rng, t as u32);
        let floor = per_thread[t].last().map_or(0, |a| a.end_ns + 1);
        let start = floor + rng.gen_range(0..15);
        let end = start + rng.gen_range(0..25);
        let refined = rng.gen_range(start..=end);
        per_thread[t]
            .push(TimeboxedAction::new(op, args, t as u32, start, end).with_refined(refined));
    }
    Trace::from_threads(TraceMeta::new(model.name()), per_thread)
}

/// Replaces one action with an arbitrary one, keeping its timebox.
fn perturb(model: BuiltinModel, tr: &mut Trace, rng: &mut ChaCha8Rng) {
    let refs: Vec<_> = tr.iter().map(|(r, _)| r).collect();
    let Some(&r) = refs.choose(rng) else { return };
    let (op, args) = arbitrary_op(model, rng, r.thread);
    let old = tr.action(r).clone();
    let mut threads: Vec<Vec<TimeboxedAction>> = tr.threads().to_vec();
    threads[r.thread as usize][r.index as usize] = TimeboxedAction {
        op: op.to_owned(),
        args,
        ..old
    };
    *tr = Trace::from_threads(tr.meta.clone(), threads);
}
