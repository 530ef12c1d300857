//! Fuzzer bindings for the reference structures.

use rand::Rng;

use super::harness::{CallCtx, FuzzTarget, Recorded};
use super::structures::{LockQueue, SegQueue, SnapshotMap};
use crate::model::{element, NOT_FOUND};
use crate::value::Value;

const MAX_BULK: usize = 4;

pub struct QueueTarget(pub LockQueue);

impl FuzzTarget for QueueTarget {
    fn actions(&self) -> &[&'static str] {
        &["Enqueue", "Dequeue"]
    }

    fn call(&self, action: &str, ctx: &mut CallCtx<'_>) -> Option<Recorded> {
        match action {
            "Enqueue" => {
                let v = Value::Int(ctx.pick());
                let t = ctx.timed(|p| self.0.enqueue(v.clone(), p));
                Some(Recorded::new("Enqueue", vec![v], &t))
            }
            "Dequeue" => {
                let t = ctx.timed(|p| self.0.dequeue(p));
                Some(match &t.value {
                    Some(v) => Recorded::new("Dequeue", vec![v.clone()], &t),
                    None => Recorded::new("DequeueEmpty", vec![], &t),
                })
            }
            _ => None,
        }
    }
}

pub struct MapTarget(pub SnapshotMap);

impl FuzzTarget for MapTarget {
    fn actions(&self) -> &[&'static str] {
        &["Insert", "Delete", "Find", "RangeCount"]
    }

    fn call(&self, action: &str, ctx: &mut CallCtx<'_>) -> Option<Recorded> {
        let k = ctx.pick();
        match action {
            "Insert" => {
                let v = Value::Int(ctx.pick());
                let t = ctx.timed(|p| self.0.insert(k, v.clone(), p));
                Some(Recorded::new(
                    "Insert",
                    vec![Value::Int(k), v, Value::Bool(t.value)],
                    &t,
                ))
            }
            "Delete" => {
                let t = ctx.timed(|p| self.0.delete(k, p));
                Some(Recorded::new(
                    "Delete",
                    vec![Value::Int(k), Value::Bool(t.value)],
                    &t,
                ))
            }
            "Find" => {
                let t = ctx.timed(|p| self.0.find(k, p));
                let found = t.value.clone().unwrap_or_else(|| Value::str(NOT_FOUND));
                Some(Recorded::new("Find", vec![Value::Int(k), found], &t))
            }
            "RangeCount" => {
                let other = ctx.pick();
                let (lo, hi) = (k.min(other), k.max(other));
                let t = ctx.timed(|p| self.0.range_count(lo, hi, p));
                let args = vec![Value::Int(lo), Value::Int(hi), Value::Int(t.value as i64)];
                Some(Recorded::new("RangeCount", args, &t))
            }
            _ => None,
        }
    }
}

/// Each fuzzer thread produces into its own subqueue and consumes from all.
pub struct FifoTarget(pub SegQueue);

impl FuzzTarget for FifoTarget {
    fn actions(&self) -> &[&'static str] {
        &["Enqueue", "EnqueueBulk", "Dequeue", "DequeueBulk"]
    }

    fn call(&self, action: &str, ctx: &mut CallCtx<'_>) -> Option<Recorded> {
        let producer = ctx.thread as usize % self.0.producers();
        let from = ctx.rng.gen_range(0..self.0.producers());
        match action {
            "Enqueue" => {
                let e = element(producer as i64, Value::Int(ctx.pick()));
                let t = ctx.timed(|p| self.0.enqueue_bulk(producer, vec![e.clone()], p));
                Some(Recorded::new(
                    "Enqueue",
                    vec![Value::Int(producer as i64), e],
                    &t,
                ))
            }
            "EnqueueBulk" => {
                let n = ctx.rng.gen_range(1..=MAX_BULK);
                let elems: Vec<Value> = (0..n)
                    .map(|_| element(producer as i64, Value::Int(ctx.pick())))
                    .collect();
                let t = ctx.timed(|p| self.0.enqueue_bulk(producer, elems.clone(), p));
                let args = vec![Value::Int(producer as i64), Value::tuple(elems)];
                Some(Recorded::new("EnqueueBulk", args, &t))
            }
            "Dequeue" => {
                let t = ctx.timed(|p| self.0.dequeue_bulk(from, 1, p));
                Some(match t.value.first() {
                    Some(v) => Recorded::new("Dequeue", vec![v.clone()], &t),
                    None => Recorded::new("DequeueEmpty", vec![], &t),
                })
            }
            "DequeueBulk" => {
                let max = ctx.rng.gen_range(1..=MAX_BULK);
                let t = ctx.timed(|p| self.0.dequeue_bulk(from, max, p));
                Some(if t.value.is_empty() {
                    Recorded::new("DequeueEmpty", vec![], &t)
                } else {
                    Recorded::new("DequeueBulk", vec![Value::tuple(t.value.clone())], &t)
                })
            }
            _ => None,
        }
    }
}
