//! Brute-force linearizability decision for small traces.
//!
//! This is deliberately a different formulation from the frontier search: it
//! precomputes the real-time partial order over *all* pairs of actions and
//! backtracks over its linear extensions, replaying the model along each
//! one without any state merging. It is exponential and only meant as
//! ground truth for short traces.

use thiserror::Error;

use crate::model::{check_trace_signature, Model, ModelError};
use crate::trace::{validate_trace, Trace, Violation};

pub const DEFAULT_BOUND: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Accept,
    Reject,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("trace has {actions} actions; the oracle refuses more than {bound}")]
    BoundExceeded { actions: usize, bound: usize },
    #[error("trace is invalid: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    InvalidTrace(Vec<Violation>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

struct Flat<'a> {
    ops: Vec<(&'a str, &'a [crate::value::Value])>,
    /// `preds[b]` has bit `a` set when `a` must come before `b`.
    preds: Vec<u64>,
}

pub fn oracle_check<M: Model>(
    tr: &Trace,
    model: &M,
    bound: usize,
) -> Result<OracleVerdict, OracleError> {
    let n = tr.len();
    if n > bound || n > 64 {
        return Err(OracleError::BoundExceeded {
            actions: n,
            bound: bound.min(64),
        });
    }
    let violations = validate_trace(tr);
    if !violations.is_empty() {
        return Err(OracleError::InvalidTrace(violations));
    }
    check_trace_signature(model, tr)?;

    let actions: Vec<_> = tr.iter().collect();
    let mut preds = vec![0u64; n];
    for (b, (rb, ab)) in actions.iter().enumerate() {
        for (a, (ra, aa)) in actions.iter().enumerate() {
            let thread_order = ra.thread == rb.thread && ra.index < rb.index;
            if a != b && (thread_order || aa.end_ns < ab.start_ns) {
                preds[b] |= 1 << a;
            }
        }
    }
    let flat = Flat {
        ops: actions
            .iter()
            .map(|(_, a)| (a.op.as_str(), a.args.as_slice()))
            .collect(),
        preds,
    };
    for init in model.initial_states() {
        if extend(model, &flat, &init, 0)? {
            return Ok(OracleVerdict::Accept);
        }
    }
    Ok(OracleVerdict::Reject)
}

fn extend<M: Model>(
    model: &M,
    flat: &Flat<'_>,
    state: &M::State,
    placed: u64,
) -> Result<bool, ModelError> {
    let n = flat.ops.len();
    if placed.count_ones() as usize == n {
        return Ok(true);
    }
    for b in 0..n {
        let bit = 1u64 << b;
        if placed & bit != 0 || flat.preds[b] & !placed != 0 {
            continue;
        }
        let (op, args) = flat.ops[b];
        for next in model.step(state, op, args)? {
            if extend(model, flat, &next, placed | bit)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}
