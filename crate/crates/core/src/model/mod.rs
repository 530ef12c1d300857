//! Sequential specifications that recorded traces are checked against.
//!
//! A [`Model`] is a nondeterministic state machine: a finite set of initial
//! states plus a guarded, set-valued `step` per action name. Observed return
//! values travel as action arguments and are checked in the guard, so a
//! `Dequeue(3)` is only enabled when the head of the queue is `3`.

use std::fmt::Debug;
use std::hash::Hash;

use thiserror::Error;

use crate::trace::Trace;
use crate::value::{Value, ValueKind};

mod omap;
mod ppfifo;
mod queue;

pub use omap::{OrderedMapRange, NOT_FOUND};
pub use ppfifo::{element, PerProducerFifo};
pub use queue::AtomicQueue;

/// Expected shape of one action argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgHint {
    Int,
    Bool,
    /// Any value; the model compares it by equality.
    Any,
    /// A tuple of element values.
    Tuple,
}

impl ArgHint {
    pub fn admits(self, v: &Value) -> bool {
        match self {
            ArgHint::Int => v.kind() == ValueKind::Int,
            ArgHint::Bool => v.kind() == ValueKind::Bool,
            ArgHint::Tuple => v.kind() == ValueKind::Tuple,
            ArgHint::Any => true,
        }
    }
}

/// One entry of a model's action signature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpSig {
    pub name: &'static str,
    pub args: &'static [ArgHint],
}

impl OpSig {
    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

/// An argument position in an [`ActionTemplate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArgSlot {
    Fixed(Value),
    Free(ArgHint),
}

/// A family of actions enabled in some state, with free argument slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionTemplate {
    pub op: &'static str,
    pub args: Vec<ArgSlot>,
}

impl ActionTemplate {
    pub fn new(op: &'static str, args: Vec<ArgSlot>) -> Self {
        ActionTemplate { op, args }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("model `{model}` has no action `{op}`")]
    UnknownOp { model: &'static str, op: String },
    #[error("action `{op}` takes {expected} argument(s), got {got}")]
    Arity {
        op: String,
        expected: usize,
        got: usize,
    },
    #[error("argument {index} of `{op}` is malformed: {reason}")]
    BadArgument {
        op: String,
        index: usize,
        reason: String,
    },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

/// A sequential specification with guarded, set-valued transitions.
///
/// Implementations must be pure: `step` for the same inputs always returns
/// the same successor set, and returns an empty set exactly when the action
/// is disabled in that state.
pub trait Model: Send + Sync {
    type State: Clone + Eq + Hash + Debug + Send + Sync;

    fn name(&self) -> &'static str;

    fn signature(&self) -> &'static [OpSig];

    fn initial_states(&self) -> Vec<Self::State>;

    fn step(
        &self,
        state: &Self::State,
        op: &str,
        args: &[Value],
    ) -> Result<Vec<Self::State>, ModelError>;

    /// Injective rendering used for display, export and the default view.
    fn render(&self, state: &Self::State) -> Value;

    /// Fingerprint deciding which states the search treats as identical.
    fn view(&self, state: &Self::State) -> Vec<u8> {
        self.render(state).encode()
    }

    /// Best-effort enumeration of enabled action families, for workload
    /// generation only. The checker never consults it.
    fn enabled_actions_hint(&self, state: &Self::State) -> Vec<ActionTemplate>;

    fn sig(&self, op: &str) -> Option<&'static OpSig> {
        self.signature().iter().find(|s| s.name == op)
    }
}

/// Verifies that an action conforms to the model's signature.
pub fn check_call<M: Model + ?Sized>(
    model: &M,
    op: &str,
    args: &[Value],
) -> Result<(), ModelError> {
    let sig = model.sig(op).ok_or_else(|| ModelError::UnknownOp {
        model: model.name(),
        op: op.to_owned(),
    })?;
    if sig.arity() != args.len() {
        return Err(ModelError::Arity {
            op: op.to_owned(),
            expected: sig.arity(),
            got: args.len(),
        });
    }
    for (index, (hint, v)) in sig.args.iter().zip(args).enumerate() {
        if !hint.admits(v) {
            return Err(ModelError::BadArgument {
                op: op.to_owned(),
                index,
                reason: format!("expected {hint:?}, got {}", v.kind()),
            });
        }
    }
    Ok(())
}

/// Verifies every action of a trace against the model's signature.
pub fn check_trace_signature<M: Model + ?Sized>(model: &M, tr: &Trace) -> Result<(), ModelError> {
    for (_, a) in tr.iter() {
        check_call(model, &a.op, &a.args)?;
    }
    Ok(())
}

/// The built-in models, addressable by registry name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinModel {
    Queue,
    OrderedMapRange,
    PerProducerFifo,
}

impl BuiltinModel {
    pub const ALL: [BuiltinModel; 3] = [
        BuiltinModel::Queue,
        BuiltinModel::OrderedMapRange,
        BuiltinModel::PerProducerFifo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinModel::Queue => "queue",
            BuiltinModel::OrderedMapRange => "omaprange",
            BuiltinModel::PerProducerFifo => "ppfifo",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ModelError> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| ModelError::UnknownModel(name.to_owned()))
    }
}

impl std::fmt::Display for BuiltinModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BuiltinModel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_name(s)
    }
}

/// Runs `$body` with `$m` bound to the concrete model behind a
/// [`BuiltinModel`].
#[macro_export]
macro_rules! with_builtin_model {
    ($kind:expr, $m:ident => $body:expr) => {
        match $kind {
            $crate::model::BuiltinModel::Queue => {
                let $m = $crate::model::AtomicQueue;
                $body
            }
            $crate::model::BuiltinModel::OrderedMapRange => {
                let $m = $crate::model::OrderedMapRange;
                $body
            }
            $crate::model::BuiltinModel::PerProducerFifo => {
                let $m = $crate::model::PerProducerFifo;
                $body
            }
        }
    };
}

pub(crate) fn arg_int(op: &str, args: &[Value], index: usize) -> Result<i64, ModelError> {
    args[index].as_int().ok_or_else(|| ModelError::BadArgument {
        op: op.to_owned(),
        index,
        reason: format!("expected int, got {}", args[index].kind()),
    })
}

pub(crate) fn arg_bool(op: &str, args: &[Value], index: usize) -> Result<bool, ModelError> {
    args[index]
        .as_bool()
        .ok_or_else(|| ModelError::BadArgument {
            op: op.to_owned(),
            index,
            reason: format!("expected bool, got {}", args[index].kind()),
        })
}

pub(crate) fn expect_arity(op: &str, args: &[Value], n: usize) -> Result<(), ModelError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(ModelError::Arity {
            op: op.to_owned(),
            expected: n,
            got: args.len(),
        })
    }
}
