//! Linearizability checking for timeboxed concurrent traces.
//!
//! Threads record each operation as an action with a `[start, end]` timebox.
//! [`check`] searches the (vector timestamp, model state) graph for a total
//! order of all actions that respects per-thread order, respects real-time
//! order and replays legally through a [`Model`]. Rejections come with the
//! longest non-failing interpretations as counterexamples.

pub mod linearizer;
pub mod model;
pub mod oracle;
pub mod trace;
pub mod value;
pub mod workload;

pub use linearizer::{
    check, check_with_view, export_graph, read_export, replay_witness, viable_actions, CheckError,
    CheckOptions, CheckOutcome, Counterexample, StateGraph, Verdict, ViewMode,
};
pub use model::{BuiltinModel, Model, ModelError};
pub use oracle::{oracle_check, OracleError, OracleVerdict};
pub use trace::{
    read_trace, shrink_timeboxes, validate_trace, write_trace, ActionRef, TimeboxedAction, Trace,
    TraceError, TraceMeta, VectorTimestamp,
};
pub use value::Value;
