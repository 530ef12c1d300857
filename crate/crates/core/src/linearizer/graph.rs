//! The explored state graph and its SGX1 export.

use std::io::{Read, Write};

use serde_json::{json, Value as Json};

use super::Verdict;
use crate::trace::{action_from_json, action_to_json, value_from_json, value_to_json};
use crate::trace::{ActionRef, TimeboxedAction, Trace, TraceError, VectorTimestamp};
use crate::value::Value;

pub const EXPORT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphNode {
    pub id: u32,
    pub vt: VectorTimestamp,
    pub depth: u64,
    pub state: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub src: u32,
    pub dst: u32,
    pub action: ActionRef,
}

/// Every node and edge the search produced. Node ids index `nodes`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StateGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub roots: Vec<u32>,
}

impl StateGraph {
    pub fn max_depth(&self) -> u64 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

/// A parsed SGX1 file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExportDoc {
    pub model: String,
    pub accepted: bool,
    pub max_depth: u64,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub trace: Vec<TimeboxedAction>,
}

/// Writes the graph, the raw trace and the verdict as one SGX1 document.
pub fn export_graph<W: Write>(
    g: &StateGraph,
    tr: &Trace,
    v: &Verdict,
    sink: W,
) -> Result<(), TraceError> {
    let nodes: Vec<Json> = g
        .nodes
        .iter()
        .map(|n| {
            json!({
                "id": n.id,
                "vt": n.vt.indices(),
                "depth": n.depth,
                "state": value_to_json(&n.state),
            })
        })
        .collect();
    let edges: Vec<Json> = g
        .edges
        .iter()
        .map(|e| {
            let a = tr.action(e.action);
            json!({
                "src": e.src,
                "dst": e.dst,
                "t": e.action.thread,
                "i": e.action.index,
                "op": a.op,
                "args": a.args.iter().map(value_to_json).collect::<Vec<_>>(),
            })
        })
        .collect();
    let doc = json!({
        "sgx": EXPORT_VERSION,
        "model": tr.meta.model,
        "verdict": if v.is_accepted() { "accepted" } else { "rejected" },
        "max_depth": v.max_depth(),
        "nodes": nodes,
        "edges": edges,
        "trace": tr.iter().map(|(_, a)| action_to_json(a)).collect::<Vec<_>>(),
    });
    let mut sink = sink;
    serde_json::to_writer(&mut sink, &doc).map_err(std::io::Error::from)?;
    writeln!(sink)?;
    sink.flush()?;
    Ok(())
}

pub fn read_export<R: Read>(source: R) -> Result<ExportDoc, TraceError> {
    let err = |message: String| TraceError::Parse { line: 1, message };
    let doc: Json = serde_json::from_reader(source).map_err(|e| err(e.to_string()))?;
    if doc.get("sgx").and_then(Json::as_u64) != Some(EXPORT_VERSION) {
        return Err(err("missing or unsupported \"sgx\" version".into()));
    }
    let field = |k: &str| {
        doc.get(k)
            .ok_or_else(|| err(format!("missing field \"{k}\"")))
    };
    let uint = |j: &Json, k: &str| -> Result<u64, TraceError> {
        j.get(k)
            .and_then(Json::as_u64)
            .ok_or_else(|| err(format!("field \"{k}\" must be a non-negative integer")))
    };
    let array = |j: &'_ Json| -> Result<Vec<Json>, TraceError> {
        j.as_array()
            .cloned()
            .ok_or_else(|| err("expected an array".into()))
    };

    let model = field("model")?.as_str().unwrap_or_default().to_owned();
    let accepted = match field("verdict")?.as_str() {
        Some("accepted") => true,
        Some("rejected") => false,
        _ => return Err(err("verdict must be \"accepted\" or \"rejected\"".into())),
    };
    let max_depth = uint(&doc, "max_depth")?;

    let mut nodes = Vec::new();
    for n in array(field("nodes")?)? {
        let vt = n
            .get("vt")
            .and_then(Json::as_array)
            .ok_or_else(|| err("node lacks \"vt\"".into()))?
            .iter()
            .map(|i| i.as_u64().map(|i| i as u32))
            .collect::<Option<Vec<u32>>>()
            .ok_or_else(|| err("vt entries must be integers".into()))?;
        let state = value_from_json(n.get("state").unwrap_or(&Json::Null)).map_err(err)?;
        nodes.push(GraphNode {
            id: uint(&n, "id")? as u32,
            vt: VectorTimestamp::from_indices(vt),
            depth: uint(&n, "depth")?,
            state,
        });
    }
    let mut edges = Vec::new();
    for e in array(field("edges")?)? {
        edges.push(GraphEdge {
            src: uint(&e, "src")? as u32,
            dst: uint(&e, "dst")? as u32,
            action: ActionRef::new(uint(&e, "t")? as u32, uint(&e, "i")? as u32),
        });
    }
    let trace = array(field("trace")?)?
        .iter()
        .map(action_from_json)
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(ExportDoc {
        model,
        accepted,
        max_depth,
        nodes,
        edges,
        trace,
    })
}
