//! The line-delimited TBX1 trace file format.
//!
//! ```text
//! {"tbx":1,"model":"queue","threads":3,"seed":42}
//! {"t":0,"op":"Enqueue","args":[1],"s":0,"e":10}
//! {"t":1,"op":"Dequeue","args":[1],"s":16,"e":28,"r":20}
//! ```
//!
//! Sets, tuples and maps are written as `{"set":[..]}`, `{"tup":[..]}` and
//! `{"map":[[k,v],..]}`, always in canonical member order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map as JsonMap, Value as Json};

use super::{validate_trace, TimeboxedAction, Trace, TraceError, TraceMeta};
use crate::value::{Value, ValueMap};

pub const FORMAT_VERSION: u64 = 1;

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Bool(b) => Json::Bool(*b),
        Value::Int(i) => Json::from(*i),
        Value::Str(s) => Json::String(s.clone()),
        Value::Set(s) => json!({ "set": s.iter().map(value_to_json).collect::<Vec<_>>() }),
        Value::Tuple(t) => json!({ "tup": t.iter().map(value_to_json).collect::<Vec<_>>() }),
        Value::Map(m) => json!({
            "map": m.iter().map(|(k, v)| json!([value_to_json(k), value_to_json(v)])).collect::<Vec<_>>()
        }),
    }
}

pub fn value_from_json(j: &Json) -> Result<Value, String> {
    match j {
        Json::Bool(b) => Ok(Value::Bool(*b)),
        Json::Number(n) => n
            .as_i64()
            .map(Value::Int)
            .ok_or_else(|| format!("number {n} is not a 64-bit integer")),
        Json::String(s) => Ok(Value::Str(s.clone())),
        Json::Object(obj) if obj.len() == 1 => {
            let (tag, body) = obj.iter().next().expect("one entry");
            let items = body
                .as_array()
                .ok_or_else(|| format!("\"{tag}\" must hold an array"))?;
            match tag.as_str() {
                "set" => Ok(Value::set(
                    items
                        .iter()
                        .map(value_from_json)
                        .collect::<Result<Vec<_>, _>>()?,
                )),
                "tup" => Ok(Value::Tuple(
                    items
                        .iter()
                        .map(value_from_json)
                        .collect::<Result<Vec<_>, _>>()?,
                )),
                "map" => {
                    let mut pairs = Vec::with_capacity(items.len());
                    for item in items {
                        match item.as_array().map(Vec::as_slice) {
                            Some([k, v]) => pairs.push((value_from_json(k)?, value_from_json(v)?)),
                            _ => return Err("map entries must be [key, value] pairs".into()),
                        }
                    }
                    let map = ValueMap::new(pairs.iter().cloned());
                    if map.len() != pairs.len() {
                        return Err("map has duplicate keys".into());
                    }
                    Ok(Value::Map(map))
                }
                other => Err(format!("unknown value tag \"{other}\"")),
            }
        }
        Json::Object(_) => Err("composite values need exactly one of set/tup/map".into()),
        Json::Null => Err("null is not a value".into()),
        Json::Array(_) => Err("bare arrays are not values; use {\"tup\":[..]}".into()),
    }
}

/// One action as a TBX1 record object.
pub fn action_to_json(a: &TimeboxedAction) -> Json {
    let mut rec = JsonMap::new();
    rec.insert("t".into(), Json::from(a.thread));
    rec.insert("op".into(), Json::String(a.op.clone()));
    rec.insert(
        "args".into(),
        Json::Array(a.args.iter().map(value_to_json).collect()),
    );
    rec.insert("s".into(), Json::from(a.start_ns));
    rec.insert("e".into(), Json::from(a.end_ns));
    if let Some(r) = a.refined_ns {
        rec.insert("r".into(), Json::from(r));
    }
    Json::Object(rec)
}

pub fn action_from_json(j: &Json) -> Result<TimeboxedAction, String> {
    let obj = j.as_object().ok_or("record must be an object")?;
    let uint = |key: &str| -> Result<u64, String> {
        obj.get(key)
            .ok_or_else(|| format!("missing field \"{key}\""))?
            .as_u64()
            .ok_or_else(|| format!("field \"{key}\" must be a non-negative integer"))
    };
    let thread = u32::try_from(uint("t")?).map_err(|_| "thread id too large".to_string())?;
    let op = obj
        .get("op")
        .and_then(Json::as_str)
        .ok_or("missing or non-string field \"op\"")?
        .to_owned();
    let args = obj
        .get("args")
        .and_then(Json::as_array)
        .ok_or("missing or non-array field \"args\"")?
        .iter()
        .map(value_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    let refined_ns = match obj.get("r") {
        None | Some(Json::Null) => None,
        Some(_) => Some(uint("r")?),
    };
    Ok(TimeboxedAction {
        op,
        args,
        thread,
        start_ns: uint("s")?,
        end_ns: uint("e")?,
        refined_ns,
    })
}

/// Reads a TBX1 trace and validates it.
pub fn read_trace<R: BufRead>(source: R) -> Result<Trace, TraceError> {
    let mut lines = source.lines().enumerate();
    let parse_err = |line: usize, message: String| TraceError::Parse { line, message };

    let (meta, thread_count) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(parse_err(1, "missing header".into()));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        break parse_header(&line).map_err(|m| parse_err(i + 1, m))?;
    };

    let mut actions = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let j: Json = serde_json::from_str(&line).map_err(|e| parse_err(i + 1, e.to_string()))?;
        actions.push(action_from_json(&j).map_err(|m| parse_err(i + 1, m))?);
    }

    let tr = Trace::from_actions(meta, thread_count, actions).map_err(TraceError::Invalid)?;
    let violations = validate_trace(&tr);
    if !violations.is_empty() {
        return Err(TraceError::Invalid(violations));
    }
    Ok(tr)
}

fn parse_header(line: &str) -> Result<(TraceMeta, usize), String> {
    let j: Json = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = j.as_object().ok_or("header must be an object")?;
    match obj.get("tbx").and_then(Json::as_u64) {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(format!("unsupported format version {v}")),
        None => return Err("header lacks the \"tbx\" version tag".into()),
    }
    let model = obj
        .get("model")
        .and_then(Json::as_str)
        .ok_or("header lacks \"model\"")?
        .to_owned();
    let threads = obj
        .get("threads")
        .and_then(Json::as_u64)
        .ok_or("header lacks a non-negative \"threads\" count")? as usize;
    let seed = match obj.get("seed") {
        None | Some(Json::Null) => None,
        Some(s) => Some(s.as_u64().ok_or("\"seed\" must be an integer or null")?),
    };
    Ok((TraceMeta { model, seed }, threads))
}

/// Writes a trace as TBX1, thread by thread.
pub fn write_trace<W: Write>(tr: &Trace, mut sink: W) -> Result<(), TraceError> {
    let header = json!({
        "tbx": FORMAT_VERSION,
        "model": tr.meta.model,
        "threads": tr.thread_count(),
        "seed": tr.meta.seed,
    });
    writeln!(sink, "{header}")?;
    for (_, a) in tr.iter() {
        writeln!(sink, "{}", action_to_json(a))?;
    }
    sink.flush()?;
    Ok(())
}

pub fn read_trace_file(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    read_trace(BufReader::new(File::open(path)?))
}

pub fn write_trace_file(tr: &Trace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    write_trace(tr, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::fixtures::overlapping_queue;
    use crate::trace::Rule;
    use proptest::prelude::*;

    fn read_str(s: &str) -> Result<Trace, TraceError> {
        read_trace(s.as_bytes())
    }

    fn round_trip(tr: &Trace) -> Trace {
        let mut buf = Vec::new();
        write_trace(tr, &mut buf).unwrap();
        read_trace(buf.as_slice()).unwrap()
    }

    #[test]
    fn reads_records_in_any_global_order() {
        let text = r#"{"tbx":1,"model":"queue","threads":2,"seed":null}
{"t":1,"op":"Dequeue","args":[1],"s":16,"e":28,"r":20}
{"t":0,"op":"Enqueue","args":[1],"s":0,"e":10}
{"t":0,"op":"Enqueue","args":[{"tup":[1,"x"]}],"s":11,"e":12}
"#;
        let tr = read_str(text).unwrap();
        assert_eq!(tr.thread(0).len(), 2);
        assert_eq!(
            tr.thread(0)[1].args[0],
            Value::tuple([Value::Int(1), Value::str("x")])
        );
        assert_eq!(tr.thread(1)[0].refined_ns, Some(20));
        assert_eq!(tr.meta.seed, None);
    }

    #[test]
    fn end_before_start_is_a_validation_error() {
        let text = "{\"tbx\":1,\"model\":\"queue\",\"threads\":1,\"seed\":1}\n\
                    {\"t\":0,\"op\":\"Enqueue\",\"args\":[1],\"s\":10,\"e\":5}\n";
        match read_str(text) {
            Err(TraceError::Invalid(v)) => assert_eq!(v[0].rule, Rule::EndBeforeStart),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_version_is_a_parse_error() {
        let text = "{\"tbx\":2,\"model\":\"queue\",\"threads\":1,\"seed\":1}\n";
        match read_str(text) {
            Err(TraceError::Parse { line: 1, message }) => assert!(message.contains("version")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_record_names_its_line() {
        let text = "{\"tbx\":1,\"model\":\"queue\",\"threads\":1,\"seed\":1}\n\
                    {\"t\":0,\"op\":\"Enqueue\",\"args\":[1],\"s\":1,\"e\":2}\n\
                    {\"t\":0,\"op\":\"Enqueue\",\"args\":[1.5],\"s\":3,\"e\":4}\n";
        match read_str(text) {
            Err(TraceError::Parse { line: 3, .. }) => {}
            other => panic!("expected parse error on line 3, got {other:?}"),
        }
    }

    #[test]
    fn thread_outside_header_count_is_rejected() {
        let text = "{\"tbx\":1,\"model\":\"queue\",\"threads\":1,\"seed\":1}\n\
                    {\"t\":3,\"op\":\"Enqueue\",\"args\":[1],\"s\":1,\"e\":2}\n";
        assert!(matches!(read_str(text), Err(TraceError::Invalid(_))));
    }

    #[test]
    fn composite_value_json_is_canonical() {
        let v = value_from_json(&json!({"set": [3, 1, 2]})).unwrap();
        assert_eq!(value_to_json(&v), json!({"set": [1, 2, 3]}));
        let m = value_from_json(&json!({"map": [[5, "b"], [3, "a"]]})).unwrap();
        assert_eq!(value_to_json(&m), json!({"map": [[3, "a"], [5, "b"]]}));
        assert!(value_from_json(&json!({"map": [[1, 1], [1, 2]]})).is_err());
        assert!(value_from_json(&json!({"bag": []})).is_err());
    }

    #[test]
    fn fixture_round_trips() {
        let mut tr = overlapping_queue(3);
        tr.meta.seed = Some(9);
        assert_eq!(round_trip(&tr), tr);
    }

    fn arb_trace() -> impl Strategy<Value = Trace> {
        let action = (
            "[A-Z][a-z]{0,5}",
            prop::collection::vec(crate::value::strategy::value(), 0..3),
            0u64..50,
            0u64..20,
            prop::option::of(0u64..20),
        );
        prop::collection::vec(prop::collection::vec(action, 0..6), 1..4).prop_map(|threads| {
            let seqs = threads
                .into_iter()
                .enumerate()
                .map(|(t, acts)| {
                    let mut clock = 0;
                    acts.into_iter()
                        .map(|(op, args, gap, len, refined)| {
                            let s = clock + gap;
                            let e = s + len;
                            clock = e;
                            let mut a = TimeboxedAction::new(op, args, t as u32, s, e);
                            a.refined_ns = refined.map(|r| s + r.min(len));
                            a
                        })
                        .collect()
                })
                .collect();
            let mut tr = Trace::from_threads(TraceMeta::new("queue"), seqs);
            tr.meta.seed = Some(3);
            tr
        })
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(tr in arb_trace()) {
            prop_assert!(validate_trace(&tr).is_empty());
            prop_assert_eq!(round_trip(&tr), tr);
        }
    }
}
