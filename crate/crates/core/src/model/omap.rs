use std::collections::BTreeMap;

use super::{
    arg_bool, arg_int, expect_arity, ActionTemplate, ArgHint, ArgSlot, Model, ModelError, OpSig,
};
use crate::value::Value;

/// Result value recorded by `Find` when the key is absent.
pub const NOT_FOUND: &str = "NotFound";

/// An ordered integer-keyed map with an inclusive range-count query.
#[derive(Clone, Copy, Debug, Default)]
pub struct OrderedMapRange;

const SIGNATURE: &[OpSig] = &[
    OpSig {
        name: "Insert",
        args: &[ArgHint::Int, ArgHint::Any, ArgHint::Bool],
    },
    OpSig {
        name: "Delete",
        args: &[ArgHint::Int, ArgHint::Bool],
    },
    OpSig {
        name: "Find",
        args: &[ArgHint::Int, ArgHint::Any],
    },
    OpSig {
        name: "RangeCount",
        args: &[ArgHint::Int, ArgHint::Int, ArgHint::Int],
    },
];

type State = BTreeMap<i64, Value>;

impl Model for OrderedMapRange {
    type State = State;

    fn name(&self) -> &'static str {
        "omaprange"
    }

    fn signature(&self) -> &'static [OpSig] {
        SIGNATURE
    }

    fn initial_states(&self) -> Vec<State> {
        vec![BTreeMap::new()]
    }

    fn step(&self, map: &State, op: &str, args: &[Value]) -> Result<Vec<State>, ModelError> {
        let unchanged = || Ok(vec![map.clone()]);
        match op {
            "Insert" => {
                expect_arity(op, args, 3)?;
                let k = arg_int(op, args, 0)?;
                let ok = arg_bool(op, args, 2)?;
                let absent = !map.contains_key(&k);
                if ok != absent {
                    return Ok(vec![]);
                }
                if ok {
                    let mut next = map.clone();
                    next.insert(k, args[1].clone());
                    Ok(vec![next])
                } else {
                    unchanged()
                }
            }
            "Delete" => {
                expect_arity(op, args, 2)?;
                let k = arg_int(op, args, 0)?;
                let ok = arg_bool(op, args, 1)?;
                let present = map.contains_key(&k);
                if ok != present {
                    return Ok(vec![]);
                }
                if ok {
                    let mut next = map.clone();
                    next.remove(&k);
                    Ok(vec![next])
                } else {
                    unchanged()
                }
            }
            "Find" => {
                expect_arity(op, args, 2)?;
                let k = arg_int(op, args, 0)?;
                let matches = match map.get(&k) {
                    Some(stored) => *stored == args[1],
                    None => args[1].as_str() == Some(NOT_FOUND),
                };
                if matches {
                    unchanged()
                } else {
                    Ok(vec![])
                }
            }
            "RangeCount" => {
                expect_arity(op, args, 3)?;
                let lo = arg_int(op, args, 0)?;
                let hi = arg_int(op, args, 1)?;
                let count = arg_int(op, args, 2)?;
                if range_count(map, lo, hi) == count {
                    unchanged()
                } else {
                    Ok(vec![])
                }
            }
            _ => Err(ModelError::UnknownOp {
                model: self.name(),
                op: op.to_owned(),
            }),
        }
    }

    fn render(&self, map: &State) -> Value {
        Value::map(map.iter().map(|(k, v)| (Value::Int(*k), v.clone())))
    }

    fn enabled_actions_hint(&self, map: &State) -> Vec<ActionTemplate> {
        let free = ArgSlot::Free;
        let mut out = vec![
            // Any absent key may be inserted; the hint leaves the key open.
            ActionTemplate::new(
                "Insert",
                vec![
                    free(ArgHint::Int),
                    free(ArgHint::Any),
                    ArgSlot::Fixed(Value::Bool(true)),
                ],
            ),
            ActionTemplate::new(
                "Find",
                vec![free(ArgHint::Int), ArgSlot::Fixed(Value::str(NOT_FOUND))],
            ),
            ActionTemplate::new(
                "RangeCount",
                vec![free(ArgHint::Int), free(ArgHint::Int), free(ArgHint::Int)],
            ),
        ];
        for (k, v) in map {
            let key = ArgSlot::Fixed(Value::Int(*k));
            out.push(ActionTemplate::new(
                "Insert",
                vec![
                    key.clone(),
                    free(ArgHint::Any),
                    ArgSlot::Fixed(Value::Bool(false)),
                ],
            ));
            out.push(ActionTemplate::new(
                "Delete",
                vec![key.clone(), ArgSlot::Fixed(Value::Bool(true))],
            ));
            out.push(ActionTemplate::new(
                "Find",
                vec![key, ArgSlot::Fixed(v.clone())],
            ));
        }
        out
    }
}

/// Number of keys `k` with `lo <= k <= hi`.
pub(crate) fn range_count(map: &State, lo: i64, hi: i64) -> i64 {
    if lo > hi {
        return 0;
    }
    map.range(lo..=hi).count() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(pairs: &[(i64, &str)]) -> State {
        pairs.iter().map(|&(k, v)| (k, Value::str(v))).collect()
    }

    fn step(s: &State, op: &str, args: Vec<Value>) -> Vec<State> {
        OrderedMapRange.step(s, op, &args).unwrap()
    }

    #[test]
    fn find_on_empty_map_reports_not_found() {
        let s = State::new();
        assert_eq!(
            step(&s, "Find", vec![Value::Int(7), Value::str(NOT_FOUND)]),
            vec![s.clone()]
        );
        assert!(step(&s, "Find", vec![Value::Int(7), Value::str("a")]).is_empty());
    }

    #[test]
    fn range_count_bounds_are_inclusive() {
        let s = state(&[(3, "a"), (5, "b")]);
        let rc = |lo, hi, c| {
            step(
                &s,
                "RangeCount",
                vec![Value::Int(lo), Value::Int(hi), Value::Int(c)],
            )
        };
        assert_eq!(rc(3, 5, 2), vec![s.clone()]);
        assert!(rc(3, 5, 1).is_empty());
        assert_eq!(rc(4, 5, 1), vec![s.clone()]);
        assert_eq!(rc(5, 3, 0), vec![s.clone()]);
    }

    #[test]
    fn insert_result_must_match_presence() {
        let s = state(&[(3, "a")]);
        assert!(step(
            &s,
            "Insert",
            vec![Value::Int(3), Value::str("z"), Value::Bool(true)]
        )
        .is_empty());
        assert_eq!(
            step(
                &s,
                "Insert",
                vec![Value::Int(3), Value::str("z"), Value::Bool(false)]
            ),
            vec![s.clone()]
        );
        assert_eq!(
            step(
                &s,
                "Insert",
                vec![Value::Int(4), Value::str("z"), Value::Bool(true)]
            ),
            vec![state(&[(3, "a"), (4, "z")])]
        );
    }

    #[test]
    fn delete_result_must_match_presence() {
        let s = state(&[(3, "a")]);
        assert_eq!(
            step(&s, "Delete", vec![Value::Int(3), Value::Bool(true)]),
            vec![State::new()]
        );
        assert!(step(&s, "Delete", vec![Value::Int(4), Value::Bool(true)]).is_empty());
        assert_eq!(
            step(&s, "Delete", vec![Value::Int(4), Value::Bool(false)]),
            vec![s.clone()]
        );
    }

    #[test]
    fn non_integer_key_is_an_error() {
        assert!(OrderedMapRange
            .step(
                &State::new(),
                "Delete",
                &[Value::str("k"), Value::Bool(true)]
            )
            .is_err());
    }

    #[test]
    fn empty_map_hints_include_a_fresh_insert() {
        let hints = OrderedMapRange.enabled_actions_hint(&State::new());
        assert!(
            hints
                .iter()
                .any(|t| t.op == "Insert"
                    && t.args.last() == Some(&ArgSlot::Fixed(Value::Bool(true))))
        );
    }
}
