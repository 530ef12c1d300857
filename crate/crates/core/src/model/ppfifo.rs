use std::collections::BTreeMap;

use super::{arg_int, expect_arity, ActionTemplate, ArgHint, ArgSlot, Model, ModelError, OpSig};
use crate::value::Value;

/// A multi-producer queue that only orders elements of the same producer.
///
/// Elements are `<<producer, payload>>` tuples so a dequeued value names the
/// subqueue it must have come from. Consumers may take the head of any
/// producer's subqueue, in any interleaving.
#[derive(Clone, Copy, Debug, Default)]
pub struct PerProducerFifo;

const SIGNATURE: &[OpSig] = &[
    OpSig {
        name: "Enqueue",
        args: &[ArgHint::Int, ArgHint::Tuple],
    },
    OpSig {
        name: "EnqueueBulk",
        args: &[ArgHint::Int, ArgHint::Tuple],
    },
    OpSig {
        name: "Dequeue",
        args: &[ArgHint::Tuple],
    },
    OpSig {
        name: "DequeueBulk",
        args: &[ArgHint::Tuple],
    },
    OpSig {
        name: "DequeueEmpty",
        args: &[],
    },
];

/// Producer id to its pending elements, oldest first. Empty subqueues are
/// never stored, so equal contents give equal states.
type State = BTreeMap<i64, Vec<Value>>;

/// Builds the `<<producer, payload>>` element encoding.
pub fn element(producer: i64, payload: Value) -> Value {
    Value::tuple([Value::Int(producer), payload])
}

fn producer_of(op: &str, index: usize, v: &Value) -> Result<i64, ModelError> {
    match v.as_tuple() {
        Some([Value::Int(p), _]) => Ok(*p),
        _ => Err(ModelError::BadArgument {
            op: op.to_owned(),
            index,
            reason: format!("{v} is not a <<producer, payload>> element"),
        }),
    }
}

fn dequeue_in_place(state: &mut State, v: &Value, producer: i64) -> bool {
    let Some(sub) = state.get_mut(&producer) else {
        return false;
    };
    if sub.first() != Some(v) {
        return false;
    }
    sub.remove(0);
    if sub.is_empty() {
        state.remove(&producer);
    }
    true
}

impl Model for PerProducerFifo {
    type State = State;

    fn name(&self) -> &'static str {
        "ppfifo"
    }

    fn signature(&self) -> &'static [OpSig] {
        SIGNATURE
    }

    fn initial_states(&self) -> Vec<State> {
        vec![BTreeMap::new()]
    }

    fn step(&self, state: &State, op: &str, args: &[Value]) -> Result<Vec<State>, ModelError> {
        match op {
            "Enqueue" | "EnqueueBulk" => {
                expect_arity(op, args, 2)?;
                let producer = arg_int(op, args, 0)?;
                let elems: Vec<Value> = if op == "Enqueue" {
                    vec![args[1].clone()]
                } else {
                    args[1].as_tuple().unwrap_or_default().to_vec()
                };
                for e in &elems {
                    if producer_of(op, 1, e)? != producer {
                        return Err(ModelError::BadArgument {
                            op: op.to_owned(),
                            index: 1,
                            reason: format!("{e} does not belong to producer {producer}"),
                        });
                    }
                }
                if elems.is_empty() {
                    return Ok(vec![state.clone()]);
                }
                let mut next = state.clone();
                next.entry(producer).or_default().extend(elems);
                Ok(vec![next])
            }
            "Dequeue" => {
                expect_arity(op, args, 1)?;
                let producer = producer_of(op, 0, &args[0])?;
                let mut next = state.clone();
                if dequeue_in_place(&mut next, &args[0], producer) {
                    Ok(vec![next])
                } else {
                    Ok(vec![])
                }
            }
            "DequeueBulk" => {
                expect_arity(op, args, 1)?;
                let elems = args[0].as_tuple().ok_or_else(|| ModelError::BadArgument {
                    op: op.to_owned(),
                    index: 0,
                    reason: "expected a tuple of elements".into(),
                })?;
                let mut next = state.clone();
                for e in elems {
                    let producer = producer_of(op, 0, e)?;
                    if !dequeue_in_place(&mut next, e, producer) {
                        return Ok(vec![]);
                    }
                }
                Ok(vec![next])
            }
            "DequeueEmpty" => {
                expect_arity(op, args, 0)?;
                if state.is_empty() {
                    Ok(vec![state.clone()])
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

    fn render(&self, state: &State) -> Value {
        Value::map(
            state
                .iter()
                .map(|(p, sub)| (Value::Int(*p), Value::Tuple(sub.clone()))),
        )
    }

    fn enabled_actions_hint(&self, state: &State) -> Vec<ActionTemplate> {
        let mut out = vec![
            ActionTemplate::new(
                "Enqueue",
                vec![ArgSlot::Free(ArgHint::Int), ArgSlot::Free(ArgHint::Tuple)],
            ),
            ActionTemplate::new(
                "EnqueueBulk",
                vec![ArgSlot::Free(ArgHint::Int), ArgSlot::Free(ArgHint::Tuple)],
            ),
        ];
        if state.is_empty() {
            out.push(ActionTemplate::new("DequeueEmpty", vec![]));
        }
        for sub in state.values() {
            out.push(ActionTemplate::new(
                "Dequeue",
                vec![ArgSlot::Fixed(sub[0].clone())],
            ));
            out.push(ActionTemplate::new(
                "DequeueBulk",
                vec![ArgSlot::Fixed(Value::Tuple(sub.clone()))],
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(p: i64, x: i64) -> Value {
        element(p, Value::Int(x))
    }

    fn step(s: &State, op: &str, args: Vec<Value>) -> Vec<State> {
        PerProducerFifo.step(s, op, &args).unwrap()
    }

    fn after_bulk_enqueue() -> State {
        let batch = Value::tuple((1..=5).map(|x| e(0, x)));
        step(&State::new(), "EnqueueBulk", vec![Value::Int(0), batch]).remove(0)
    }

    #[test]
    fn batch_taken_from_the_middle_is_rejected() {
        let s = after_bulk_enqueue();
        let tail = Value::tuple([e(0, 3), e(0, 4), e(0, 5)]);
        assert!(step(&s, "DequeueBulk", vec![tail]).is_empty());
        let front = Value::tuple([e(0, 1), e(0, 2)]);
        let s2 = step(&s, "DequeueBulk", vec![front]);
        assert_eq!(s2.len(), 1);
        assert_eq!(s2[0][&0], vec![e(0, 3), e(0, 4), e(0, 5)]);
    }

    #[test]
    fn heads_of_different_producers_are_both_available() {
        let s = step(&State::new(), "Enqueue", vec![Value::Int(0), e(0, 1)]).remove(0);
        let s = step(&s, "Enqueue", vec![Value::Int(1), e(1, 9)]).remove(0);
        assert_eq!(step(&s, "Dequeue", vec![e(0, 1)]).len(), 1);
        assert_eq!(step(&s, "Dequeue", vec![e(1, 9)]).len(), 1);
        assert!(step(&s, "Dequeue", vec![e(1, 1)]).is_empty());
    }

    #[test]
    fn fresh_state_is_empty_for_consumers() {
        assert_eq!(
            step(&State::new(), "DequeueEmpty", vec![]),
            vec![State::new()]
        );
        assert!(step(&after_bulk_enqueue(), "DequeueEmpty", vec![]).is_empty());
    }

    #[test]
    fn draining_a_producer_removes_its_subqueue() {
        let s = step(&State::new(), "Enqueue", vec![Value::Int(2), e(2, 4)]).remove(0);
        assert_eq!(step(&s, "Dequeue", vec![e(2, 4)]), vec![State::new()]);
    }

    #[test]
    fn malformed_elements_are_errors() {
        assert!(PerProducerFifo
            .step(&State::new(), "Dequeue", &[Value::tuple([Value::Int(1)])])
            .is_err());
        assert!(PerProducerFifo
            .step(&State::new(), "Enqueue", &[Value::Int(0), e(1, 1)])
            .is_err());
    }
}
