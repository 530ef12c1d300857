use super::{expect_arity, ActionTemplate, ArgHint, ArgSlot, Model, ModelError, OpSig};
use crate::value::Value;

/// A single FIFO queue where every operation is atomic.
#[derive(Clone, Copy, Debug, Default)]
pub struct AtomicQueue;

const SIGNATURE: &[OpSig] = &[
    OpSig {
        name: "Enqueue",
        args: &[ArgHint::Any],
    },
    OpSig {
        name: "Dequeue",
        args: &[ArgHint::Any],
    },
    OpSig {
        name: "DequeueEmpty",
        args: &[],
    },
];

impl Model for AtomicQueue {
    type State = Vec<Value>;

    fn name(&self) -> &'static str {
        "queue"
    }

    fn signature(&self) -> &'static [OpSig] {
        SIGNATURE
    }

    fn initial_states(&self) -> Vec<Self::State> {
        vec![Vec::new()]
    }

    fn step(
        &self,
        queue: &Vec<Value>,
        op: &str,
        args: &[Value],
    ) -> Result<Vec<Vec<Value>>, ModelError> {
        match op {
            "Enqueue" => {
                expect_arity(op, args, 1)?;
                let mut next = Vec::with_capacity(queue.len() + 1);
                next.extend_from_slice(queue);
                next.push(args[0].clone());
                Ok(vec![next])
            }
            "Dequeue" => {
                expect_arity(op, args, 1)?;
                match queue.first() {
                    Some(head) if *head == args[0] => Ok(vec![queue[1..].to_vec()]),
                    _ => Ok(vec![]),
                }
            }
            "DequeueEmpty" => {
                expect_arity(op, args, 0)?;
                if queue.is_empty() {
                    Ok(vec![Vec::new()])
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

    fn render(&self, queue: &Vec<Value>) -> Value {
        Value::Tuple(queue.clone())
    }

    fn view(&self, queue: &Vec<Value>) -> Vec<u8> {
        Value::encode_tuple(queue)
    }

    fn enabled_actions_hint(&self, queue: &Vec<Value>) -> Vec<ActionTemplate> {
        let mut out = vec![ActionTemplate::new(
            "Enqueue",
            vec![ArgSlot::Free(ArgHint::Any)],
        )];
        match queue.first() {
            Some(head) => out.push(ActionTemplate::new(
                "Dequeue",
                vec![ArgSlot::Fixed(head.clone())],
            )),
            None => out.push(ActionTemplate::new("DequeueEmpty", vec![])),
        }
        out
    }
}
