use boxcheck::model::AtomicQueue;
use boxcheck::workload::{emit_fuzzer_template, LockQueue};
use boxcheck::{check, CheckOptions};

#[path = "generated/queue_fuzzer.rs"]
mod queue_fuzzer;

const ENQUEUE: &str = r#"        let v = Value::Int(ctx.pick());
        let t = ctx.timed(|p| self.queue.enqueue(v.clone(), p));
        Some(Recorded::new("Enqueue", vec![v], &t))"#;

const DEQUEUE: &str = r#"        let t = ctx.timed(|p| self.queue.dequeue(p));
        Some(match &t.value {
            Some(v) => Recorded::new("Dequeue", vec![v.clone()], &t),
            None => Recorded::new("DequeueEmpty", vec![], &t),
        })"#;

const DEQUEUE_EMPTY: &str = "        // Recorded by the Dequeue binding.\n        None";

/// The edits a user makes to bind the template to `LockQueue`.
fn fill(template: &str) -> String {
    let edits = [
        (
            "use boxcheck::value::Value;\n",
            "use boxcheck::value::Value;\nuse boxcheck::workload::LockQueue;\n",
        ),
        (
            "    // TODO: the implementation under test.",
            "    pub queue: LockQueue,",
        ),
        ("        unimplemented!(\"Enqueue is not bound\")", ENQUEUE),
        ("        unimplemented!(\"Dequeue is not bound\")", DEQUEUE),
        (
            "        unimplemented!(\"DequeueEmpty is not bound\")",
            DEQUEUE_EMPTY,
        ),
    ];
    let mut src = template.to_owned();
    for (from, to) in edits {
        assert_eq!(
            src.matches(from).count(),
            1,
            "template no longer contains {from:?}"
        );
        src = src.replace(from, to);
    }
    src
}

#[test]
fn filled_template_matches_the_committed_fuzzer() {
    let filled = fill(&emit_fuzzer_template(&AtomicQueue));
    assert_eq!(filled, include_str!("generated/queue_fuzzer.rs"));
}

#[test]
fn filled_fuzzer_records_accepted_traces() {
    for seed in 0..3 {
        let target = queue_fuzzer::Target {
            queue: LockQueue::new(None),
        };
        let tr = queue_fuzzer::record(&target, 4, 300, seed).unwrap();
        assert!(!tr.is_empty());
        assert_eq!(tr.meta.model, queue_fuzzer::MODEL);
        let verdict = check(&tr, &AtomicQueue, &CheckOptions::default())
            .unwrap()
            .verdict;
        assert!(verdict.is_accepted(), "seed {seed}: {verdict}");
    }
}
