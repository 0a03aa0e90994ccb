use std::path::PathBuf;

use oclk_core::contracts::{CheckReport, Verdict};
use oclk_core::dynamics::{check_action, check_called, load_trace, Trace, TraceEntry};
use oclk_core::eval::QueryTable;
use oclk_core::model::{load_class_model, ClassModel, ObjectId};
use oclk_core::syntax::parse_constraint_file;
use oclk_core::types::{typecheck_file, TypedFile};
use proptest::prelude::*;

fn cards() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/cards")
}

struct Cards {
    model: ClassModel,
    file: TypedFile,
    queries: QueryTable,
}

impl Cards {
    fn load() -> Cards {
        let model = load_class_model(&std::fs::read_to_string(cards().join("model.toml")).unwrap())
            .unwrap();
        let text = std::fs::read_to_string(cards().join("cards.ocl")).unwrap();
        let file = typecheck_file(&parse_constraint_file(&text).unwrap(), &model).unwrap();
        let queries = QueryTable::build(&model).unwrap();
        Cards {
            model,
            file,
            queries,
        }
    }

    fn trace(&self, name: &str) -> Trace {
        let dir = cards().join("traces");
        let text = std::fs::read_to_string(dir.join(format!("{name}.toml"))).unwrap();
        let read = |p: &str| std::fs::read_to_string(dir.join(p)).map_err(|e| e.to_string());
        load_trace(&text, &self.model, &read).unwrap()
    }

    fn called(&self, t: &Trace) -> CheckReport {
        let spec = self
            .file
            .operations
            .iter()
            .find(|o| o.called.is_some())
            .unwrap();
        check_called(spec, t, &self.model, &self.queries).unwrap()
    }

    fn action(&self, t: &Trace) -> CheckReport {
        check_action(&self.file.actions[0], t, &self.model, &self.queries).unwrap()
    }
}

fn verdicts(r: &CheckReport) -> Vec<Verdict> {
    r.rows.iter().map(|x| x.verdict).collect()
}

fn send(receiver: &str, op: &str) -> TraceEntry {
    TraceEntry::Send {
        sender: None,
        receiver: ObjectId::new(receiver),
        op: op.into(),
        args: vec![],
    }
}

fn unrelated() -> impl Strategy<Value = TraceEntry> {
    prop::sample::select(vec![
        ("ann", "sendInvalidLetter"),
        ("ann", "sendPoliteInvalidLetter"),
        ("bob", "invalidate"),
        ("card2", "invalidate"),
    ])
    .prop_map(|(r, op)| send(r, op))
}

/// Inserts `extra` at the given positions, never before the first state.
fn with_inserted(t: &Trace, extra: &[(usize, TraceEntry)]) -> Trace {
    let mut out = t.clone();
    for (at, e) in extra {
        let i = 1 + at % out.entries.len();
        out.entries.insert(i, e.clone());
    }
    out
}

#[test]
fn no_execution_means_vacuous_success() {
    let c = Cards::load();
    let t = c.trace("action-sent");
    let r = c.called(&t);
    assert!(r.rows.is_empty());
    assert!(r
        .notes
        .iter()
        .any(|n| n.message.contains("vacuously satisfied")));
}

#[test]
fn a_second_edge_needs_a_second_send() {
    let c = Cards::load();
    let mut t = c.trace("action-sent");
    let snaps = t.entries.clone();
    t.entries.extend(
        snaps
            .into_iter()
            .filter(|e| matches!(e, TraceEntry::State(_))),
    );
    assert_eq!(
        verdicts(&c.action(&t)),
        [Verdict::Satisfied, Verdict::Violated]
    );
}

proptest! {
    #[test]
    fn called_is_monotone_in_sends(extra in prop::collection::vec((0usize..8, unrelated()), 0..4)) {
        let c = Cards::load();
        let base = c.trace("called-polite");
        prop_assert_eq!(verdicts(&c.called(&base)), [Verdict::Satisfied]);
        let more = with_inserted(&base, &extra);
        prop_assert!(verdicts(&c.called(&more)).iter().all(|v| *v == Verdict::Satisfied));
    }

    #[test]
    fn unrelated_messages_do_not_satisfy_actions(extra in prop::collection::vec((0usize..8, unrelated()), 0..4)) {
        let c = Cards::load();
        for (name, want) in [("action-missing", Verdict::Violated), ("action-sent", Verdict::Satisfied)] {
            let t = with_inserted(&c.trace(name), &extra);
            prop_assert_eq!(verdicts(&c.action(&t)), [want], "{}", name);
        }
    }
}
