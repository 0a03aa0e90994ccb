use oclk_core::contracts::{
    check_invariants, check_operation, operation_rows, InvocationDoc, OpVerdicts, Verdict,
};
use oclk_core::eval::QueryTable;
use oclk_core::model::{load_class_model, load_snapshot, ClassModel, Snapshot};
use oclk_core::syntax::parse_constraint_file;
use oclk_core::types::{typecheck_file, TypedFile};
use proptest::prelude::*;

const COUNTER: &str = r#"
[[class]]
name = "Counter"
attribute = [{ name = "n", type = "Integer" }, { name = "step", type = "Integer" }]
operation = [
    { name = "bump", params = [{ name = "by", type = "Integer" }], returns = "Integer" },
]
"#;

const SPEC: &str = "context Counter::bump(by : Integer) : Integer
pre: by > 0
post: n = n@pre + by and result = n

context c : Counter invariant: c.n >= 0
";

fn setup() -> (ClassModel, TypedFile) {
    let m = load_class_model(COUNTER).unwrap();
    let f = typecheck_file(&parse_constraint_file(SPEC).unwrap(), &m).unwrap();
    (m, f)
}

fn state(m: &ClassModel, n: i64) -> Snapshot {
    load_snapshot(
        &format!("[[object]]\nid = \"k\"\nclass = \"Counter\"\nattrs = {{ n = {n}, step = 1 }}\n"),
        m,
    )
    .unwrap()
}

fn bump(
    m: &ClassModel,
    f: &TypedFile,
    before: i64,
    by: i64,
    after: i64,
    result: i64,
) -> OpVerdicts {
    let doc = InvocationDoc::parse(&format!(
        "op = \"Counter::bump\"\nreceiver = \"k\"\nargs = {{ by = {by} }}\nresult = {result}\n"
    ))
    .unwrap();
    let inv = doc
        .bind(&f.operations[0], m, state(m, before), state(m, after))
        .unwrap();
    check_operation(&f.operations[0], &inv, m, &QueryTable::empty()).unwrap()
}

proptest! {
    #[test]
    fn verdicts_follow_the_arithmetic(before in 0i64..50, by in -3i64..4, after in 0i64..60, result in 0i64..60) {
        let (m, f) = setup();
        let v = bump(&m, &f, before, by, after, result);
        let pre = by > 0;
        let post = after == before + by && result == after;
        prop_assert_eq!(v.pre, Verdict::from(oclk_core::eval::Bool3::from(pre)));
        prop_assert_eq!(v.post, Verdict::from(oclk_core::eval::Bool3::from(post)));
        prop_assert_eq!(v.combined == Verdict::Satisfied, !pre || post);
    }
}

#[test]
fn rows_name_the_binding() {
    let (m, f) = setup();
    let doc = InvocationDoc::parse(
        "op = \"Counter::bump\"\nreceiver = \"k\"\nargs = { by = 2 }\nresult = 3\n",
    )
    .unwrap();
    let inv = doc
        .bind(&f.operations[0], &m, state(&m, 1), state(&m, 3))
        .unwrap();
    let v = check_operation(&f.operations[0], &inv, &m, &QueryTable::empty()).unwrap();
    let rows = operation_rows(&f.operations[0], &inv, v);
    assert_eq!(
        rows.verdict_of("Counter::bump:pre", "k, by=2"),
        Some(Verdict::Satisfied)
    );
    assert_eq!(
        rows.verdict_of("Counter::bump", "k, by=2"),
        Some(Verdict::Satisfied)
    );
}

#[test]
fn bad_invocations_are_reported() {
    let (m, f) = setup();
    let spec = &f.operations[0];
    for (text, needle) in [
        ("op = \"Counter::bump\"\nargs = { by = 2 }\n", "receiver"),
        (
            "op = \"Counter::bump\"\nreceiver = \"nobody\"\nargs = { by = 2 }\n",
            "nobody",
        ),
        (
            "op = \"Counter::bump\"\nreceiver = \"k\"\nargs = { by = 'x' }\n",
            "by",
        ),
    ] {
        let doc = InvocationDoc::parse(text).unwrap();
        let err = doc.bind(spec, &m, state(&m, 0), state(&m, 0)).unwrap_err();
        assert!(err.contains(needle), "{text}: {err}");
    }
    assert!(!InvocationDoc::parse("op = \"Other::bump\"\n")
        .unwrap()
        .names(spec));
}

#[test]
fn invariants_cover_every_instance() {
    let (m, f) = setup();
    let s = load_snapshot(
        "[[object]]\nid = \"a\"\nclass = \"Counter\"\nattrs = { n = 1 }\n\
         [[object]]\nid = \"b\"\nclass = \"Counter\"\nattrs = { n = -1 }\n\
         [[object]]\nid = \"c\"\nclass = \"Counter\"\n",
        &m,
    )
    .unwrap();
    let r = check_invariants(&f, &s, &m, &QueryTable::empty()).unwrap();
    let id = &f.invariants[0].id;
    assert_eq!(r.verdict_of(id, "a"), Some(Verdict::Satisfied));
    assert_eq!(r.verdict_of(id, "b"), Some(Verdict::Violated));
    assert_eq!(r.verdict_of(id, "c"), Some(Verdict::Undefined));
}
