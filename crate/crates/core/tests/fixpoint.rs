use oclk_core::eval::{strong_equal, QueryTable, Value};
use oclk_core::fixpoint::{
    check_loose, group_derived, minimality_certificate, solve_minimal, DerivedGroup, FixpointError,
};
use oclk_core::model::{load_class_model, load_snapshot, ClassModel, ObjectId, Snapshot};
use oclk_core::syntax::parse_constraint_file;
use oclk_core::types::typecheck_file;
use proptest::prelude::*;

const PERSONS: &str = r#"
[[class]]
name = "Person"
attribute = [
    { name = "ancestors", type = "Set(Person)", derived = true },
    { name = "grandancestors", type = "Set(Person)", derived = true },
    { name = "generation", type = "Integer", derived = true },
]

[[association]]
name = "Parenthood"
a = { class = "Person", role = "children", multiplicity = "0..*" }
b = { class = "Person", role = "parents", multiplicity = "0..*" }
"#;

fn model() -> ClassModel {
    load_class_model(PERSONS).unwrap()
}

fn group(text: &str, m: &ClassModel) -> DerivedGroup {
    let f = typecheck_file(&parse_constraint_file(text).unwrap(), m).unwrap();
    let mut groups = group_derived(&f.derived).unwrap();
    assert_eq!(groups.len(), 1);
    groups.remove(0)
}

fn people(n: usize, edges: &[(usize, usize)], m: &ClassModel) -> Snapshot {
    let mut doc = String::new();
    for i in 0..n {
        doc += &format!("[[object]]\nid = \"p{i}\"\nclass = \"Person\"\n\n");
    }
    for (c, p) in edges {
        doc += &format!("[[link]]\nassoc = \"Parenthood\"\nfrom = \"p{c}\"\nto = \"p{p}\"\n\n");
    }
    load_snapshot(&doc, m).unwrap()
}

fn set_of(ids: impl IntoIterator<Item = usize>) -> Value {
    Value::set(ids.into_iter().map(|i| Value::obj(format!("p{i}"))))
}

fn attr(s: &Snapshot, i: usize, name: &str) -> Value {
    s.attr(&ObjectId::new(format!("p{i}")), name)
        .unwrap()
        .clone()
}

const ANCESTORS: &str = "context Person invariant: ancestors = parents->union(parents.ancestors)";

/// Reachability over the parent edges by depth-first search.
fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = edges
                .iter()
                .filter(|(c, _)| *c == start)
                .map(|(_, p)| *p)
                .collect();
            while let Some(x) = stack.pop() {
                if !seen[x] {
                    seen[x] = true;
                    stack.extend(edges.iter().filter(|(c, _)| *c == x).map(|(_, p)| *p));
                }
            }
            (0..n).filter(|i| seen[*i]).collect()
        })
        .collect()
}

proptest! {
    #[test]
    fn ancestors_are_the_transitive_closure(
        n in 1usize..6,
        raw in prop::collection::vec((0usize..6, 0usize..6), 0..10),
    ) {
        let m = model();
        let mut edges: Vec<(usize, usize)> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
        edges.sort();
        edges.dedup();
        let g = group(ANCESTORS, &m);
        let s = people(n, &edges, &m);
        let solved = solve_minimal(&g, &s, &m, &QueryTable::empty(), 1000).unwrap();
        let want = closure(n, &edges);
        for (i, w) in want.iter().enumerate() {
            prop_assert!(strong_equal(&attr(&solved.snapshot, i, "ancestors"), &set_of(w.clone())), "p{}", i);
        }
        prop_assert!(solved.iterations <= n + 1, "{} iterations for {} people", solved.iterations, n);
        let ok = check_loose(&group(ANCESTORS.replace("invariant", "loose invariant").as_str(), &m), &solved.snapshot, &m, &QueryTable::empty());
        prop_assert!(ok.unwrap().iter().all(|r| r.verdict == oclk_core::eval::Bool3::True));
        prop_assert!(minimality_certificate(&g, &s, &solved.snapshot, &m, &QueryTable::empty(), 1000).unwrap());
    }
}

#[test]
fn chain_ancestors_up_to_n() {
    let m = model();
    let g = group(ANCESTORS, &m);
    for n in 1..8 {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        let solved =
            solve_minimal(&g, &people(n, &edges, &m), &m, &QueryTable::empty(), 1000).unwrap();
        for i in 0..n {
            assert!(strong_equal(
                &attr(&solved.snapshot, i, "ancestors"),
                &set_of(i + 1..n)
            ));
        }
        assert!(
            solved.iterations <= n + 1,
            "chain of {n}: {} iterations",
            solved.iterations
        );
    }
}

#[test]
fn mutual_recursion_through_grandancestors() {
    let m = model();
    let g = group(
        "context Person invariant:\ngrandancestors = parents.ancestors;\nancestors = parents->union(grandancestors)",
        &m,
    );
    let s = people(4, &[(0, 1), (1, 2), (2, 3)], &m);
    let solved = solve_minimal(&g, &s, &m, &QueryTable::empty(), 1000)
        .unwrap()
        .snapshot;
    assert!(strong_equal(
        &attr(&solved, 0, "grandancestors"),
        &set_of([2, 3])
    ));
    assert!(strong_equal(
        &attr(&solved, 0, "ancestors"),
        &set_of([1, 2, 3])
    ));
    assert!(strong_equal(
        &attr(&solved, 2, "grandancestors"),
        &set_of([])
    ));
}

#[test]
fn scalar_recursion_settles_on_a_fixed_value() {
    let m = model();
    let g = group(
        "context Person invariant: generation = if parents->isEmpty then 0 else parents->collect(generation)->sum() endif",
        &m,
    );
    let s = people(2, &[(0, 1)], &m);
    let seeded = s.with_attrs([
        (ObjectId::new("p0"), "generation".to_string(), Value::Int(0)),
        (ObjectId::new("p1"), "generation".to_string(), Value::Int(0)),
    ]);
    let solved = solve_minimal(&g, &seeded, &m, &QueryTable::empty(), 100)
        .unwrap()
        .snapshot;
    assert!(strong_equal(
        &attr(&solved, 0, "generation"),
        &Value::Int(0)
    ));
}

#[test]
fn divergence_reports_the_last_iterates() {
    let m = load_class_model("[[class]]\nname = \"Cell\"\nattribute = [{ name = \"a\", type = \"Integer\", derived = true }]\n")
        .unwrap();
    let g = group("context Cell invariant: a = a + 1", &m);
    let s = load_snapshot(
        "[[object]]\nid = \"c\"\nclass = \"Cell\"\nattrs = { a = 0 }\n",
        &m,
    )
    .unwrap();
    match solve_minimal(&g, &s, &m, &QueryTable::empty(), 50) {
        Err(e @ FixpointError::Divergence { .. }) => {
            let report = e.report();
            assert!(report.contains("did not converge after 50"), "{report}");
            assert!(report.contains("c: 50 then 51"), "{report}");
        }
        other => panic!("{other:?}"),
    }
}
