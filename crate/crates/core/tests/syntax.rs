use oclk_core::syntax::{
    parse_constraint_file, parse_expression_text, print_expr, print_file, print_full,
};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        (0i64..100).prop_map(|i| i.to_string()),
        Just("2.5".to_string()),
        Just(r"'it\'s'".to_string()),
        Just("true".to_string()),
        prop::sample::select(vec![
            "x",
            "self",
            "guests",
            "room.floorNumber",
            "n@pre",
            "Set{1, 2}",
            "Guest.allInstances"
        ])
        .prop_map(String::from),
    ]
}

fn expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 40, 3, |inner| {
        let ops = prop::sample::select(vec![
            "+", "-", "*", "/", "and", "or", "xor", "implies", "=", "==", "<>", "<", "<=", ">",
            ">=",
        ]);
        prop_oneof![
            (inner.clone(), ops, inner.clone()).prop_map(|(a, o, b)| format!("{a} {o} {b}")),
            inner.clone().prop_map(|a| format!("not {a}")),
            inner.clone().prop_map(|a| format!("- {a}")),
            inner.clone().prop_map(|a| format!("({a})")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, t, e)| format!("if {c} then {t} else {e} endif")),
            (
                inner.clone(),
                prop::sample::select(vec!["exists", "forAll", "select", "collect", "isUnique"]),
                inner.clone()
            )
                .prop_map(|(s, it, b)| format!("({s})->{it}(v | {b})")),
            (inner.clone(), inner.clone()).prop_map(|(s, a)| format!("({s})->includes({a})")),
            inner.clone().prop_map(|s| format!("({s})->size")),
            (inner.clone(), inner).prop_map(|(s, a)| format!("({s}).max({a})")),
        ]
    })
}

proptest! {
    #[test]
    fn printing_then_parsing_is_identity(text in expr()) {
        let e = parse_expression_text(&text).unwrap();
        let minimal = print_expr(&e);
        let back = parse_expression_text(&minimal).unwrap();
        prop_assert_eq!(print_full(&back), print_full(&e));
        prop_assert_eq!(print_expr(&back), minimal);
        let full = print_full(&e);
        prop_assert_eq!(print_full(&parse_expression_text(&full).unwrap()), full);
    }
}

#[test]
fn corpus_files_round_trip() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut seen = 0;
    let mut stack = vec![root];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "ocl") {
                let text = std::fs::read_to_string(&path).unwrap();
                let f = parse_constraint_file(&text)
                    .unwrap_or_else(|d| panic!("{}: {d}", path.display()));
                let printed = print_file(&f);
                let again =
                    parse_constraint_file(&printed).unwrap_or_else(|d| panic!("{printed}\n{d}"));
                assert_eq!(print_file(&again), printed, "{}", path.display());
                seen += 1;
            }
        }
    }
    assert!(seen >= 10);
}

#[test]
fn operator_precedence() {
    let full = |t: &str| print_full(&parse_expression_text(t).unwrap());
    assert_eq!(full("a implies b implies c"), "(a implies (b implies c))");
    assert_eq!(full("a and b or c xor d"), "(((a and b) or c) xor d)");
    assert_eq!(full("not a = b"), "((not a) = b)");
    assert_eq!(full("1 + 2 * 3 < 7"), "((1 + (2 * 3)) < 7)");
    assert_eq!(full("a = b implies c"), "((a = b) implies c)");
}
