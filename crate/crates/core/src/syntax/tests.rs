use super::*;

fn full(text: &str) -> String {
    print_full(&parse_expression_text(text).unwrap())
}

fn err(text: &str) -> String {
    parse_expression_text(text).unwrap_err().0[0]
        .message
        .clone()
}

#[test]
fn implies_nests_to_the_right() {
    assert_eq!(full("a implies b implies c"), "(a implies (b implies c))");
}

#[test]
fn precedence_table() {
    assert_eq!(full("a and b implies c"), "((a and b) implies c)");
    assert_eq!(full("a or b and c"), "((a or b) and c)");
    assert_eq!(full("x = y and z"), "((x = y) and z)");
    assert_eq!(full("a < b = c"), "((a < b) = c)");
    assert_eq!(full("1 + 2 * 3 - 4"), "((1 + (2 * 3)) - 4)");
    assert_eq!(full("not a = b"), "((not a) = b)");
    assert_eq!(full("-x.y"), "(-x.y)");
    assert_eq!(full("usage = usage@pre + 1"), "(usage = (usage@pre + 1))");
}

#[test]
fn if_expression() {
    let e = parse_expression_text("if b then e1 else e2 endif").unwrap();
    assert!(matches!(e.kind, ExprKind::If { .. }));
    assert!(err("if b then e1 endif").contains("missing 'else'"));
    assert!(err("if b then e1 else e2").contains("missing 'endif'"));
}

#[test]
fn dangling_arrow() {
    assert!(err("guests->").contains("collection operation"));
    assert!(err("guests-> + 1").contains("collection operation"));
}

#[test]
fn size_with_and_without_parens() {
    assert_eq!(
        parse_expression_text("guests->size").unwrap(),
        parse_expression_text("guests->size()").unwrap()
    );
}

#[test]
fn iterator_forms() {
    let e = parse_expression_text("guests->exists(g : Guest | g.age <= 4)").unwrap();
    let ExprKind::Arrow { iters, args, .. } = &e.kind else {
        panic!()
    };
    assert_eq!(iters.len(), 1);
    assert_eq!(args.len(), 1);
    let e = parse_expression_text("c->forAll(e1, e2 | e1 <> e2 implies e1.n <> e2.n)").unwrap();
    let ExprKind::Arrow { iters, .. } = &e.kind else {
        panic!()
    };
    assert_eq!(iters.len(), 2);
    let e = parse_expression_text("allReservations->select(pending)").unwrap();
    let ExprKind::Arrow { iters, args, .. } = &e.kind else {
        panic!()
    };
    assert!(iters.is_empty());
    assert_eq!(args[0].kind, ExprKind::Name("pending".into()));
}

#[test]
fn pathnames_only_for_classifiers() {
    let e = parse_expression_text("Hotel::Room.allInstances").unwrap();
    let ExprKind::Nav { source, .. } = &e.kind else {
        panic!()
    };
    assert_eq!(
        source.kind,
        ExprKind::Path(vec!["Hotel".into(), "Room".into()])
    );
    assert!(err("self.Room::size").contains("oclAsType"));
    assert!(err("self.oclType").contains("oclType"));
}

#[test]
fn let_expression() {
    let e = parse_expression_text(
        "let income : Integer = self.job.salary->sum in if isUnemployed then income < 100 else income >= 100 endif",
    )
    .unwrap();
    let ExprKind::Let { ty, .. } = &e.kind else {
        panic!()
    };
    assert!(ty.is_some());
    assert!(err("let f(x : Integer) = x in f(1)").contains("not supported"));
}

#[test]
fn error_positions_inside_input() {
    for text in ["a +", "(a", "a b", "if a then b else c", "x->", "1 + * 2"] {
        let d = parse_expression_text(text).unwrap_err();
        let p = d.0[0].pos;
        assert_eq!(p.line, 1, "{text}");
        assert!(
            p.col >= 1 && p.col as usize <= text.len() + 1,
            "{text}: {p}"
        );
    }
}

const BATHROOM: &str = "
context Bathroom::uses(g : Guest)
pre: if room->notEmpty then
        room.guests->includes(g)
    else
        g.room.floorNumber = self.floorNumber
    endif
post: usage = usage@pre + 1
";

#[test]
fn operation_spec() {
    let f = parse_constraint_file(BATHROOM).unwrap();
    let ConstraintDecl::Operation(op) = &f.decls[0] else {
        panic!()
    };
    assert_eq!(op.display_name(), "Bathroom::uses");
    assert!(matches!(op.pre.as_ref().unwrap().kind, ExprKind::If { .. }));
    assert_eq!(
        print_expr(op.post.as_ref().unwrap()),
        "usage = usage@pre + 1"
    );
}

#[test]
fn trivial_invariant() {
    let f = parse_constraint_file("context Title invariant: true").unwrap();
    assert_eq!(f.decls.len(), 1);
    let ConstraintDecl::Invariant(i) = &f.decls[0] else {
        panic!()
    };
    assert_eq!(i.body.kind, ExprKind::Lit(Literal::Bool(true)));
}

const INVALIDATE: &str = "
context CustomerCard::invalidate(): void
pre: -- none
post: valid = false
called: if valid@pre = true then
    if customer.special then
customer.sendPoliteInvalidLetter()
    else customer.sendInvalidLetter()
    endif
endif
";

#[test]
fn called_clause() {
    let f = parse_constraint_file(INVALIDATE).unwrap();
    let ConstraintDecl::Operation(op) = &f.decls[0] else {
        panic!()
    };
    assert!(op.pre.is_none());
    assert!(op.returns.is_none());
    let called = op.called.as_ref().unwrap();
    let MessageItem::If { then, els, .. } = &called[0] else {
        panic!()
    };
    assert!(els.is_empty());
    let MessageItem::If {
        then: inner,
        els: other,
        ..
    } = &then[0]
    else {
        panic!()
    };
    let MessageItem::Send { op, target, .. } = &inner[0] else {
        panic!()
    };
    assert_eq!(op, "sendPoliteInvalidLetter");
    assert!(target.is_some());
    assert_eq!(other.len(), 1);
}

#[test]
fn other_context_forms() {
    let text = "
context t : Title invariant: t.copies->notEmpty
action (m : Member, lb : Library)::borrow(c : Copy, d : Integer)
pre: d > lb.today
event borrow(lb : Library, m : Member)
pre: true
context CustomerCard action:
on self.goodThru.isAfter(Date.now) do
self.invalidate()
context Person invariant:
grandancestors = parents.ancestors;
ancestors = parents->union(grandancestors)
context Person loose invariant: ancestors = parents->union(parents.ancestors)
context Customer invariant:
constant dateOfBirth
constant age()
";
    let f = parse_constraint_file(text).unwrap();
    assert_eq!(f.decls.len(), 7);
    let ConstraintDecl::Invariant(i) = &f.decls[0] else {
        panic!()
    };
    assert_eq!(i.context.self_name.as_deref(), Some("t"));
    assert!(
        matches!(&f.decls[1], ConstraintDecl::Operation(o) if matches!(&o.receivers, Receivers::Joint(r) if r.len() == 2))
    );
    assert!(matches!(&f.decls[2], ConstraintDecl::Operation(o) if o.receivers == Receivers::Event));
    assert!(matches!(&f.decls[3], ConstraintDecl::Action(_)));
    let ConstraintDecl::Derived(d) = &f.decls[4] else {
        panic!()
    };
    assert_eq!(d.defs.len(), 2);
    let ConstraintDecl::Derived(d) = &f.decls[5] else {
        panic!()
    };
    assert_eq!(d.mode, RecursionMode::Loose);
    let ConstraintDecl::Constant(c) = &f.decls[6] else {
        panic!()
    };
    assert_eq!(c.items.len(), 2);
    assert!(c.items[1].query);

    let again = parse_constraint_file(&print_file(&f)).unwrap();
    assert_eq!(again, f);
}

#[test]
fn unknown_stereotype() {
    let e = parse_constraint_file("context Room inv: true").unwrap_err();
    assert!(e.0[0].message.contains("unknown stereotype 'inv'"));
    let e = parse_constraint_file("context Room::f() guard: true").unwrap_err();
    assert!(e.0[0].message.contains("unknown stereotype 'guard'"));
}

#[test]
fn printing_round_trips() {
    for text in [
        "a implies (b implies c)",
        "(a implies b) implies c",
        "a - (b - c)",
        "- -x",
        "not not b",
        "(a + b).abs()",
        "Set{1, 2}->including(3)",
        "'it\\'s' = s",
        "2.5e-3 < x",
        "(let x : Integer = 1 in x + 1) * 2",
        "if a then b else c endif.foo",
    ] {
        let e = parse_expression_text(text).unwrap();
        let printed = print_expr(&e);
        assert_eq!(
            parse_expression_text(&printed).unwrap(),
            e,
            "{text} -> {printed}"
        );
    }
}
