use oclk_core::model::{load_class_model, ClassModel};
use oclk_core::syntax::{parse_constraint_file, parse_expression_text};
use oclk_core::types::{
    conforms_to, least_common_supertype, typecheck_expression, typecheck_file, CollectionKind,
    ExprScope, LcsError, Type,
};
use proptest::prelude::*;

const MODEL: &str = r#"
[[class]]
name = "Named"

[[class]]
name = "Drawable"

[[class]]
name = "Square"
supertypes = ["Named", "Drawable"]

[[class]]
name = "Diamond"
supertypes = ["Named", "Drawable"]

[[class]]
name = "Shape"

[[class]]
name = "Circle"
supertypes = ["Shape"]

[[class]]
name = "Disc"
supertypes = ["Circle"]
"#;

fn model() -> ClassModel {
    load_class_model(MODEL).unwrap()
}

fn ty() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![
        Just(Type::Boolean),
        Just(Type::Integer),
        Just(Type::Real),
        Just(Type::String),
        Just(Type::OclAny),
        prop::sample::select(vec![
            "Named", "Drawable", "Square", "Diamond", "Shape", "Circle", "Disc"
        ])
        .prop_map(Type::class),
    ];
    leaf.prop_recursive(2, 6, 1, |inner| {
        (
            prop::sample::select(vec![
                CollectionKind::Set,
                CollectionKind::Bag,
                CollectionKind::Sequence,
                CollectionKind::Collection,
            ]),
            inner,
        )
            .prop_map(|(k, t)| Type::Collection(k, Box::new(t)))
    })
}

proptest! {
    #[test]
    fn conformance_is_a_partial_order(a in ty(), b in ty(), c in ty()) {
        let m = model();
        prop_assert!(conforms_to(&a, &a, &m));
        if conforms_to(&a, &b, &m) && conforms_to(&b, &a, &m) {
            prop_assert_eq!(&a, &b);
        }
        if conforms_to(&a, &b, &m) && conforms_to(&b, &c, &m) {
            prop_assert!(conforms_to(&a, &c, &m));
        }
    }

    #[test]
    fn collections_never_conform_to_oclany(t in ty()) {
        let m = model();
        prop_assert_eq!(conforms_to(&t, &Type::OclAny, &m), !t.is_collection());
    }

    #[test]
    fn lcs_is_a_least_upper_bound(a in ty(), b in ty(), c in ty()) {
        let m = model();
        match least_common_supertype(&a, &b, &m) {
            Ok(l) => {
                prop_assert!(conforms_to(&a, &l, &m));
                prop_assert!(conforms_to(&b, &l, &m));
                if conforms_to(&a, &c, &m) && conforms_to(&b, &c, &m) {
                    prop_assert!(conforms_to(&l, &c, &m), "{} is not below the bound {}", l, c);
                }
                prop_assert_eq!(least_common_supertype(&b, &a, &m).ok(), Some(l));
            }
            Err(e) => prop_assert!(least_common_supertype(&b, &a, &m).is_err(), "{}", e),
        }
    }

    #[test]
    fn lcs_of_comparable_types_is_the_larger(a in ty(), b in ty()) {
        let m = model();
        if conforms_to(&a, &b, &m) {
            prop_assert_eq!(least_common_supertype(&a, &b, &m), Ok(b));
        }
    }
}

#[test]
fn multiple_inheritance_is_ambiguous() {
    let m = model();
    assert!(matches!(
        least_common_supertype(&Type::class("Square"), &Type::class("Diamond"), &m),
        Err(LcsError::Ambiguous(_))
    ));
    assert_eq!(
        least_common_supertype(&Type::class("Disc"), &Type::class("Circle"), &m),
        Ok(Type::class("Circle"))
    );
    assert_eq!(
        least_common_supertype(&Type::set(Type::Integer), &Type::bag(Type::Real), &m),
        Ok(Type::collection(Type::Real))
    );
    assert!(least_common_supertype(&Type::set(Type::Integer), &Type::Integer, &m).is_err());
}

fn type_of(text: &str, vars: &[(&str, Type)]) -> Result<Type, String> {
    let scope = ExprScope {
        self_type: None,
        vars: vars
            .iter()
            .map(|(n, t)| (n.to_string(), t.clone()))
            .collect(),
        post: false,
    };
    let e = parse_expression_text(text).map_err(|d| d.to_string())?;
    typecheck_expression(&e, &model(), &scope)
        .map(|t| t.ty)
        .map_err(|d| d.to_string())
}

#[test]
fn expression_types() {
    assert_eq!(type_of("1 + 2", &[]), Ok(Type::Integer));
    assert_eq!(type_of("1 / 2", &[]), Ok(Type::Real));
    assert_eq!(
        type_of("if true then 1 else 2.5 endif", &[]),
        Ok(Type::Real)
    );
    assert_eq!(
        type_of("Set{1, 2}->collect(i | i * 2)", &[]),
        Ok(Type::bag(Type::Integer))
    );
    assert_eq!(
        type_of("Circle.allInstances", &[]),
        Ok(Type::set(Type::class("Circle")))
    );
    assert_eq!(
        type_of(
            "s->union(d)",
            &[
                ("s", Type::set(Type::class("Disc"))),
                ("d", Type::set(Type::class("Circle")))
            ]
        ),
        Ok(Type::set(Type::class("Circle")))
    );
    let err = type_of(
        "if true then s else d endif",
        &[("s", Type::class("Square")), ("d", Type::class("Diamond"))],
    );
    assert!(err.unwrap_err().contains("oclAsType"));
    assert!(type_of("1 + true", &[]).is_err());
    assert!(type_of("Real.allInstances", &[]).is_err());
    assert!(type_of("1 and true", &[]).is_err());
}

#[test]
fn named_context_matches_self() {
    let m = load_class_model(
        "[[class]]\nname = \"Title\"\nattribute = [{ name = \"copies\", type = \"Integer\" }]\n",
    )
    .unwrap();
    let with_self = parse_constraint_file("context Title invariant: self.copies > 0").unwrap();
    let named = parse_constraint_file("context t : Title invariant: t.copies > 0").unwrap();
    let a = typecheck_file(&with_self, &m).unwrap();
    let b = typecheck_file(&named, &m).unwrap();
    assert_eq!(
        a.invariants[0].body.attributes_read(),
        b.invariants[0].body.attributes_read()
    );
    assert_eq!(b.invariants[0].self_name.as_deref(), Some("t"));
}
