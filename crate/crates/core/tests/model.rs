use std::collections::BTreeSet;

use oclk_core::contracts::check_constancy;
use oclk_core::model::{
    load_class_model, load_snapshot, objects_of_kind, validate_multiplicities, ClassModel, ObjectId,
};
use proptest::prelude::*;

const ZOO: &str = r#"
[[class]]
name = "Animal"
attribute = [
    { name = "name", type = "String", constant = true },
    { name = "weight", type = "Real" },
    { name = "legs", type = "Integer" },
    { name = "tame", type = "Boolean" },
    { name = "tags", type = "Set(String)" },
]

[[class]]
name = "Cat"
supertypes = ["Animal"]

[[class]]
name = "Lion"
supertypes = ["Cat"]

[[class]]
name = "Keeper"

[[association]]
name = "Care"
a = { class = "Keeper", role = "keeper", multiplicity = "1" }
b = { class = "Animal", role = "animals", multiplicity = "0..3" }
"#;

fn zoo() -> ClassModel {
    load_class_model(ZOO).unwrap()
}

#[derive(Debug, Clone)]
struct Animal {
    class: &'static str,
    name: String,
    weight: Option<f64>,
    legs: i64,
    tame: bool,
    tags: Vec<String>,
    keeper: Option<usize>,
}

fn animal() -> impl Strategy<Value = Animal> {
    (
        prop::sample::select(vec!["Animal", "Cat", "Lion"]),
        "[a-z]{1,5}",
        prop::option::of(prop_oneof![Just(0.5), Just(3.0), Just(120.25)]),
        -2i64..5,
        any::<bool>(),
        prop::collection::vec("[a-c]", 0..3),
        prop::option::of(0usize..2),
    )
        .prop_map(|(class, name, weight, legs, tame, tags, keeper)| Animal {
            class,
            name,
            weight,
            legs,
            tame,
            tags,
            keeper,
        })
}

fn document(animals: &[Animal]) -> String {
    let mut doc = String::new();
    for k in 0..2 {
        doc += &format!("[[object]]\nid = \"k{k}\"\nclass = \"Keeper\"\n\n");
    }
    for (i, a) in animals.iter().enumerate() {
        let tags: Vec<String> = a.tags.iter().map(|t| format!("\"{t}\"")).collect();
        let weight = a
            .weight
            .map(|w| format!("weight = {w:?}, "))
            .unwrap_or_default();
        doc += &format!(
            "[[object]]\nid = \"a{i}\"\nclass = \"{}\"\nattrs = {{ name = \"{}\", {weight}legs = {}, tame = {}, tags = [{}] }}\n\n",
            a.class,
            a.name,
            a.legs,
            a.tame,
            tags.join(", ")
        );
        if let Some(k) = a.keeper {
            doc += &format!("[[link]]\nassoc = \"Care\"\nfrom = \"k{k}\"\nto = \"a{i}\"\n\n");
        }
    }
    doc
}

proptest! {
    #[test]
    fn snapshots_survive_serialization(animals in prop::collection::vec(animal(), 0..6)) {
        let m = zoo();
        let s = load_snapshot(&document(&animals), &m).unwrap();
        let again = load_snapshot(&s.to_document(&m), &m).unwrap();
        prop_assert_eq!(&again, &s);
        prop_assert!(check_constancy(&m, &[], &s, &again).is_empty());
    }

    #[test]
    fn extents_grow_toward_supertypes(animals in prop::collection::vec(animal(), 0..6)) {
        let m = zoo();
        let s = load_snapshot(&document(&animals), &m).unwrap();
        let lions = objects_of_kind(&s, &m, "Lion").unwrap();
        let cats = objects_of_kind(&s, &m, "Cat").unwrap();
        let all = objects_of_kind(&s, &m, "Animal").unwrap();
        prop_assert!(lions.is_subset(&cats));
        prop_assert!(cats.is_subset(&all));
        prop_assert_eq!(all.len(), animals.len());
        let direct: BTreeSet<ObjectId> = animals
            .iter()
            .enumerate()
            .filter(|(_, a)| a.class == "Lion")
            .map(|(i, _)| ObjectId::new(format!("a{i}")))
            .collect();
        prop_assert_eq!(lions, direct);
    }

    #[test]
    fn multiplicity_warnings_match_link_counts(animals in prop::collection::vec(animal(), 0..8)) {
        let m = zoo();
        let s = load_snapshot(&document(&animals), &m).unwrap();
        let mut expected = animals.iter().filter(|a| a.keeper.is_none()).count();
        for k in 0..2 {
            if animals.iter().filter(|a| a.keeper == Some(k)).count() > 3 {
                expected += 1;
            }
        }
        prop_assert_eq!(validate_multiplicities(&s, &m).len(), expected);
    }

    #[test]
    fn renaming_is_caught_by_constancy(animals in prop::collection::vec(animal(), 1..5), pick in 0usize..5) {
        let m = zoo();
        let before = load_snapshot(&document(&animals), &m).unwrap();
        let mut changed = animals.clone();
        let i = pick % changed.len();
        changed[i].name.push('x');
        changed[i].weight = Some(99.0);
        let after = load_snapshot(&document(&changed), &m).unwrap();
        let diags = check_constancy(&m, &[], &before, &after);
        prop_assert_eq!(diags.len(), 1);
        let id = format!("a{}", i);
        prop_assert!(diags[0].message.contains(&id));
    }
}

#[test]
fn model_documents_round_trip() {
    let m = zoo();
    let again = load_class_model(&m.to_document()).unwrap();
    assert_eq!(again.to_document(), m.to_document());
}

#[test]
fn bad_documents_are_rejected() {
    let m = zoo();
    for (doc, needle) in [
        ("[[object]]\nid = \"x\"\nclass = \"Zebra\"\n", "Zebra"),
        ("[[object]]\nid = \"x\"\nclass = \"Animal\"\nattrs = { legs = \"four\" }\n", "legs"),
        ("[[object]]\nid = \"x\"\nclass = \"Keeper\"\n[[object]]\nid = \"x\"\nclass = \"Keeper\"\n", "x"),
        ("[[link]]\nassoc = \"Care\"\nfrom = \"k\"\nto = \"a\"\n", "k"),
    ] {
        let err = load_snapshot(doc, &m).unwrap_err();
        assert!(err.mentions(needle), "{doc}: {err}");
    }
    assert!(load_class_model("[[class]]\nname = \"A\"\nsupertypes = [\"A\"]\n").is_err());
}
