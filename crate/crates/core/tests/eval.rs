use oclk_core::eval::{eval, strong_equal, Env, EvalCtx, EvalError, QueryTable, Value};
use oclk_core::model::{load_class_model, load_snapshot, ClassModel, Snapshot};
use oclk_core::syntax::parse_expression_text;
use oclk_core::types::{typecheck_expression, ExprScope, Type};

const SHOP: &str = r#"
[[class]]
name = "Shop"
attribute = [{ name = "name", type = "String" }]
operation = [
    { name = "stock", returns = "Integer", query = true, body = "items->collect(qty)->sum()" },
    { name = "holds", params = [{ name = "n", type = "Integer" }], returns = "Boolean", query = true, body = "items->exists(i | i.qty = n)" },
]

[[class]]
name = "Item"
attribute = [
    { name = "qty", type = "Integer" },
    { name = "price", type = "Real" },
    { name = "label", type = "String" },
]

[[association]]
name = "Stock"
a = { class = "Shop", role = "shop", multiplicity = "0..1" }
b = { class = "Item", role = "items", multiplicity = "0..*" }
"#;

const STATE: &str = r#"
[[object]]
id = "shop"
class = "Shop"
attrs = { name = "corner" }

[[object]]
id = "apple"
class = "Item"
attrs = { qty = 3, price = 0.5, label = "a" }

[[object]]
id = "pear"
class = "Item"
attrs = { qty = 3, label = "p" }

[[object]]
id = "loose"
class = "Item"
attrs = { qty = 9223372036854775807 }

[[link]]
assoc = "Stock"
from = "shop"
to = "apple"

[[link]]
assoc = "Stock"
from = "shop"
to = "pear"
"#;

struct Fixture {
    model: ClassModel,
    snap: Snapshot,
    queries: QueryTable,
}

impl Fixture {
    fn new() -> Fixture {
        let model = load_class_model(SHOP).unwrap();
        let snap = load_snapshot(STATE, &model).unwrap();
        let queries = QueryTable::build(&model).unwrap();
        Fixture {
            model,
            snap,
            queries,
        }
    }

    fn run(&self, self_id: &str, text: &str) -> Result<Value, EvalError> {
        let class = self
            .snap
            .object(&oclk_core::model::ObjectId::new(self_id))
            .unwrap()
            .class
            .clone();
        let scope = ExprScope {
            self_type: Some(Type::class(class)),
            vars: vec![],
            post: false,
        };
        let e = parse_expression_text(text).unwrap();
        let t =
            typecheck_expression(&e, &self.model, &scope).unwrap_or_else(|d| panic!("{text}: {d}"));
        let cx = EvalCtx::new(&self.model, &self.snap, &self.queries);
        eval(&t, &Env::new().with("self", Value::obj(self_id)), &cx)
    }

    fn show(&self, self_id: &str, text: &str) -> String {
        self.run(self_id, text).unwrap().to_string()
    }
}

#[test]
fn navigation_and_attributes() {
    let f = Fixture::new();
    assert_eq!(f.show("shop", "items->size"), "2");
    assert_eq!(f.show("apple", "shop.name"), "'corner'");
    assert_eq!(f.show("loose", "shop.name"), "undefined");
    assert_eq!(f.show("loose", "shop->isEmpty"), "true");
    assert_eq!(f.show("pear", "price"), "undefined");
    assert_eq!(f.show("pear", "price->size"), "0");
}

#[test]
fn arithmetic() {
    let f = Fixture::new();
    assert_eq!(f.show("shop", "7 / 2"), "3.5");
    assert_eq!(f.show("shop", "7.div(2)"), "3");
    assert_eq!(f.show("shop", "-7.mod(3)"), "-1");
    assert_eq!(f.show("shop", "1 / 0"), "undefined");
    assert_eq!(f.show("shop", "(1 / 0) = (2 / 0)"), "true");
    assert_eq!(f.show("shop", "(1 / 0) == (2 / 0)"), "undefined");
    assert!(matches!(
        f.run("loose", "qty + 1"),
        Err(EvalError::Overflow(_))
    ));
    assert_eq!(f.show("shop", "'ab'.concat('c')"), "'abc'");
}

#[test]
fn collections() {
    let f = Fixture::new();
    assert_eq!(f.show("shop", "items->collect(qty)"), "Bag{3, 3}");
    assert_eq!(f.show("shop", "items->collect(qty)->asSet()"), "Set{3}");
    assert_eq!(f.show("shop", "items->isUnique(qty)"), "false");
    assert_eq!(f.show("shop", "items->isUnique(label)"), "true");
    assert_eq!(f.show("shop", "items->isUnique(price)"), "undefined");
    assert_eq!(f.show("shop", "items->select(qty > 2)->size"), "2");
    assert_eq!(f.show("shop", "items->reject(qty > 2)->isEmpty"), "true");
    assert_eq!(
        f.show("shop", "Sequence{3, 1, 2}->including(1)"),
        "Sequence{3, 1, 2, 1}"
    );
    assert_eq!(
        f.show("shop", "Set{1, 2}->union(Set{2, 3})"),
        "Set{1, 2, 3}"
    );
    assert_eq!(
        f.show("shop", "Set{1, 2}->intersection(Set{2, 3})"),
        "Set{2}"
    );
    assert_eq!(f.show("shop", "Item.allInstances->size"), "3");
}

#[test]
fn queries_run_their_bodies() {
    let f = Fixture::new();
    assert_eq!(f.show("shop", "stock()"), "6");
    assert_eq!(f.show("shop", "holds(3)"), "true");
    assert_eq!(f.show("shop", "holds(4)"), "false");
}

#[test]
fn evaluation_is_repeatable() {
    let f = Fixture::new();
    for text in [
        "items->collect(price)",
        "Item.allInstances->select(qty > 0)",
        "items->isUnique(qty)",
    ] {
        let a = f.run("shop", text).unwrap();
        let b = f.run("shop", text).unwrap();
        assert!(strong_equal(&a, &b), "{text}");
    }
}
