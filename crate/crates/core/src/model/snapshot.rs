//! Object snapshots: a finite population of objects, their attribute values,
//! links and current states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use super::doc::toml_error;
use super::{ClassModel, RoleRef};
use crate::diag::{Diagnostic, Diagnostics, Pos};
use crate::eval::Value;
use crate::types::Type;

/// Explicit, stable object identity taken from the snapshot document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        ObjectId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Object {
    /// Fully qualified class name.
    pub class: String,
    /// Unset attributes are absent and read as undefined.
    pub attrs: BTreeMap<String, Value>,
    /// Full path of the current state from the top of the state machine.
    pub state: Option<Vec<String>>,
}

/// A link of association `assoc` (index into the model) from an object at
/// end 0 to an object at end 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub assoc: usize,
    pub from: ObjectId,
    pub to: ObjectId,
}

/// An immutable object configuration checked against a class model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshot {
    objects: BTreeMap<ObjectId, Object>,
    links: BTreeSet<Link>,
    statics: BTreeMap<(String, String), Value>,
    nav: BTreeMap<RoleRef, BTreeMap<ObjectId, Vec<ObjectId>>>,
}

impl Snapshot {
    pub fn empty() -> Snapshot {
        Snapshot::default()
    }

    fn assemble(
        objects: BTreeMap<ObjectId, Object>,
        links: BTreeSet<Link>,
        statics: BTreeMap<(String, String), Value>,
    ) -> Snapshot {
        let mut nav: BTreeMap<RoleRef, BTreeMap<ObjectId, Vec<ObjectId>>> = BTreeMap::new();
        for l in &links {
            nav.entry(RoleRef {
                assoc: l.assoc,
                target_end: 1,
            })
            .or_default()
            .entry(l.from.clone())
            .or_default()
            .push(l.to.clone());
            nav.entry(RoleRef {
                assoc: l.assoc,
                target_end: 0,
            })
            .or_default()
            .entry(l.to.clone())
            .or_default()
            .push(l.from.clone());
        }
        Snapshot {
            objects,
            links,
            statics,
            nav,
        }
    }

    pub fn objects(&self) -> &BTreeMap<ObjectId, Object> {
        &self.objects
    }

    pub fn object(&self, id: &ObjectId) -> Option<&Object> {
        self.objects.get(id)
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        self.objects.contains_key(id)
    }

    pub fn links(&self) -> &BTreeSet<Link> {
        &self.links
    }

    /// Objects reached from `from` through `role`, in id order.
    pub fn navigate(&self, role: RoleRef, from: &ObjectId) -> &[ObjectId] {
        self.nav
            .get(&role)
            .and_then(|m| m.get(from))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn static_value(&self, class: &str, attr: &str) -> Option<&Value> {
        self.statics.get(&(class.to_string(), attr.to_string()))
    }

    pub fn attr(&self, id: &ObjectId, name: &str) -> Option<&Value> {
        self.objects.get(id).and_then(|o| o.attrs.get(name))
    }

    /// A copy with the given attribute values replaced. Undefined values
    /// clear the attribute.
    pub fn with_attrs(
        &self,
        updates: impl IntoIterator<Item = (ObjectId, String, Value)>,
    ) -> Snapshot {
        let mut next = self.clone();
        for (id, name, value) in updates {
            if let Some(o) = next.objects.get_mut(&id) {
                if value.is_undef() {
                    o.attrs.remove(&name);
                } else {
                    o.attrs.insert(name, value);
                }
            }
        }
        next
    }

    /// Converts a document value to a runtime value of type `ty`. Object
    /// references must name objects of this snapshot.
    pub fn value_from_toml(
        &self,
        raw: &toml::Value,
        ty: &Type,
        model: &ClassModel,
    ) -> Result<Value, String> {
        let classes = self
            .objects
            .iter()
            .map(|(id, o)| (id.clone(), o.class.clone()))
            .collect();
        coerce(raw, ty, &classes, model)
    }

    /// Serializes to the canonical snapshot document.
    pub fn to_document(&self, model: &ClassModel) -> String {
        let mut doc = SnapshotDoc::default();
        for (id, o) in &self.objects {
            doc.objects.push(ObjectDoc {
                id: Spanned::new(0..0, id.0.clone()),
                class: Spanned::new(0..0, o.class.clone()),
                state: o.state.as_ref().map(|s| Spanned::new(0..0, s.join("::"))),
                attrs: o
                    .attrs
                    .iter()
                    .filter_map(|(k, v)| {
                        value_to_toml(v).map(|t| (k.clone(), Spanned::new(0..0, t)))
                    })
                    .collect(),
            });
        }
        for l in &self.links {
            let a = &model.associations[l.assoc];
            doc.links.push(LinkDoc {
                assoc: Spanned::new(0..0, super::qualify(a.package.as_deref(), &a.name)),
                from: Spanned::new(0..0, l.from.0.clone()),
                to: Spanned::new(0..0, l.to.0.clone()),
            });
        }
        for ((class, attr), v) in &self.statics {
            if let Some(t) = value_to_toml(v) {
                doc.statics
                    .entry(class.clone())
                    .or_default()
                    .insert(attr.clone(), Spanned::new(0..0, t));
            }
        }
        toml::to_string(&doc).expect("snapshot documents always serialize")
    }
}

fn value_to_toml(v: &Value) -> Option<toml::Value> {
    Some(match v {
        Value::Bool(b) => toml::Value::Boolean(*b),
        Value::Int(i) => toml::Value::Integer(*i),
        Value::Real(r) => toml::Value::Float(*r),
        Value::Str(s) => toml::Value::String(s.clone()),
        Value::Obj(id) => toml::Value::String(id.0.clone()),
        Value::Coll(_, items) => {
            toml::Value::Array(items.iter().filter_map(value_to_toml).collect())
        }
        Value::Undef(_) => return None,
    })
}

fn is_empty_map<K, V>(m: &BTreeMap<K, V>) -> bool {
    m.is_empty()
}

/// The snapshot document schema (`[[object]]`, `[[link]]`, `[statics]`).
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotDoc {
    #[serde(default, rename = "object", skip_serializing_if = "Vec::is_empty")]
    objects: Vec<ObjectDoc>,
    #[serde(default, rename = "link", skip_serializing_if = "Vec::is_empty")]
    links: Vec<LinkDoc>,
    #[serde(default, skip_serializing_if = "is_empty_map")]
    statics: BTreeMap<String, BTreeMap<String, Spanned<toml::Value>>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    id: Spanned<String>,
    class: Spanned<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state: Option<Spanned<String>>,
    #[serde(default, skip_serializing_if = "is_empty_map")]
    attrs: BTreeMap<String, Spanned<toml::Value>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    assoc: Spanned<String>,
    from: Spanned<String>,
    to: Spanned<String>,
}

pub fn load_snapshot(text: &str, model: &ClassModel) -> Result<Snapshot, Diagnostics> {
    let doc: SnapshotDoc = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    SnapshotDoc::build(doc, text, model)
}

struct Ctx<'a> {
    text: &'a str,
    diags: Vec<Diagnostic>,
}

impl Ctx<'_> {
    fn err<T>(&mut self, s: &Spanned<T>, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(
            Pos::from_offset(self.text, s.span().start),
            msg,
        ));
    }
}

impl SnapshotDoc {
    /// Validates a parsed document. `text` is the source the spans refer to.
    pub fn build(self, text: &str, model: &ClassModel) -> Result<Snapshot, Diagnostics> {
        let mut cx = Ctx {
            text,
            diags: Vec::new(),
        };
        let mut classes: BTreeMap<ObjectId, String> = BTreeMap::new();
        for o in &self.objects {
            let id = ObjectId::new(o.id.get_ref().clone());
            match model.resolve_class(o.class.get_ref()) {
                Ok(c) => {
                    if classes.insert(id.clone(), c).is_some() {
                        cx.err(&o.id, format!("duplicate object id '{id}'"));
                    }
                }
                Err(m) => cx.err(&o.class, format!("object '{id}': {m}")),
            }
        }

        let mut objects = BTreeMap::new();
        for o in &self.objects {
            let id = ObjectId::new(o.id.get_ref().clone());
            let Some(class) = classes.get(&id).cloned() else {
                continue;
            };
            let mut attrs = BTreeMap::new();
            for (name, raw) in &o.attrs {
                let Some(decl) = model.attribute_of(&class, name) else {
                    cx.err(
                        raw,
                        format!("object '{id}': unknown attribute '{name}' of class '{class}'"),
                    );
                    continue;
                };
                if decl.is_static {
                    cx.err(raw, format!("object '{id}': attribute '{name}' is class-scoped; set it under [statics]"));
                    continue;
                }
                match coerce(raw.get_ref(), &decl.ty, &classes, model) {
                    Ok(v) => {
                        attrs.insert(name.clone(), v);
                    }
                    Err(m) => cx.err(raw, format!("object '{id}', attribute '{name}': {m}")),
                }
            }
            let state = match &o.state {
                None => None,
                Some(s) => match model.state_machine_of(&class) {
                    None => {
                        cx.err(
                            s,
                            format!("object '{id}': class '{class}' has no state machine"),
                        );
                        None
                    }
                    Some(sm) => {
                        let path: Vec<String> = s
                            .get_ref()
                            .split("::")
                            .map(|p| p.trim().to_string())
                            .collect();
                        match sm.resolve(&path) {
                            Ok(full) => Some(full),
                            Err(m) => {
                                cx.err(s, format!("object '{id}': unknown state: {m}"));
                                None
                            }
                        }
                    }
                },
            };
            objects.insert(
                id,
                Object {
                    class,
                    attrs,
                    state,
                },
            );
        }

        let mut links = BTreeSet::new();
        for l in &self.links {
            let Some((ai, assoc)) = model.association(l.assoc.get_ref()) else {
                cx.err(
                    &l.assoc,
                    format!("unknown association '{}'", l.assoc.get_ref()),
                );
                continue;
            };
            let mut ok = true;
            for (end, id) in [(&assoc.ends[0], &l.from), (&assoc.ends[1], &l.to)] {
                match classes.get(&ObjectId::new(id.get_ref().clone())) {
                    None => {
                        cx.err(
                            id,
                            format!(
                                "link of '{}' refers to nonexistent object '{}'",
                                assoc.name,
                                id.get_ref()
                            ),
                        );
                        ok = false;
                    }
                    Some(c) if !model.is_subclass(c, &end.class) => {
                        cx.err(
                            id,
                            format!(
                                "link of '{}': object '{}' of class '{c}' cannot play role '{}' of class '{}'",
                                assoc.name,
                                id.get_ref(),
                                end.role,
                                end.class
                            ),
                        );
                        ok = false;
                    }
                    Some(_) => {}
                }
            }
            if ok {
                links.insert(Link {
                    assoc: ai,
                    from: ObjectId::new(l.from.get_ref().clone()),
                    to: ObjectId::new(l.to.get_ref().clone()),
                });
            }
        }

        let mut statics = BTreeMap::new();
        for (class_name, values) in &self.statics {
            let class = match model.resolve_class(class_name) {
                Ok(c) => c,
                Err(m) => {
                    if let Some((_, v)) = values.iter().next() {
                        cx.err(v, format!("statics: {m}"));
                    }
                    continue;
                }
            };
            for (name, raw) in values {
                match model.attribute_of(&class, name) {
                    Some(decl) if decl.is_static => {
                        match coerce(raw.get_ref(), &decl.ty, &classes, model) {
                            Ok(v) => {
                                statics.insert((class.clone(), name.clone()), v);
                            }
                            Err(m) => cx.err(raw, format!("static '{class}.{name}': {m}")),
                        }
                    }
                    Some(_) => cx.err(
                        raw,
                        format!("attribute '{class}.{name}' is not class-scoped"),
                    ),
                    None => cx.err(
                        raw,
                        format!("unknown attribute '{name}' of class '{class}'"),
                    ),
                }
            }
        }

        if cx.diags.is_empty() {
            Ok(Snapshot::assemble(objects, links, statics))
        } else {
            cx.diags.sort_by_key(|d| d.pos);
            Err(Diagnostics(cx.diags))
        }
    }
}

fn coerce(
    raw: &toml::Value,
    ty: &Type,
    classes: &BTreeMap<ObjectId, String>,
    model: &ClassModel,
) -> Result<Value, String> {
    let mismatch = || format!("expected a value of type {ty}, found {}", raw.type_str());
    Ok(match (ty, raw) {
        (Type::Boolean, toml::Value::Boolean(b)) => Value::Bool(*b),
        (Type::Integer, toml::Value::Integer(i)) => Value::Int(*i),
        (Type::Real, toml::Value::Integer(i)) => Value::Real(*i as f64),
        (Type::Real, toml::Value::Float(r)) => Value::Real(*r),
        (Type::String, toml::Value::String(s)) => Value::Str(s.clone()),
        (Type::OclAny, toml::Value::Boolean(b)) => Value::Bool(*b),
        (Type::OclAny, toml::Value::Integer(i)) => Value::Int(*i),
        (Type::OclAny, toml::Value::Float(r)) => Value::Real(*r),
        (Type::OclAny, toml::Value::String(s)) => Value::Str(s.clone()),
        (Type::Class(c), toml::Value::String(id)) => {
            let oid = ObjectId::new(id.clone());
            match classes.get(&oid) {
                None => return Err(format!("reference to nonexistent object '{id}'")),
                Some(actual) if !model.is_subclass(actual, c) => {
                    return Err(format!(
                        "object '{id}' of class '{actual}' does not conform to {c}"
                    ))
                }
                Some(_) => Value::Obj(oid),
            }
        }
        (Type::Collection(kind, elem), toml::Value::Array(items)) => {
            let vals = items
                .iter()
                .map(|i| coerce(i, elem, classes, model))
                .collect::<Result<Vec<_>, _>>()?;
            Value::coll(*kind, vals)
        }
        (Type::OclState, _) => return Err("OclState values cannot be stored".into()),
        _ => return Err(mismatch()),
    })
}

/// One diagnostic per (object, association end) whose link count falls
/// outside the end's multiplicity.
pub fn validate_multiplicities(snap: &Snapshot, model: &ClassModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (id, o) in &snap.objects {
        for (ai, assoc) in model.associations.iter().enumerate() {
            for t in 0..2 {
                if !model.is_subclass(&o.class, &assoc.ends[1 - t].class) {
                    continue;
                }
                let end = &assoc.ends[t];
                let count = snap
                    .navigate(
                        RoleRef {
                            assoc: ai,
                            target_end: t,
                        },
                        id,
                    )
                    .len();
                if !end.multiplicity.admits(count) {
                    out.push(Diagnostic::warning(
                        Pos::default(),
                        format!(
                            "object '{id}' has {count} link(s) on role '{}' of association '{}', outside multiplicity {}",
                            end.role, assoc.name, end.multiplicity
                        ),
                    ));
                }
            }
        }
    }
    out
}

/// The extent of `class` in the snapshot: its instances and those of its
/// subclasses.
pub fn objects_of_kind(
    snap: &Snapshot,
    model: &ClassModel,
    class: &str,
) -> Result<BTreeSet<ObjectId>, String> {
    let q = model.resolve_class(class)?;
    Ok(snap
        .objects
        .iter()
        .filter(|(_, o)| model.is_subclass(&o.class, &q))
        .map(|(id, _)| id.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_class_model;

    const FAMILY: &str = r#"
[[class]]
name = "Person"
[[class.attribute]]
name = "age"
type = "Integer"
[[class.attribute]]
name = "height"
type = "Real"
[class.state_machine]
name = "Life"
states = [{ name = "Alive", substates = [{ name = "Young" }, { name = "Old" }] }, { name = "Dead" }]

[[class]]
name = "Child"
supertypes = ["Person"]

[[association]]
name = "Parenthood"
a = { class = "Person", role = "children", multiplicity = "0..*" }
b = { class = "Person", role = "parents", multiplicity = "0..2" }
"#;

    fn model() -> ClassModel {
        load_class_model(FAMILY).unwrap()
    }

    #[test]
    fn family_snapshot_loads() {
        let m = model();
        let text = r#"
[[object]]
id = "pete"
class = "Person"
state = "Young"
attrs = { age = 10, height = 1 }
[[object]]
id = "mary"
class = "Person"
[[object]]
id = "joe"
class = "Person"
[[link]]
assoc = "Parenthood"
from = "pete"
to = "mary"
[[link]]
assoc = "Parenthood"
from = "mary"
to = "joe"
"#;
        let s = load_snapshot(text, &m).unwrap();
        assert_eq!(s.objects().len(), 3);
        assert_eq!(s.links().len(), 2);
        let pete = ObjectId::new("pete");
        assert_eq!(s.attr(&pete, "height"), Some(&Value::Real(1.0)));
        assert_eq!(
            s.object(&pete).unwrap().state,
            Some(vec!["Alive".into(), "Young".into()])
        );
        let parents = RoleRef {
            assoc: 0,
            target_end: 1,
        };
        assert_eq!(s.navigate(parents, &pete), &[ObjectId::new("mary")]);
        let again = load_snapshot(&s.to_document(&m), &m).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn empty_snapshot() {
        let s = load_snapshot("", &model()).unwrap();
        assert!(s.objects().is_empty());
    }

    #[test]
    fn load_errors() {
        let m = model();
        let bad_state = "[[object]]\nid = \"x\"\nclass = \"Person\"\nstate = \"Bogus\"\n";
        assert!(load_snapshot(bad_state, &m)
            .unwrap_err()
            .mentions("unknown state"));
        let bad_class = "[[object]]\nid = \"x\"\nclass = \"Ghost\"\n";
        assert!(load_snapshot(bad_class, &m)
            .unwrap_err()
            .mentions("unknown class"));
        let bad_attr = "[[object]]\nid = \"x\"\nclass = \"Person\"\nattrs = { wings = 2 }\n";
        assert!(load_snapshot(bad_attr, &m)
            .unwrap_err()
            .mentions("unknown attribute"));
        let bad_type = "[[object]]\nid = \"x\"\nclass = \"Person\"\nattrs = { age = \"old\" }\n";
        assert!(load_snapshot(bad_type, &m)
            .unwrap_err()
            .mentions("expected a value of type Integer"));
        let bad_link = "[[object]]\nid = \"x\"\nclass = \"Person\"\n[[link]]\nassoc = \"Parenthood\"\nfrom = \"x\"\nto = \"y\"\n";
        let err = load_snapshot(bad_link, &m).unwrap_err();
        assert!(err.mentions("nonexistent object 'y'"));
        assert_eq!(err.0[0].pos.line, 7);
    }

    #[test]
    fn multiplicity_violations() {
        let m = model();
        let mut text = String::new();
        for id in ["c", "p1", "p2", "p3"] {
            text.push_str(&format!("[[object]]\nid = \"{id}\"\nclass = \"Person\"\n"));
        }
        for p in ["p1", "p2", "p3"] {
            text.push_str(&format!(
                "[[link]]\nassoc = \"Parenthood\"\nfrom = \"c\"\nto = \"{p}\"\n"
            ));
        }
        let s = load_snapshot(&text, &m).unwrap();
        let d = validate_multiplicities(&s, &m);
        assert_eq!(d.len(), 1, "{d:?}");
        assert!(d[0]
            .message
            .contains("object 'c' has 3 link(s) on role 'parents'"));
    }

    #[test]
    fn extents_include_subclasses() {
        let m = model();
        let text = "[[object]]\nid = \"k\"\nclass = \"Child\"\n[[object]]\nid = \"p\"\nclass = \"Person\"\n";
        let s = load_snapshot(text, &m).unwrap();
        let persons = objects_of_kind(&s, &m, "Person").unwrap();
        assert_eq!(persons.len(), 2);
        let children = objects_of_kind(&s, &m, "Child").unwrap();
        assert_eq!(
            children.into_iter().collect::<Vec<_>>(),
            vec![ObjectId::new("k")]
        );
        assert!(objects_of_kind(&s, &m, "Ghost").is_err());
        assert!(objects_of_kind(&Snapshot::empty(), &m, "Person")
            .unwrap()
            .is_empty());
    }
}
