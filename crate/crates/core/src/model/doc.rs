//! The model document: a TOML tree of packages, classes, associations and
//! state machines. `docs/model-format.md` describes the schema.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use toml::Spanned;

use super::{
    qualify, AssocDecl, AssocEnd, AttributeDecl, ClassDecl, ClassModel, Modifier, Multiplicity,
    OperationDecl, StateMachine, StateNode,
};
use crate::diag::{Diagnostic, Diagnostics, Pos};
use crate::syntax::{parse_type_text, TypeExpr};
use crate::types::{CollectionKind, Type};

type Name = Spanned<String>;

fn name(s: &str) -> Name {
    Spanned::new(0..0, s.to_string())
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    #[serde(default, rename = "package", skip_serializing_if = "Vec::is_empty")]
    packages: Vec<PackageDoc>,
    #[serde(default, rename = "class", skip_serializing_if = "Vec::is_empty")]
    classes: Vec<ClassDoc>,
    #[serde(default, rename = "association", skip_serializing_if = "Vec::is_empty")]
    associations: Vec<AssocDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct PackageDoc {
    name: Name,
    #[serde(default, rename = "class", skip_serializing_if = "Vec::is_empty")]
    classes: Vec<ClassDoc>,
    #[serde(default, rename = "association", skip_serializing_if = "Vec::is_empty")]
    associations: Vec<AssocDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ClassDoc {
    name: Name,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    supertypes: Vec<Name>,
    #[serde(default, rename = "attribute", skip_serializing_if = "Vec::is_empty")]
    attributes: Vec<AttributeDoc>,
    #[serde(default, rename = "operation", skip_serializing_if = "Vec::is_empty")]
    operations: Vec<OperationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state_machine: Option<StateMachineDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct AttributeDoc {
    name: Name,
    #[serde(rename = "type")]
    ty: Name,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    modifier: Option<Name>,
    #[serde(default, skip_serializing_if = "is_false")]
    constant: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    derived: bool,
    #[serde(default, rename = "static", skip_serializing_if = "is_false")]
    is_static: bool,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ParamDoc {
    name: Name,
    #[serde(rename = "type")]
    ty: Name,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct OperationDoc {
    name: Name,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<ParamDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    returns: Option<Name>,
    #[serde(default, skip_serializing_if = "is_false")]
    query: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct StateMachineDoc {
    name: Name,
    #[serde(default)]
    states: Vec<StateDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    name: Name,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    substates: Vec<StateDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct AssocDoc {
    name: Name,
    a: EndDoc,
    b: EndDoc,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct EndDoc {
    class: Name,
    role: Name,
    multiplicity: Name,
    #[serde(default, skip_serializing_if = "is_false")]
    constant: bool,
}

/// Parses and validates a model document. Either every check passes and a
/// model is returned, or all problems found are reported.
pub fn load_class_model(text: &str) -> Result<ClassModel, Diagnostics> {
    let doc: ModelDoc = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    Loader {
        text,
        diags: Vec::new(),
    }
    .load(doc)
}

pub(crate) fn toml_error(text: &str, e: &toml::de::Error) -> Diagnostics {
    let pos = e
        .span()
        .map(|s| Pos::from_offset(text, s.start))
        .unwrap_or(Pos::new(1, 1));
    Diagnostics::single(Diagnostic::error(pos, e.message().trim().to_string()))
}

struct Loader<'t> {
    text: &'t str,
    diags: Vec<Diagnostic>,
}

/// Class names known while loading, before the model is assembled.
struct NameTable {
    qualified: BTreeSet<String>,
    simple: BTreeMap<String, Vec<String>>,
}

impl NameTable {
    fn resolve(&self, name: &str) -> Result<String, String> {
        if self.qualified.contains(name) {
            return Ok(name.to_string());
        }
        if name.contains("::") {
            return Err(format!("unknown class '{name}'"));
        }
        match self.simple.get(name).map(Vec::as_slice) {
            Some([one]) => Ok(one.clone()),
            Some(many) if many.len() > 1 => Err(format!(
                "class name '{name}' is ambiguous ({})",
                many.join(", ")
            )),
            _ => Err(format!("unknown class '{name}'")),
        }
    }
}

pub(crate) fn resolve_type_expr(
    ty: &TypeExpr,
    resolve_class: &dyn Fn(&str) -> Result<String, String>,
) -> Result<Type, String> {
    match ty {
        TypeExpr::Named(path, _) => {
            let joined = path.join("::");
            if path.len() == 1 {
                if let Some(t) = Type::basic_from_name(&path[0]) {
                    return Ok(t);
                }
            }
            resolve_class(&joined).map(Type::Class)
        }
        TypeExpr::Collection(kind, elem, _) => Ok(Type::Collection(
            *kind,
            Box::new(resolve_type_expr(elem, resolve_class)?),
        )),
    }
}

impl Loader<'_> {
    fn pos(&self, n: &Name) -> Pos {
        Pos::from_offset(self.text, n.span().start)
    }

    fn err(&mut self, n: &Name, msg: impl Into<String>) {
        let pos = self.pos(n);
        self.diags.push(Diagnostic::error(pos, msg));
    }

    fn parse_type(&mut self, n: &Name, names: &NameTable) -> Option<Type> {
        let parsed = match parse_type_text(n.get_ref()) {
            Ok(t) => t,
            Err(e) => {
                self.err(
                    n,
                    format!("malformed type '{}': {}", n.get_ref(), e.message),
                );
                return None;
            }
        };
        match resolve_type_expr(&parsed, &|c| names.resolve(c)) {
            Ok(t) => Some(t),
            Err(m) => {
                self.err(n, format!("dangling type reference: {m}"));
                None
            }
        }
    }

    fn load(mut self, doc: ModelDoc) -> Result<ClassModel, Diagnostics> {
        let mut packages = Vec::new();
        let mut class_docs: Vec<(Option<String>, ClassDoc)> = Vec::new();
        let mut assoc_docs: Vec<(Option<String>, AssocDoc)> = Vec::new();
        for c in doc.classes {
            class_docs.push((None, c));
        }
        for a in doc.associations {
            assoc_docs.push((None, a));
        }
        for p in doc.packages {
            let pname = p.name.get_ref().clone();
            if pname.is_empty() || pname.contains("::") {
                self.err(&p.name, format!("invalid package name '{pname}'"));
            }
            if packages.contains(&pname) {
                self.err(&p.name, format!("duplicate package '{pname}'"));
            } else {
                packages.push(pname.clone());
            }
            for c in p.classes {
                class_docs.push((Some(pname.clone()), c));
            }
            for a in p.associations {
                assoc_docs.push((Some(pname.clone()), a));
            }
        }

        let mut names = NameTable {
            qualified: BTreeSet::new(),
            simple: BTreeMap::new(),
        };
        for (pkg, c) in &class_docs {
            let q = qualify(pkg.as_deref(), c.name.get_ref());
            if Type::basic_from_name(c.name.get_ref()).is_some()
                || CollectionKind::from_name(c.name.get_ref()).is_some()
            {
                self.err(
                    &c.name,
                    format!("class name '{}' is reserved", c.name.get_ref()),
                );
            }
            if !names.qualified.insert(q.clone()) {
                self.err(&c.name, format!("duplicate class '{q}'"));
                continue;
            }
            names
                .simple
                .entry(c.name.get_ref().clone())
                .or_default()
                .push(q);
        }

        let mut classes = Vec::new();
        for (pkg, c) in &class_docs {
            classes.push(self.load_class(pkg.clone(), c, &names));
        }
        self.check_inheritance_cycles(&classes, &class_docs);

        let mut associations = Vec::new();
        let mut assoc_names = BTreeSet::new();
        for (pkg, a) in &assoc_docs {
            let q = qualify(pkg.as_deref(), a.name.get_ref());
            if !assoc_names.insert(q.clone()) {
                self.err(&a.name, format!("duplicate association '{q}'"));
            }
            let ends = [self.load_end(&a.a, &names), self.load_end(&a.b, &names)];
            if let [Some(e0), Some(e1)] = ends {
                associations.push(AssocDecl {
                    name: a.name.get_ref().clone(),
                    package: pkg.clone(),
                    ends: [e0, e1],
                });
            }
        }
        self.check_role_names(&classes, &assoc_docs, &names);

        if self.diags.is_empty() {
            Ok(ClassModel::assemble(packages, classes, associations))
        } else {
            self.diags.sort_by_key(|d| d.pos);
            Err(Diagnostics(self.diags))
        }
    }

    fn load_class(
        &mut self,
        package: Option<String>,
        c: &ClassDoc,
        names: &NameTable,
    ) -> ClassDecl {
        let mut supertypes = Vec::new();
        for s in &c.supertypes {
            match names.resolve(s.get_ref()) {
                Ok(q) => supertypes.push(q),
                Err(m) => self.err(s, format!("dangling supertype: {m}")),
            }
        }
        let mut attributes = Vec::new();
        for a in &c.attributes {
            if attributes
                .iter()
                .any(|x: &AttributeDecl| &x.name == a.name.get_ref())
            {
                self.err(
                    &a.name,
                    format!("duplicate attribute '{}'", a.name.get_ref()),
                );
                continue;
            }
            let modifier = match &a.modifier {
                Some(m) => match Modifier::parse(m.get_ref()) {
                    Ok(m) => m,
                    Err(msg) => {
                        self.err(m, msg);
                        Modifier::default()
                    }
                },
                None => Modifier::default(),
            };
            if let Some(ty) = self.parse_type(&a.ty, names) {
                attributes.push(AttributeDecl {
                    name: a.name.get_ref().clone(),
                    ty,
                    modifier,
                    constant: a.constant,
                    derived: a.derived,
                    is_static: a.is_static,
                });
            }
        }
        let mut operations = Vec::new();
        for o in &c.operations {
            if operations
                .iter()
                .any(|x: &OperationDecl| &x.name == o.name.get_ref())
            {
                self.err(
                    &o.name,
                    format!("duplicate operation '{}'", o.name.get_ref()),
                );
                continue;
            }
            let mut params = Vec::new();
            for p in &o.params {
                if params
                    .iter()
                    .any(|(n, _): &(String, Type)| n == p.name.get_ref())
                {
                    self.err(
                        &p.name,
                        format!("duplicate parameter '{}'", p.name.get_ref()),
                    );
                }
                if let Some(t) = self.parse_type(&p.ty, names) {
                    params.push((p.name.get_ref().clone(), t));
                }
            }
            let returns = o.returns.as_ref().and_then(|r| self.parse_type(r, names));
            if o.body.is_some() && !o.query {
                self.err(
                    &o.name,
                    format!(
                        "operation '{}' has a body but is not a query",
                        o.name.get_ref()
                    ),
                );
            }
            if o.query && o.returns.is_none() {
                self.err(
                    &o.name,
                    format!("query '{}' must declare a return type", o.name.get_ref()),
                );
            }
            operations.push(OperationDecl {
                name: o.name.get_ref().clone(),
                params,
                returns,
                query: o.query,
                body: o.body.clone(),
            });
        }
        for a in &attributes {
            if operations.iter().any(|o| o.name == a.name) {
                let at = c
                    .attributes
                    .iter()
                    .find(|d| d.name.get_ref() == &a.name)
                    .unwrap();
                self.err(
                    &at.name,
                    format!("'{}' is both an attribute and an operation", a.name),
                );
            }
        }
        let state_machine = c.state_machine.as_ref().map(|sm| StateMachine {
            name: sm.name.get_ref().clone(),
            states: self.load_states(&sm.states),
        });
        ClassDecl {
            name: c.name.get_ref().clone(),
            package,
            supertypes,
            attributes,
            operations,
            state_machine,
        }
    }

    fn load_states(&mut self, docs: &[StateDoc]) -> Vec<StateNode> {
        let mut out: Vec<StateNode> = Vec::new();
        for s in docs {
            if out.iter().any(|n| &n.name == s.name.get_ref()) {
                self.err(
                    &s.name,
                    format!("duplicate sibling state '{}'", s.name.get_ref()),
                );
                continue;
            }
            out.push(StateNode {
                name: s.name.get_ref().clone(),
                substates: self.load_states(&s.substates),
            });
        }
        out
    }

    fn load_end(&mut self, e: &EndDoc, names: &NameTable) -> Option<AssocEnd> {
        let class = match names.resolve(e.class.get_ref()) {
            Ok(c) => Some(c),
            Err(m) => {
                self.err(&e.class, format!("association end references {m}"));
                None
            }
        };
        let multiplicity = match Multiplicity::parse(e.multiplicity.get_ref()) {
            Ok(m) => Some(m),
            Err(m) => {
                self.err(&e.multiplicity, m);
                None
            }
        };
        Some(AssocEnd {
            class: class?,
            role: e.role.get_ref().clone(),
            multiplicity: multiplicity?,
            constant: e.constant,
        })
    }

    fn check_inheritance_cycles(
        &mut self,
        classes: &[ClassDecl],
        docs: &[(Option<String>, ClassDoc)],
    ) {
        let index: BTreeMap<String, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.qualified_name(), i))
            .collect();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; classes.len()];
        let mut reported = BTreeSet::new();
        fn dfs(
            i: usize,
            classes: &[ClassDecl],
            index: &BTreeMap<String, usize>,
            state: &mut [u8],
            stack: &mut Vec<usize>,
            cycles: &mut Vec<Vec<usize>>,
        ) {
            state[i] = 1;
            stack.push(i);
            for s in &classes[i].supertypes {
                let Some(&j) = index.get(s) else { continue };
                match state[j] {
                    0 => dfs(j, classes, index, state, stack, cycles),
                    1 => {
                        let start = stack.iter().position(|&k| k == j).unwrap();
                        cycles.push(stack[start..].to_vec());
                    }
                    _ => {}
                }
            }
            stack.pop();
            state[i] = 2;
        }
        let mut cycles = Vec::new();
        for i in 0..classes.len() {
            if state[i] == 0 {
                dfs(i, classes, &index, &mut state, &mut Vec::new(), &mut cycles);
            }
        }
        for cycle in cycles {
            let mut key = cycle.clone();
            key.sort();
            if !reported.insert(key) {
                continue;
            }
            let mut path: Vec<String> =
                cycle.iter().map(|&k| classes[k].qualified_name()).collect();
            path.push(path[0].clone());
            let first = cycle[0];
            let n = docs[first].1.name.clone();
            self.err(&n, format!("cyclic inheritance: {}", path.join(" -> ")));
        }
    }

    fn check_role_names(
        &mut self,
        classes: &[ClassDecl],
        assoc_docs: &[(Option<String>, AssocDoc)],
        names: &NameTable,
    ) {
        for c in classes {
            let q = c.qualified_name();
            let mut seen: BTreeSet<String> = c.attributes.iter().map(|a| a.name.clone()).collect();
            for (_, a) in assoc_docs {
                let ends = [&a.a, &a.b];
                for t in 0..2 {
                    let from = ends[1 - t];
                    let to = ends[t];
                    if names.resolve(from.class.get_ref()).ok().as_deref() != Some(q.as_str()) {
                        continue;
                    }
                    if !seen.insert(to.role.get_ref().clone()) {
                        self.err(
                            &to.role,
                            format!(
                                "role name '{}' is not unique among the features of class '{q}'",
                                to.role.get_ref()
                            ),
                        );
                    }
                }
            }
        }
    }
}

fn type_name(t: &Type) -> Name {
    name(&t.to_string())
}

fn state_docs(nodes: &[StateNode]) -> Vec<StateDoc> {
    nodes
        .iter()
        .map(|n| StateDoc {
            name: name(&n.name),
            substates: state_docs(&n.substates),
        })
        .collect()
}

fn class_doc(c: &ClassDecl) -> ClassDoc {
    ClassDoc {
        name: name(&c.name),
        supertypes: c.supertypes.iter().map(|s| name(s)).collect(),
        attributes: c
            .attributes
            .iter()
            .map(|a| AttributeDoc {
                name: name(&a.name),
                ty: type_name(&a.ty),
                modifier: (a.modifier != Modifier::default())
                    .then(|| name(&a.modifier.to_string())),
                constant: a.constant,
                derived: a.derived,
                is_static: a.is_static,
            })
            .collect(),
        operations: c
            .operations
            .iter()
            .map(|o| OperationDoc {
                name: name(&o.name),
                params: o
                    .params
                    .iter()
                    .map(|(n, t)| ParamDoc {
                        name: name(n),
                        ty: type_name(t),
                    })
                    .collect(),
                returns: o.returns.as_ref().map(type_name),
                query: o.query,
                body: o.body.clone(),
            })
            .collect(),
        state_machine: c.state_machine.as_ref().map(|sm| StateMachineDoc {
            name: name(&sm.name),
            states: state_docs(&sm.states),
        }),
    }
}

fn assoc_doc(a: &AssocDecl) -> AssocDoc {
    let end = |e: &AssocEnd| EndDoc {
        class: name(&e.class),
        role: name(&e.role),
        multiplicity: name(&e.multiplicity.to_string()),
        constant: e.constant,
    };
    AssocDoc {
        name: name(&a.name),
        a: end(&a.ends[0]),
        b: end(&a.ends[1]),
    }
}

pub(super) fn serialize_model(model: &ClassModel) -> String {
    let mut doc = ModelDoc::default();
    for p in &model.packages {
        doc.packages.push(PackageDoc {
            name: name(p),
            classes: model
                .classes
                .iter()
                .filter(|c| c.package.as_deref() == Some(p))
                .map(class_doc)
                .collect(),
            associations: model
                .associations
                .iter()
                .filter(|a| a.package.as_deref() == Some(p))
                .map(assoc_doc)
                .collect(),
        });
    }
    doc.classes = model
        .classes
        .iter()
        .filter(|c| c.package.is_none())
        .map(class_doc)
        .collect();
    doc.associations = model
        .associations
        .iter()
        .filter(|a| a.package.is_none())
        .map(assoc_doc)
        .collect();
    toml::to_string(&doc).expect("model documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_model() {
        let m = load_class_model("[[class]]\nname = \"Title\"\n").unwrap();
        assert_eq!(m.classes.len(), 1);
        assert!(m.class("Title").is_some());
    }

    #[test]
    fn cyclic_inheritance_is_reported() {
        let text = r#"
[[class]]
name = "A"
supertypes = ["B"]
[[class]]
name = "B"
supertypes = ["A"]
"#;
        let err = load_class_model(text).unwrap_err();
        assert!(err.mentions("cyclic inheritance"), "{err}");
        assert_eq!(err.0[0].pos.line, 3);
    }

    #[test]
    fn duplicate_and_dangling_names() {
        let text = r#"
[[class]]
name = "A"
[[class.attribute]]
name = "x"
type = "Integer"
[[class.attribute]]
name = "x"
type = "Nope"
[[class]]
name = "A"
"#;
        let err = load_class_model(text).unwrap_err();
        assert!(err.mentions("duplicate class 'A'"));
        assert!(err.mentions("duplicate attribute 'x'"));
    }

    #[test]
    fn dangling_type_reference() {
        let text = r#"
[[class]]
name = "A"
[[class.attribute]]
name = "x"
type = "Set(Nope)"
"#;
        let err = load_class_model(text).unwrap_err();
        assert!(err.mentions("dangling type reference"), "{err}");
    }

    #[test]
    fn modifier_violation() {
        let text = r#"
[[class]]
name = "A"
[[class.attribute]]
name = "x"
type = "Integer"
modifier = "private read public write"
"#;
        let err = load_class_model(text).unwrap_err();
        assert!(err.mentions("at least as restrictive"), "{err}");
    }

    #[test]
    fn association_end_must_name_a_class() {
        let text = r#"
[[class]]
name = "A"
[[association]]
name = "R"
a = { class = "A", role = "as", multiplicity = "0..*" }
b = { class = "Ghost", role = "gs", multiplicity = "0..*" }
"#;
        let err = load_class_model(text).unwrap_err();
        assert!(err.mentions("unknown class 'Ghost'"), "{err}");
    }

    #[test]
    fn role_names_unique_per_class() {
        let text = r#"
[[class]]
name = "A"
[[class.attribute]]
name = "bs"
type = "Integer"
[[class]]
name = "B"
[[association]]
name = "R"
a = { class = "A", role = "as", multiplicity = "0..*" }
b = { class = "B", role = "bs", multiplicity = "0..*" }
"#;
        let err = load_class_model(text).unwrap_err();
        assert!(err.mentions("role name 'bs' is not unique"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = load_class_model("[[class]\nname = 1").unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].pos.line, 1);
    }

    #[test]
    fn packages_qualify_names() {
        let text = r#"
[[package]]
name = "Hotel"
[[package.class]]
name = "Room"
[[package]]
name = "Library"
[[package.class]]
name = "Room"
[[package.class]]
name = "Desk"
[[package.class.attribute]]
name = "room"
type = "Library::Room"
"#;
        let m = load_class_model(text).unwrap();
        assert!(m.class("Hotel::Room").is_some());
        assert!(m.resolve_class("Room").unwrap_err().contains("ambiguous"));
        assert_eq!(m.resolve_class("Desk").unwrap(), "Library::Desk");
        let again = load_class_model(&m.to_document()).unwrap();
        assert_eq!(again, m);
    }
}
