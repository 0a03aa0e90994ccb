//! Class models, object snapshots and their structural checks.

mod doc;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::types::Type;

pub use doc::load_class_model;
pub use snapshot::{
    load_snapshot, objects_of_kind, validate_multiplicities, Link, Object, ObjectId, Snapshot,
    SnapshotDoc,
};

/// Visibility level. Ordered from least to most restrictive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Access {
    Public,
    Protected,
    Private,
}

impl Access {
    pub fn name(self) -> &'static str {
        match self {
            Access::Public => "public",
            Access::Protected => "protected",
            Access::Private => "private",
        }
    }

    fn from_name(s: &str) -> Option<Access> {
        Some(match s {
            "public" => Access::Public,
            "protected" => Access::Protected,
            "private" => Access::Private,
            _ => return None,
        })
    }
}

/// Read and write access of an attribute.
///
/// Accepted spellings: `public`, `protected`, `private` (same access for
/// both), `<access> read` (write is private) and
/// `<access> read <access> write`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Modifier {
    pub read: Access,
    pub write: Access,
}

impl Default for Modifier {
    fn default() -> Self {
        Modifier {
            read: Access::Public,
            write: Access::Public,
        }
    }
}

impl Modifier {
    pub fn parse(text: &str) -> Result<Modifier, String> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let access = |w: &str| {
            Access::from_name(w).ok_or_else(|| match w {
                "pubread" | "protread" | "protwrite" => {
                    format!("shortcut modifier '{w}' is not supported; use the long form")
                }
                _ => format!("unknown access modifier '{w}'"),
            })
        };
        let m = match words.as_slice() {
            [a] => {
                let a = access(a)?;
                Modifier { read: a, write: a }
            }
            [r, "read"] => Modifier {
                read: access(r)?,
                write: Access::Private,
            },
            [r, "read", w, "write"] => Modifier {
                read: access(r)?,
                write: access(w)?,
            },
            _ => return Err(format!("malformed modifier '{text}'")),
        };
        if m.write < m.read {
            return Err(format!(
                "modifier '{text}': write access ({}) must be at least as restrictive as read access ({})",
                m.write.name(),
                m.read.name()
            ));
        }
        Ok(m)
    }
}

impl fmt::Display for Modifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.read == self.write {
            f.write_str(self.read.name())
        } else if self.write == Access::Private {
            write!(f, "{} read", self.read.name())
        } else {
            write!(f, "{} read {} write", self.read.name(), self.write.name())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDecl {
    pub name: String,
    pub ty: Type,
    pub modifier: Modifier,
    pub constant: bool,
    /// Defined by a (possibly recursive) derivation equation.
    pub derived: bool,
    /// Class-scoped: one value per class, read as `ClassName.attr`.
    pub is_static: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationDecl {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub returns: Option<Type>,
    pub query: bool,
    /// OCL body of a query, evaluated on call.
    pub body: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateNode {
    pub name: String,
    pub substates: Vec<StateNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMachine {
    pub name: String,
    pub states: Vec<StateNode>,
}

impl StateMachine {
    /// Every state path from the top of the machine, e.g. `["Active", "Valid"]`.
    pub fn all_paths(&self) -> Vec<Vec<String>> {
        fn walk(nodes: &[StateNode], prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
            for n in nodes {
                prefix.push(n.name.clone());
                out.push(prefix.clone());
                walk(&n.substates, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(&self.states, &mut Vec::new(), &mut out);
        out
    }

    /// Resolves a possibly partial state path. The path may be prefixed by
    /// the machine name and may omit enclosing states, as long as exactly one
    /// state matches.
    pub fn resolve(&self, path: &[String]) -> Result<Vec<String>, String> {
        let shown = path.join("::");
        let candidates: Vec<Vec<String>> = self
            .all_paths()
            .into_iter()
            .filter(|full| {
                let mut qualified = vec![self.name.clone()];
                qualified.extend(full.iter().cloned());
                full.ends_with(path) || qualified == path
            })
            .collect();
        match candidates.len() {
            0 => Err(format!("no state '{shown}' in state machine '{}'", self.name)),
            1 => Ok(candidates.into_iter().next().unwrap()),
            _ => Err(format!(
                "state name '{shown}' is ambiguous in state machine '{}'; qualify it with its enclosing states",
                self.name
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub package: Option<String>,
    /// Fully qualified names of direct supertypes.
    pub supertypes: Vec<String>,
    pub attributes: Vec<AttributeDecl>,
    pub operations: Vec<OperationDecl>,
    pub state_machine: Option<StateMachine>,
}

impl ClassDecl {
    pub fn qualified_name(&self) -> String {
        qualify(self.package.as_deref(), &self.name)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeDecl> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn operation(&self, name: &str) -> Option<&OperationDecl> {
        self.operations.iter().find(|o| o.name == name)
    }
}

pub(crate) fn qualify(package: Option<&str>, name: &str) -> String {
    match package {
        Some(p) => format!("{p}::{name}"),
        None => name.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Multiplicity {
    pub lower: u32,
    /// `None` is unbounded (`*`).
    pub upper: Option<u32>,
}

impl Multiplicity {
    pub const MANY: Multiplicity = Multiplicity {
        lower: 0,
        upper: None,
    };

    pub fn parse(text: &str) -> Result<Multiplicity, String> {
        let text = text.trim();
        let num = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| format!("malformed multiplicity '{text}'"))
        };
        let m = match text.split_once("..") {
            Some((lo, "*")) => Multiplicity {
                lower: num(lo)?,
                upper: None,
            },
            Some((lo, hi)) => Multiplicity {
                lower: num(lo)?,
                upper: Some(num(hi)?),
            },
            None if text == "*" => Multiplicity::MANY,
            None => {
                let n = num(text)?;
                Multiplicity {
                    lower: n,
                    upper: Some(n),
                }
            }
        };
        if let Some(u) = m.upper {
            if m.lower > u {
                return Err(format!(
                    "multiplicity '{text}': lower bound exceeds upper bound"
                ));
            }
        }
        Ok(m)
    }

    /// Navigation over this end yields at most one object.
    pub fn is_single(&self) -> bool {
        matches!(self.upper, Some(u) if u <= 1)
    }

    pub fn admits(&self, count: usize) -> bool {
        count >= self.lower as usize && self.upper.is_none_or(|u| count <= u as usize)
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.upper {
            Some(u) => write!(f, "{}..{}", self.lower, u),
            None => write!(f, "{}..*", self.lower),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssocEnd {
    /// Fully qualified class name.
    pub class: String,
    pub role: String,
    pub multiplicity: Multiplicity,
    pub constant: bool,
}

/// A binary association. Links run from an object at `ends[0]` to an object
/// at `ends[1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssocDecl {
    pub name: String,
    pub package: Option<String>,
    pub ends: [AssocEnd; 2],
}

/// Navigation through an association towards `ends[target_end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoleRef {
    pub assoc: usize,
    pub target_end: usize,
}

#[derive(Debug, Clone, Copy)]
pub enum Feature<'m> {
    Attribute {
        owner: &'m ClassDecl,
        decl: &'m AttributeDecl,
    },
    Role(RoleRef),
    Operation {
        owner: &'m ClassDecl,
        decl: &'m OperationDecl,
    },
}

/// A validated class model. Immutable once loaded.
#[derive(Debug, Clone)]
pub struct ClassModel {
    pub packages: Vec<String>,
    pub classes: Vec<ClassDecl>,
    pub associations: Vec<AssocDecl>,
    by_name: BTreeMap<String, usize>,
    by_simple_name: BTreeMap<String, Vec<usize>>,
    /// Reflexive-transitive supertypes per class.
    ancestors: Vec<BTreeSet<usize>>,
}

impl PartialEq for ClassModel {
    fn eq(&self, other: &Self) -> bool {
        self.packages == other.packages
            && self.classes == other.classes
            && self.associations == other.associations
    }
}

impl ClassModel {
    /// Builds the lookup indexes. The supertype graph must already be known
    /// to be acyclic and every supertype name must be declared.
    pub(crate) fn assemble(
        packages: Vec<String>,
        classes: Vec<ClassDecl>,
        associations: Vec<AssocDecl>,
    ) -> ClassModel {
        let mut by_name = BTreeMap::new();
        let mut by_simple_name: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, c) in classes.iter().enumerate() {
            by_name.insert(c.qualified_name(), i);
            by_simple_name.entry(c.name.clone()).or_default().push(i);
        }
        let ancestors = (0..classes.len())
            .map(|i| {
                let mut seen = BTreeSet::new();
                let mut queue = VecDeque::from([i]);
                while let Some(c) = queue.pop_front() {
                    if seen.insert(c) {
                        for s in &classes[c].supertypes {
                            if let Some(&j) = by_name.get(s) {
                                queue.push_back(j);
                            }
                        }
                    }
                }
                seen
            })
            .collect();
        ClassModel {
            packages,
            classes,
            associations,
            by_name,
            by_simple_name,
            ancestors,
        }
    }

    pub fn class(&self, qualified: &str) -> Option<&ClassDecl> {
        self.by_name.get(qualified).map(|&i| &self.classes[i])
    }

    pub fn class_index(&self, qualified: &str) -> Option<usize> {
        self.by_name.get(qualified).copied()
    }

    /// Resolves `Name` or `Package::Name` to a fully qualified class name.
    pub fn resolve_class(&self, name: &str) -> Result<String, String> {
        if self.by_name.contains_key(name) {
            return Ok(name.to_string());
        }
        if name.contains("::") {
            return Err(format!("unknown class '{name}'"));
        }
        match self.by_simple_name.get(name).map(Vec::as_slice) {
            Some([i]) => Ok(self.classes[*i].qualified_name()),
            Some(many) if many.len() > 1 => Err(format!(
                "class name '{name}' is ambiguous; qualify it with its package ({})",
                many.iter()
                    .map(|&i| self.classes[i].qualified_name())
                    .collect::<Vec<_>>()
                    .join(", ")
            )),
            _ => Err(format!("unknown class '{name}'")),
        }
    }

    /// Reflexive, transitive generalization between declared classes.
    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        match (self.by_name.get(sub), self.by_name.get(sup)) {
            (Some(&a), Some(&b)) => self.ancestors[a].contains(&b),
            _ => false,
        }
    }

    /// All supertypes of a class, itself included, as qualified names.
    pub fn supertypes_of(&self, qualified: &str) -> Vec<String> {
        match self.by_name.get(qualified) {
            Some(&i) => self.ancestors[i]
                .iter()
                .map(|&j| self.classes[j].qualified_name())
                .collect(),
            None => Vec::new(),
        }
    }

    /// Classes that are `qualified` or one of its (transitive) subclasses.
    pub fn subclasses_of(&self, qualified: &str) -> BTreeSet<String> {
        let Some(&target) = self.by_name.get(qualified) else {
            return BTreeSet::new();
        };
        self.classes
            .iter()
            .enumerate()
            .filter(|(i, _)| self.ancestors[*i].contains(&target))
            .map(|(_, c)| c.qualified_name())
            .collect()
    }

    pub fn association(&self, name: &str) -> Option<(usize, &AssocDecl)> {
        self.associations
            .iter()
            .enumerate()
            .find(|(_, a)| a.name == name || qualify(a.package.as_deref(), &a.name) == name)
    }

    pub fn role_target(&self, role: RoleRef) -> &AssocEnd {
        &self.associations[role.assoc].ends[role.target_end]
    }

    /// Static type of navigating `role`.
    pub fn role_type(&self, role: RoleRef) -> Type {
        let end = self.role_target(role);
        if end.multiplicity.is_single() {
            Type::Class(end.class.clone())
        } else {
            Type::set(Type::Class(end.class.clone()))
        }
    }

    fn features_declared_in(&self, class_idx: usize, name: &str) -> Vec<Feature<'_>> {
        let class = &self.classes[class_idx];
        let qualified = class.qualified_name();
        let mut out = Vec::new();
        if let Some(a) = class.attribute(name) {
            out.push(Feature::Attribute {
                owner: class,
                decl: a,
            });
        }
        for (ai, assoc) in self.associations.iter().enumerate() {
            for t in 0..2 {
                if assoc.ends[1 - t].class == qualified && assoc.ends[t].role == name {
                    out.push(Feature::Role(RoleRef {
                        assoc: ai,
                        target_end: t,
                    }));
                }
            }
        }
        if let Some(o) = class.operation(name) {
            out.push(Feature::Operation {
                owner: class,
                decl: o,
            });
        }
        out
    }

    /// Looks a feature up on `class` and then on its supertypes, nearest
    /// first. A name defined by several unrelated supertypes at the same
    /// distance is ambiguous; the error lists the defining classes.
    pub fn lookup_feature(
        &self,
        class: &str,
        name: &str,
    ) -> Result<Option<Feature<'_>>, Vec<String>> {
        let Some(&start) = self.by_name.get(class) else {
            return Ok(None);
        };
        let mut level = vec![start];
        let mut seen = BTreeSet::new();
        while !level.is_empty() {
            let mut found: Vec<(usize, Feature<'_>)> = Vec::new();
            for &c in &level {
                if let Some(f) = self.features_declared_in(c, name).into_iter().next() {
                    found.push((c, f));
                }
            }
            let owners: BTreeSet<usize> = found.iter().map(|(c, _)| *c).collect();
            if owners.len() > 1 {
                return Err(owners
                    .iter()
                    .map(|&c| self.classes[c].qualified_name())
                    .collect());
            }
            if let Some((_, f)) = found.into_iter().next() {
                return Ok(Some(f));
            }
            let mut next = Vec::new();
            for &c in &level {
                seen.insert(c);
                for s in &self.classes[c].supertypes {
                    if let Some(&j) = self.by_name.get(s) {
                        if !seen.contains(&j) && !next.contains(&j) {
                            next.push(j);
                        }
                    }
                }
            }
            level = next;
        }
        Ok(None)
    }

    /// Nearest state machine on the class or a supertype.
    pub fn state_machine_of(&self, class: &str) -> Option<&StateMachine> {
        let &i = self.by_name.get(class)?;
        if let Some(sm) = &self.classes[i].state_machine {
            return Some(sm);
        }
        self.ancestors[i]
            .iter()
            .filter(|&&j| j != i)
            .find_map(|&j| self.classes[j].state_machine.as_ref())
    }

    /// Attribute declaration visible on `class` (own or inherited).
    pub fn attribute_of(&self, class: &str, name: &str) -> Option<&AttributeDecl> {
        match self.lookup_feature(class, name) {
            Ok(Some(Feature::Attribute { decl, .. })) => Some(decl),
            _ => None,
        }
    }

    /// Operation visible on `class`, with its declaring class.
    pub fn operation_of(&self, class: &str, name: &str) -> Option<(&ClassDecl, &OperationDecl)> {
        match self.lookup_feature(class, name) {
            Ok(Some(Feature::Operation { owner, decl })) => Some((owner, decl)),
            _ => None,
        }
    }

    /// All attributes visible on `class`, nearest declaration first per name.
    pub fn all_attributes(&self, class: &str) -> Vec<&AttributeDecl> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let Some(&i) = self.by_name.get(class) else {
            return out;
        };
        let mut order: Vec<usize> = vec![i];
        order.extend(self.ancestors[i].iter().copied().filter(|&j| j != i));
        for j in order {
            for a in &self.classes[j].attributes {
                if seen.insert(a.name.clone()) {
                    out.push(a);
                }
            }
        }
        out
    }

    /// Serializes to the canonical model document.
    pub fn to_document(&self) -> String {
        doc::serialize_model(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modifier_forms() {
        assert_eq!(
            Modifier::parse("public read").unwrap(),
            Modifier {
                read: Access::Public,
                write: Access::Private
            }
        );
        assert_eq!(
            Modifier::parse("public read protected write").unwrap(),
            Modifier {
                read: Access::Public,
                write: Access::Protected
            }
        );
        assert_eq!(
            Modifier::parse("protected read").unwrap(),
            Modifier {
                read: Access::Protected,
                write: Access::Private
            }
        );
        assert!(Modifier::parse("private read public write")
            .unwrap_err()
            .contains("at least as restrictive"));
        assert!(Modifier::parse("pubread").unwrap_err().contains("shortcut"));
    }

    #[test]
    fn modifier_display_round_trips() {
        for text in [
            "public",
            "protected",
            "private",
            "public read",
            "protected read",
            "public read protected write",
        ] {
            let m = Modifier::parse(text).unwrap();
            assert_eq!(m.to_string(), text);
            assert_eq!(Modifier::parse(&m.to_string()).unwrap(), m);
        }
    }

    #[test]
    fn multiplicities() {
        assert_eq!(
            Multiplicity::parse("0..*").unwrap(),
            Multiplicity {
                lower: 0,
                upper: None
            }
        );
        assert_eq!(
            Multiplicity::parse("1").unwrap(),
            Multiplicity {
                lower: 1,
                upper: Some(1)
            }
        );
        assert!(Multiplicity::parse("3..2").is_err());
        assert!(Multiplicity::parse("0..1").unwrap().is_single());
        assert!(!Multiplicity::parse("0..2").unwrap().is_single());
        assert!(Multiplicity::parse("1..2").unwrap().admits(2));
        assert!(!Multiplicity::parse("1..2").unwrap().admits(3));
        assert!(!Multiplicity::parse("1..1").unwrap().admits(0));
    }

    #[test]
    fn state_resolution() {
        let sm = StateMachine {
            name: "Life".into(),
            states: vec![
                StateNode {
                    name: "Active".into(),
                    substates: vec![
                        StateNode {
                            name: "Valid".into(),
                            substates: vec![],
                        },
                        StateNode {
                            name: "Blocked".into(),
                            substates: vec![],
                        },
                    ],
                },
                StateNode {
                    name: "Closed".into(),
                    substates: vec![StateNode {
                        name: "Blocked".into(),
                        substates: vec![],
                    }],
                },
            ],
        };
        let s = |p: &str| p.split("::").map(String::from).collect::<Vec<_>>();
        assert_eq!(sm.resolve(&s("Valid")).unwrap(), s("Active::Valid"));
        assert_eq!(sm.resolve(&s("Life::Active")).unwrap(), s("Active"));
        assert!(sm.resolve(&s("Blocked")).unwrap_err().contains("ambiguous"));
        assert_eq!(
            sm.resolve(&s("Closed::Blocked")).unwrap(),
            s("Closed::Blocked")
        );
        assert!(sm.resolve(&s("Bogus")).is_err());
    }
}
