//! Runtime values.

use std::cmp::Ordering;
use std::fmt;

use super::logic::Bool3;
use crate::model::ObjectId;
use crate::types::{CollectionKind, Type};

/// A runtime value. Every type has its own undefined value, `Undef(T)`.
///
/// Sets and bags are kept sorted (sets also deduplicated) so that
/// structural comparison is order free. Collections never hold `Undef`.
#[derive(Debug, Clone)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
    Obj(ObjectId),
    Coll(CollectionKind, Vec<Value>),
    Undef(Type),
}

impl Value {
    pub fn undef_bool() -> Value {
        Value::Undef(Type::Boolean)
    }

    pub fn obj(id: impl Into<String>) -> Value {
        Value::Obj(ObjectId::new(id))
    }

    /// Normalizes `items` for the collection kind. `Collection` is abstract;
    /// values of that static type are built as bags.
    pub fn coll(kind: CollectionKind, mut items: Vec<Value>) -> Value {
        debug_assert!(!items.iter().any(Value::is_undef));
        match kind {
            CollectionKind::Set => {
                items.sort();
                items.dedup();
                Value::Coll(CollectionKind::Set, items)
            }
            CollectionKind::Bag | CollectionKind::Collection => {
                items.sort();
                Value::Coll(CollectionKind::Bag, items)
            }
            CollectionKind::Sequence => Value::Coll(kind, items),
        }
    }

    pub fn set(items: impl IntoIterator<Item = Value>) -> Value {
        Value::coll(CollectionKind::Set, items.into_iter().collect())
    }

    pub fn bag(items: impl IntoIterator<Item = Value>) -> Value {
        Value::coll(CollectionKind::Bag, items.into_iter().collect())
    }

    pub fn seq(items: impl IntoIterator<Item = Value>) -> Value {
        Value::coll(CollectionKind::Sequence, items.into_iter().collect())
    }

    pub fn is_undef(&self) -> bool {
        matches!(self, Value::Undef(_))
    }

    pub fn to_bool3(&self) -> Option<Bool3> {
        match self {
            Value::Bool(b) => Some(Bool3::from(*b)),
            Value::Undef(_) => Some(Bool3::Undef),
            _ => None,
        }
    }

    pub fn as_items(&self) -> Option<&[Value]> {
        match self {
            Value::Coll(_, items) => Some(items),
            _ => None,
        }
    }

    pub fn as_obj(&self) -> Option<&ObjectId> {
        match self {
            Value::Obj(id) => Some(id),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Int(_) | Value::Real(_) => 1,
            Value::Str(_) => 2,
            Value::Obj(_) => 3,
            Value::Coll(..) => 4,
            Value::Undef(_) => 5,
        }
    }
}

impl From<Bool3> for Value {
    fn from(b: Bool3) -> Self {
        match b {
            Bool3::True => Value::Bool(true),
            Bool3::False => Value::Bool(false),
            Bool3::Undef => Value::undef_bool(),
        }
    }
}

/// Total order used for canonical storage. Integers and reals compare
/// numerically, so `2` and `2.0` are the same element.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        use Value::*;
        match (self, other) {
            (Bool(a), Bool(b)) => a.cmp(b),
            (Int(a), Int(b)) => a.cmp(b),
            (Real(a), Real(b)) => a.total_cmp(b),
            (Int(a), Real(b)) => (*a as f64).total_cmp(b),
            (Real(a), Int(b)) => a.total_cmp(&(*b as f64)),
            (Str(a), Str(b)) => a.cmp(b),
            (Obj(a), Obj(b)) => a.cmp(b),
            (Coll(ka, a), Coll(kb, b)) => ka.cmp(kb).then_with(|| a.cmp(b)),
            (Undef(a), Undef(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

/// Strong equality: total, and true for two undefined values of the same
/// type. Undefined integers and reals are equal through the numeric tower.
pub fn strong_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Undef(x), Value::Undef(y)) => x == y || (x.is_numeric() && y.is_numeric()),
        _ => a == b,
    }
}

/// Weak equality: undefined whenever either side is undefined.
pub fn weak_equal(a: &Value, b: &Value) -> Bool3 {
    if a.is_undef() || b.is_undef() {
        Bool3::Undef
    } else {
        Bool3::from(strong_equal(a, b))
    }
}

pub(crate) fn format_real(r: f64) -> String {
    if r.is_finite() && r.fract() == 0.0 && r.abs() < 1e16 {
        format!("{r:.1}")
    } else {
        let s = format!("{r:?}");
        match s.find('e') {
            Some(i) if !s[..i].contains('.') => format!("{}.0{}", &s[..i], &s[i..]),
            _ => s,
        }
    }
}

pub(crate) fn quote_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for ch in s.chars() {
        match ch {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => f.write_str(&format_real(*r)),
            Value::Str(s) => f.write_str(&quote_string(s)),
            Value::Obj(id) => write!(f, "{id}"),
            Value::Coll(kind, items) => {
                write!(f, "{}{{", kind.name())?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
            Value::Undef(_) => f.write_str("undefined"),
        }
    }
}
