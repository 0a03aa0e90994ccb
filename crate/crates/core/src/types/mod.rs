//! The type universe, conformance, least common supertypes and the static
//! checker.

pub(crate) mod check;
mod conform;
pub mod typed;

use std::fmt;

pub use check::{
    typecheck, typecheck_expression, typecheck_file, ConstTarget, ExprScope, TypedAction,
    TypedConstant, TypedDecl, TypedDerived, TypedFile, TypedInvariant, TypedOperation,
    TypedReceivers,
};
pub use conform::{conforms_to, least_common_supertype, LcsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CollectionKind {
    Set,
    Bag,
    Sequence,
    /// Abstract supertype of the three concrete kinds.
    Collection,
}

impl CollectionKind {
    pub fn name(self) -> &'static str {
        match self {
            CollectionKind::Set => "Set",
            CollectionKind::Bag => "Bag",
            CollectionKind::Sequence => "Sequence",
            CollectionKind::Collection => "Collection",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "Set" => CollectionKind::Set,
            "Bag" => CollectionKind::Bag,
            "Sequence" => CollectionKind::Sequence,
            "Collection" => CollectionKind::Collection,
            _ => return None,
        })
    }
}

/// A static type. Class types carry the fully qualified class name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Boolean,
    Integer,
    Real,
    String,
    OclAny,
    OclState,
    Class(String),
    Collection(CollectionKind, Box<Type>),
}

impl Type {
    pub fn set(elem: Type) -> Type {
        Type::Collection(CollectionKind::Set, Box::new(elem))
    }

    pub fn bag(elem: Type) -> Type {
        Type::Collection(CollectionKind::Bag, Box::new(elem))
    }

    pub fn sequence(elem: Type) -> Type {
        Type::Collection(CollectionKind::Sequence, Box::new(elem))
    }

    pub fn collection(elem: Type) -> Type {
        Type::Collection(CollectionKind::Collection, Box::new(elem))
    }

    pub fn class(name: impl Into<String>) -> Type {
        Type::Class(name.into())
    }

    pub fn basic_from_name(name: &str) -> Option<Type> {
        Some(match name {
            "Boolean" => Type::Boolean,
            "Integer" => Type::Integer,
            "Real" => Type::Real,
            "String" => Type::String,
            "OclAny" => Type::OclAny,
            "OclState" => Type::OclState,
            _ => return None,
        })
    }

    pub fn is_collection(&self) -> bool {
        matches!(self, Type::Collection(..))
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Type::Integer | Type::Real)
    }

    pub fn element(&self) -> Option<&Type> {
        match self {
            Type::Collection(_, elem) => Some(elem),
            _ => None,
        }
    }

    pub fn collection_kind(&self) -> Option<CollectionKind> {
        match self {
            Type::Collection(kind, _) => Some(*kind),
            _ => None,
        }
    }

    pub fn class_name(&self) -> Option<&str> {
        match self {
            Type::Class(name) => Some(name),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Boolean => f.write_str("Boolean"),
            Type::Integer => f.write_str("Integer"),
            Type::Real => f.write_str("Real"),
            Type::String => f.write_str("String"),
            Type::OclAny => f.write_str("OclAny"),
            Type::OclState => f.write_str("OclState"),
            Type::Class(name) => f.write_str(name),
            Type::Collection(kind, elem) => write!(f, "{}({})", kind.name(), elem),
        }
    }
}
