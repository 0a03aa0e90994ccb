use std::fmt;

use super::{CollectionKind, Type};
use crate::model::ClassModel;

/// Reflexive, transitive conformance. Collections never conform to
/// `OclAny` and `OclAny` conforms to no collection.
pub fn conforms_to(sub: &Type, sup: &Type, model: &ClassModel) -> bool {
    match (sub, sup) {
        _ if sub == sup => true,
        (Type::Integer, Type::Real) => true,
        (
            Type::Boolean | Type::Integer | Type::Real | Type::String | Type::Class(_),
            Type::OclAny,
        ) => true,
        (Type::Class(a), Type::Class(b)) => model.is_subclass(a, b),
        (Type::Collection(k1, e1), Type::Collection(k2, e2)) => {
            (k1 == k2 || *k2 == CollectionKind::Collection) && conforms_to(e1, e2, model)
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LcsError {
    /// Several minimal common supertypes, listed in name order.
    Ambiguous(Vec<Type>),
    NoCommonSupertype(Type, Type),
}

impl fmt::Display for LcsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LcsError::Ambiguous(c) => write!(
                f,
                "no least common supertype; candidates are {}",
                c.iter().map(Type::to_string).collect::<Vec<_>>().join(", ")
            ),
            LcsError::NoCommonSupertype(a, b) => write!(f, "{a} and {b} have no common supertype"),
        }
    }
}

pub fn least_common_supertype(a: &Type, b: &Type, model: &ClassModel) -> Result<Type, LcsError> {
    if conforms_to(a, b, model) {
        return Ok(b.clone());
    }
    if conforms_to(b, a, model) {
        return Ok(a.clone());
    }
    match (a, b) {
        (Type::Class(x), Type::Class(y)) => {
            let sx = model.supertypes_of(x);
            let sy = model.supertypes_of(y);
            let common: Vec<&String> = sx.iter().filter(|c| sy.contains(c)).collect();
            let minimal: Vec<Type> = common
                .iter()
                .filter(|c| !common.iter().any(|d| d != *c && model.is_subclass(d, c)))
                .map(|c| Type::Class((*c).clone()))
                .collect();
            match minimal.len() {
                0 => Ok(Type::OclAny),
                1 => Ok(minimal.into_iter().next().unwrap()),
                _ => Err(LcsError::Ambiguous(minimal)),
            }
        }
        (Type::Collection(k1, e1), Type::Collection(k2, e2)) => {
            let kind = if k1 == k2 {
                *k1
            } else {
                CollectionKind::Collection
            };
            let elem = least_common_supertype(e1, e2, model).map_err(|e| match e {
                LcsError::NoCommonSupertype(..) => {
                    LcsError::NoCommonSupertype(a.clone(), b.clone())
                }
                amb => amb,
            })?;
            Ok(Type::Collection(kind, Box::new(elem)))
        }
        _ if conforms_to(a, &Type::OclAny, model) && conforms_to(b, &Type::OclAny, model) => {
            Ok(Type::OclAny)
        }
        _ => Err(LcsError::NoCommonSupertype(a.clone(), b.clone())),
    }
}
