//! The typed expression tree produced by the checker and consumed by the
//! evaluator. Names are resolved: every feature access points at its
//! declaration and every implicit source is an explicit variable.

use crate::diag::Pos;
use crate::eval::Value;
use crate::model::RoleRef;
use crate::syntax::BinOp;

use super::{CollectionKind, Type};

#[derive(Debug, Clone)]
pub struct TExpr {
    pub ty: Type,
    pub pos: Pos,
    pub kind: TKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollOp {
    Size,
    IsEmpty,
    NotEmpty,
    Includes,
    Excludes,
    Including,
    Excluding,
    Sum,
    Union,
    Intersection,
    AsSet,
    AsBag,
    AsSequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterOp {
    Exists,
    ForAll,
    Select,
    Reject,
    Collect,
    IsUnique,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Abs,
    Floor,
    Round,
    Max,
    Min,
    Div,
    Mod,
    Size,
    Concat,
    ToUpper,
    ToLower,
    Substring,
}

#[derive(Debug, Clone)]
pub enum TKind {
    Lit(Value),
    Var(String),
    CollLit(CollectionKind, Vec<TExpr>),
    /// Attribute of the object `source` evaluates to.
    Attr {
        source: Box<TExpr>,
        attr: String,
    },
    /// Class-scoped attribute, read from the snapshot's statics.
    StaticAttr {
        class: String,
        attr: String,
    },
    Role {
        source: Box<TExpr>,
        role: RoleRef,
    },
    /// A query operation with a body, declared in `owner`.
    Query {
        source: Box<TExpr>,
        owner: String,
        op: String,
        args: Vec<TExpr>,
    },
    Builtin {
        op: Builtin,
        source: Box<TExpr>,
        args: Vec<TExpr>,
    },
    /// `source->op(args)`.
    Coll {
        op: CollOp,
        source: Box<TExpr>,
        args: Vec<TExpr>,
    },
    /// `source->op(vars | body)`.
    Iterate {
        op: IterOp,
        source: Box<TExpr>,
        vars: Vec<String>,
        body: Box<TExpr>,
    },
    /// A single value treated as a set of zero or one elements.
    ToSet(Box<TExpr>),
    AtPre(Box<TExpr>),
    Not(Box<TExpr>),
    Neg(Box<TExpr>),
    Binary {
        op: BinOp,
        lhs: Box<TExpr>,
        rhs: Box<TExpr>,
    },
    If {
        cond: Box<TExpr>,
        then: Box<TExpr>,
        els: Box<TExpr>,
    },
    Let {
        name: String,
        value: Box<TExpr>,
        body: Box<TExpr>,
    },
    AllInstances(String),
    IsNew(Box<TExpr>),
    IsTypeOf(Box<TExpr>, Type),
    IsKindOf(Box<TExpr>, Type),
    AsType(Box<TExpr>, Type),
    /// Full state path from the top of the machine.
    InState(Box<TExpr>, Vec<String>),
}

impl TExpr {
    pub fn new(kind: TKind, ty: Type, pos: Pos) -> TExpr {
        TExpr { ty, pos, kind }
    }

    pub fn children(&self) -> Vec<&TExpr> {
        match &self.kind {
            TKind::Lit(_) | TKind::Var(_) | TKind::StaticAttr { .. } | TKind::AllInstances(_) => {
                vec![]
            }
            TKind::CollLit(_, items) => items.iter().collect(),
            TKind::Attr { source, .. } | TKind::Role { source, .. } => vec![source],
            TKind::Query { source, args, .. }
            | TKind::Builtin { source, args, .. }
            | TKind::Coll { source, args, .. } => {
                let mut v = vec![source.as_ref()];
                v.extend(args.iter());
                v
            }
            TKind::Iterate { source, body, .. } => vec![source, body],
            TKind::ToSet(e)
            | TKind::AtPre(e)
            | TKind::Not(e)
            | TKind::Neg(e)
            | TKind::IsNew(e)
            | TKind::IsTypeOf(e, _)
            | TKind::IsKindOf(e, _)
            | TKind::AsType(e, _)
            | TKind::InState(e, _) => vec![e],
            TKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            TKind::If { cond, then, els } => vec![cond, then, els],
            TKind::Let { value, body, .. } => vec![value, body],
        }
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut dyn FnMut(&TExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Attributes read anywhere in the expression, by name.
    pub fn attributes_read(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let TKind::Attr { attr, .. } = &e.kind {
                if !out.contains(attr) {
                    out.push(attr.clone());
                }
            }
        });
        out
    }
}

/// A message required by an `action` or `called` constraint.
#[derive(Debug, Clone)]
pub enum TMessage {
    Send {
        /// Evaluates to an object or a collection of objects.
        target: TExpr,
        op: String,
        args: Vec<TExpr>,
        pos: Pos,
    },
    If {
        cond: TExpr,
        then: Vec<TMessage>,
        els: Vec<TMessage>,
        pos: Pos,
    },
}
