//! Abstract syntax. Equality ignores source positions.

use crate::diag::Pos;
use crate::types::CollectionKind;

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Expr {
        Expr { kind, pos }
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Lit(_) | ExprKind::SelfRef | ExprKind::Name(_) | ExprKind::Path(_) => {}
            ExprKind::CollLit(_, items) => items.iter().for_each(|e| e.walk(f)),
            ExprKind::Nav { source, .. } => source.walk(f),
            ExprKind::Call { source, args, .. } => {
                if let Some(s) = source {
                    s.walk(f);
                }
                args.iter().for_each(|e| e.walk(f));
            }
            ExprKind::Arrow { source, args, .. } => {
                source.walk(f);
                args.iter().for_each(|e| e.walk(f));
            }
            ExprKind::AtPre(e) | ExprKind::Not(e) | ExprKind::Neg(e) => e.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::If { cond, then, els } => {
                cond.walk(f);
                then.walk(f);
                els.walk(f);
            }
            ExprKind::Let { value, body, .. } => {
                value.walk(f);
                body.walk(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Real(f64),
    Str(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Mul,
    Div,
    Add,
    Sub,
    Lt,
    Gt,
    Le,
    Ge,
    /// `=`, strong equality.
    Eq,
    /// `==`, weak equality.
    WeakEq,
    /// `<>`, negated strong equality.
    Neq,
    And,
    Or,
    Xor,
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "=",
            BinOp::WeakEq => "==",
            BinOp::Neq => "<>",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Xor => "xor",
            BinOp::Implies => "implies",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn level(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::And | BinOp::Or | BinOp::Xor => 2,
            BinOp::Eq | BinOp::WeakEq | BinOp::Neq => 3,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        self == BinOp::Implies
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterVar {
    pub name: String,
    pub ty: Option<TypeExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    SelfRef,
    /// A variable, or a feature of an implicit source.
    Name(String),
    /// `Package::Class`.
    Path(Vec<String>),
    /// `Set{...}`, `Bag{...}`, `Sequence{...}`.
    CollLit(CollectionKind, Vec<Expr>),
    /// `source.name`
    Nav {
        source: Box<Expr>,
        name: String,
    },
    /// `source.name(args)` or `name(args)` on an implicit source.
    Call {
        source: Option<Box<Expr>>,
        name: String,
        args: Vec<Expr>,
    },
    /// `source->op(iters | args)`; `iters` is empty when no iterator is
    /// declared.
    Arrow {
        source: Box<Expr>,
        op: String,
        iters: Vec<IterVar>,
        args: Vec<Expr>,
    },
    AtPre(Box<Expr>),
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        els: Box<Expr>,
    },
    Let {
        name: String,
        ty: Option<TypeExpr>,
        value: Box<Expr>,
        body: Box<Expr>,
    },
}

/// A type as written in source.
#[derive(Debug, Clone)]
pub enum TypeExpr {
    Named(Vec<String>, Pos),
    Collection(CollectionKind, Box<TypeExpr>, Pos),
}

impl TypeExpr {
    pub fn pos(&self) -> Pos {
        match self {
            TypeExpr::Named(_, p) | TypeExpr::Collection(_, _, p) => *p,
        }
    }
}

impl PartialEq for TypeExpr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (TypeExpr::Named(a, _), TypeExpr::Named(b, _)) => a == b,
            (TypeExpr::Collection(ka, a, _), TypeExpr::Collection(kb, b, _)) => ka == kb && a == b,
            _ => false,
        }
    }
}

impl std::fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TypeExpr::Named(path, _) => f.write_str(&path.join("::")),
            TypeExpr::Collection(k, e, _) => write!(f, "{}({})", k.name(), e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecursionMode {
    #[default]
    Default,
    Executable,
    Loose,
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub ty: TypeExpr,
    pub pos: Pos,
}

impl PartialEq for Param {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.ty == other.ty
    }
}

/// The class a declaration is attached to, with an optional name for the
/// contextual instance (`context t : Title`).
#[derive(Debug, Clone)]
pub struct ClassContext {
    pub class: Vec<String>,
    pub self_name: Option<String>,
    pub pos: Pos,
}

impl PartialEq for ClassContext {
    fn eq(&self, other: &Self) -> bool {
        self.class == other.class && self.self_name == other.self_name
    }
}

impl ClassContext {
    pub fn class_text(&self) -> String {
        self.class.join("::")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invariant {
    pub context: ClassContext,
    pub name: Option<String>,
    pub mode: RecursionMode,
    pub body: Expr,
}

#[derive(Debug, Clone)]
pub struct DerivedDef {
    pub attr: String,
    pub expr: Expr,
    pub pos: Pos,
}

impl PartialEq for DerivedDef {
    fn eq(&self, other: &Self) -> bool {
        self.attr == other.attr && self.expr == other.expr
    }
}

/// One or more `attr = expr` equations under one context, separated by `;`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedBlock {
    pub context: ClassContext,
    pub name: Option<String>,
    pub mode: RecursionMode,
    pub defs: Vec<DerivedDef>,
}

#[derive(Debug, Clone)]
pub struct ConstantItem {
    pub name: String,
    /// Written `name()`.
    pub query: bool,
    pub pos: Pos,
}

impl PartialEq for ConstantItem {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.query == other.query
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDecl {
    pub context: ClassContext,
    pub name: Option<String>,
    pub items: Vec<ConstantItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Receivers {
    /// `context Class::op(...)`
    Class(ClassContext),
    /// `action (m : Member, lb : Library)::op(...)`
    Joint(Vec<Param>),
    /// `event op(...)`
    Event,
}

#[derive(Debug, Clone)]
pub enum MessageItem {
    Send {
        /// `None` sends to the contextual object.
        target: Option<Expr>,
        op: String,
        args: Vec<Expr>,
        pos: Pos,
    },
    If {
        cond: Expr,
        then: Vec<MessageItem>,
        els: Vec<MessageItem>,
        pos: Pos,
    },
}

impl PartialEq for MessageItem {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                MessageItem::Send {
                    target: t1,
                    op: o1,
                    args: a1,
                    ..
                },
                MessageItem::Send {
                    target: t2,
                    op: o2,
                    args: a2,
                    ..
                },
            ) => t1 == t2 && o1 == o2 && a1 == a2,
            (
                MessageItem::If {
                    cond: c1,
                    then: t1,
                    els: e1,
                    ..
                },
                MessageItem::If {
                    cond: c2,
                    then: t2,
                    els: e2,
                    ..
                },
            ) => c1 == c2 && t1 == t2 && e1 == e2,
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperationSpec {
    pub receivers: Receivers,
    pub op: String,
    pub params: Vec<Param>,
    pub returns: Option<TypeExpr>,
    pub pre: Option<Expr>,
    pub post: Option<Expr>,
    pub called: Option<Vec<MessageItem>>,
    pub pos: Pos,
}

impl PartialEq for OperationSpec {
    fn eq(&self, other: &Self) -> bool {
        self.receivers == other.receivers
            && self.op == other.op
            && self.params == other.params
            && self.returns == other.returns
            && self.pre == other.pre
            && self.post == other.post
            && self.called == other.called
    }
}

impl OperationSpec {
    /// `Class::op`, `(a, b)::op` or `op`.
    pub fn display_name(&self) -> String {
        match &self.receivers {
            Receivers::Class(c) => format!("{}::{}", c.class_text(), self.op),
            Receivers::Joint(ps) => format!(
                "({})::{}",
                ps.iter()
                    .map(|p| p.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", "),
                self.op
            ),
            Receivers::Event => self.op.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionConstraint {
    pub context: ClassContext,
    pub condition: Expr,
    pub messages: Vec<MessageItem>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintDecl {
    Invariant(Invariant),
    Derived(DerivedBlock),
    Constant(ConstantDecl),
    Operation(OperationSpec),
    Action(ActionConstraint),
}

impl ConstraintDecl {
    pub fn pos(&self) -> Pos {
        match self {
            ConstraintDecl::Invariant(i) => i.context.pos,
            ConstraintDecl::Derived(d) => d.context.pos,
            ConstraintDecl::Constant(c) => c.context.pos,
            ConstraintDecl::Operation(o) => o.pos,
            ConstraintDecl::Action(a) => a.context.pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintFile {
    pub decls: Vec<ConstraintDecl>,
}
