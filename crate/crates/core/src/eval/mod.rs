//! Three-valued evaluation of typed expressions over snapshots.

pub mod logic;
pub mod value;

use std::collections::BTreeMap;

use petgraph::algo::is_cyclic_directed;
use petgraph::graphmap::DiGraphMap;

pub use logic::{bool_binop, bool_not, Bool3, BoolOp};
pub use value::{strong_equal, weak_equal, Value};

use crate::diag::{Diagnostic, Diagnostics, Pos};
use crate::model::{objects_of_kind, ClassModel, Snapshot};
use crate::syntax::{parse_expression_text, BinOp};
use crate::types::typed::{Builtin, CollOp, IterOp, TExpr, TKind};
use crate::types::{conforms_to, CollectionKind, Type};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("integer overflow at {0}")]
    Overflow(Pos),
    #[error("internal evaluation error: {0}")]
    Internal(String),
}

type Res = Result<Value, EvalError>;

/// Variable bindings, innermost last.
#[derive(Debug, Clone, Default)]
pub struct Env {
    vars: Vec<(String, Value)>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with(mut self, name: impl Into<String>, v: Value) -> Env {
        self.vars.push((name.into(), v));
        self
    }

    pub fn bind(&mut self, name: impl Into<String>, v: Value) {
        self.vars.push((name.into(), v));
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    fn pop(&mut self, n: usize) {
        let len = self.vars.len();
        self.vars.truncate(len - n);
    }
}

/// Typed bodies of the model's query operations.
#[derive(Debug, Clone, Default)]
pub struct QueryTable {
    bodies: BTreeMap<(String, String), (Vec<String>, TExpr)>,
}

impl QueryTable {
    pub fn empty() -> QueryTable {
        QueryTable::default()
    }

    /// Parses and checks every query body in the model. Recursive queries
    /// are rejected.
    pub fn build(model: &ClassModel) -> Result<QueryTable, Diagnostics> {
        let mut table = QueryTable::default();
        let mut diags = Vec::new();
        for c in &model.classes {
            let owner = c.qualified_name();
            for op in &c.operations {
                let Some(body) = &op.body else { continue };
                let here = |d: Diagnostic| {
                    Diagnostic::error(
                        d.pos,
                        format!("in body of {owner}::{}: {}", op.name, d.message),
                    )
                };
                let parsed = match parse_expression_text(body) {
                    Ok(e) => e,
                    Err(d) => {
                        diags.extend(d.0.into_iter().map(here));
                        continue;
                    }
                };
                match crate::types::check::typecheck_query_body(model, &owner, &op.params, &parsed)
                {
                    Ok(t) => {
                        if let Some(r) = &op.returns {
                            if !conforms_to(&t.ty, r, model) {
                                diags.push(Diagnostic::error(
                                    Pos::default(),
                                    format!(
                                        "body of {owner}::{} has type {}, not {r}",
                                        op.name, t.ty
                                    ),
                                ));
                                continue;
                            }
                        }
                        let names = op.params.iter().map(|(n, _)| n.clone()).collect();
                        table
                            .bodies
                            .insert((owner.clone(), op.name.clone()), (names, t));
                    }
                    Err(d) => diags.extend(d.0.into_iter().map(here)),
                }
            }
        }
        let keys: Vec<(String, String)> = table.bodies.keys().cloned().collect();
        let mut graph = DiGraphMap::<usize, ()>::new();
        for (i, k) in keys.iter().enumerate() {
            graph.add_node(i);
            table.bodies[k].1.walk(&mut |e| {
                if let TKind::Query { op, .. } = &e.kind {
                    for (j, (_, o)) in keys.iter().enumerate() {
                        if o == op {
                            graph.add_edge(i, j, ());
                        }
                    }
                }
            });
        }
        if is_cyclic_directed(&graph) {
            diags.push(Diagnostic::error(
                Pos::default(),
                "query operation bodies are recursive; use a derived attribute instead",
            ));
        }
        if diags.is_empty() {
            Ok(table)
        } else {
            Err(Diagnostics(diags))
        }
    }

    fn body(&self, owner: &str, op: &str) -> Option<&(Vec<String>, TExpr)> {
        self.bodies.get(&(owner.to_string(), op.to_string()))
    }
}

/// What an expression is evaluated against.
#[derive(Clone, Copy)]
pub struct EvalCtx<'a> {
    pub model: &'a ClassModel,
    pub snap: &'a Snapshot,
    /// State before the operation, for `@pre` and `oclIsNew`.
    pub pre: Option<&'a Snapshot>,
    /// State after the operation; `snap` unless inside `@pre`.
    pub post: Option<&'a Snapshot>,
    pub queries: &'a QueryTable,
}

impl<'a> EvalCtx<'a> {
    pub fn new(model: &'a ClassModel, snap: &'a Snapshot, queries: &'a QueryTable) -> Self {
        EvalCtx {
            model,
            snap,
            pre: None,
            post: None,
            queries,
        }
    }

    pub fn with_pre(mut self, pre: &'a Snapshot) -> Self {
        self.pre = Some(pre);
        self.post = Some(self.snap);
        self
    }
}

pub fn eval(e: &TExpr, env: &Env, cx: &EvalCtx) -> Res {
    let mut env = env.clone();
    ev(e, &mut env, cx)
}

/// Evaluates a Boolean expression to a truth value.
pub fn eval_bool(e: &TExpr, env: &Env, cx: &EvalCtx) -> Result<Bool3, EvalError> {
    let v = eval(e, env, cx)?;
    v.to_bool3()
        .ok_or_else(|| EvalError::Internal(format!("expected a Boolean, got {v}")))
}

/// Dynamic type of a defined value.
pub fn dynamic_type(v: &Value, snap: &Snapshot) -> Option<Type> {
    Some(match v {
        Value::Bool(_) => Type::Boolean,
        Value::Int(_) => Type::Integer,
        Value::Real(_) => Type::Real,
        Value::Str(_) => Type::String,
        Value::Obj(id) => Type::Class(snap.object(id)?.class.clone()),
        Value::Coll(..) | Value::Undef(_) => return None,
    })
}

fn internal(msg: impl Into<String>) -> EvalError {
    EvalError::Internal(msg.into())
}

fn bool3(v: &Value) -> Result<Bool3, EvalError> {
    v.to_bool3()
        .ok_or_else(|| internal(format!("expected a Boolean, got {v}")))
}

fn items(v: &Value) -> Result<&[Value], EvalError> {
    v.as_items()
        .ok_or_else(|| internal(format!("expected a collection, got {v}")))
}

fn runtime_kind(v: &Value) -> CollectionKind {
    match v {
        Value::Coll(k, _) => *k,
        _ => CollectionKind::Bag,
    }
}

fn num(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Real(r) => Some(*r),
        _ => None,
    }
}

fn real(r: f64, pos: Pos) -> Res {
    if r.is_finite() {
        Ok(Value::Real(r))
    } else {
        Err(EvalError::Overflow(pos))
    }
}

fn ev(e: &TExpr, env: &mut Env, cx: &EvalCtx) -> Res {
    let undef = || Ok(Value::Undef(e.ty.clone()));
    match &e.kind {
        TKind::Lit(v) => Ok(v.clone()),
        TKind::Var(n) => env
            .get(n)
            .cloned()
            .ok_or_else(|| internal(format!("unbound variable '{n}'"))),
        TKind::CollLit(kind, items) => {
            let mut out = Vec::new();
            for i in items {
                let v = ev(i, env, cx)?;
                if v.is_undef() {
                    return undef();
                }
                out.push(v);
            }
            Ok(Value::coll(*kind, out))
        }
        TKind::Attr { source, attr } => match ev(source, env, cx)? {
            Value::Obj(id) => Ok(cx
                .snap
                .attr(&id, attr)
                .cloned()
                .unwrap_or(Value::Undef(e.ty.clone()))),
            Value::Undef(_) => undef(),
            v => Err(internal(format!(
                "attribute '{attr}' read from non-object {v}"
            ))),
        },
        TKind::StaticAttr { class, attr } => Ok(cx
            .snap
            .static_value(class, attr)
            .cloned()
            .unwrap_or(Value::Undef(e.ty.clone()))),
        TKind::Role { source, role } => match ev(source, env, cx)? {
            Value::Obj(id) => {
                let targets = if cx.snap.contains(&id) {
                    cx.snap.navigate(*role, &id)
                } else {
                    &[]
                };
                if e.ty.is_collection() {
                    Ok(Value::set(targets.iter().cloned().map(Value::Obj)))
                } else if let [one] = targets {
                    Ok(Value::Obj(one.clone()))
                } else {
                    undef()
                }
            }
            Value::Undef(_) => undef(),
            v => Err(internal(format!("navigation from non-object {v}"))),
        },
        TKind::Query {
            source,
            owner,
            op,
            args,
        } => {
            let src = ev(source, env, cx)?;
            let mut vals = Vec::new();
            for a in args {
                vals.push(ev(a, env, cx)?);
            }
            let id = match &src {
                Value::Obj(id) => id.clone(),
                Value::Undef(_) => return undef(),
                v => return Err(internal(format!("query called on non-object {v}"))),
            };
            let Some(obj) = cx.snap.object(&id) else {
                return undef();
            };
            let body = cx
                .model
                .operation_of(&obj.class, op)
                .and_then(|(o, _)| cx.queries.body(&o.qualified_name(), op))
                .or_else(|| cx.queries.body(owner, op))
                .ok_or_else(|| internal(format!("no body for query {owner}::{op}")))?;
            let mut inner = Env::new().with("self", src);
            for (n, v) in body.0.iter().zip(vals) {
                inner.bind(n.clone(), v);
            }
            let v = ev(&body.1, &mut inner, cx)?;
            Ok(coerce_to(v, &e.ty))
        }
        TKind::Builtin { op, source, args } => {
            let src = ev(source, env, cx)?;
            let mut vals = Vec::new();
            for a in args {
                vals.push(ev(a, env, cx)?);
            }
            if src.is_undef() || vals.iter().any(Value::is_undef) {
                return undef();
            }
            builtin(*op, &src, &vals, &e.ty, e.pos)
        }
        TKind::Coll { op, source, args } => {
            let src = ev(source, env, cx)?;
            let mut vals = Vec::new();
            for a in args {
                vals.push(ev(a, env, cx)?);
            }
            if src.is_undef() || vals.iter().any(Value::is_undef) {
                return undef();
            }
            eval_collection_op(*op, &src, &vals, &e.ty, e.pos)
        }
        TKind::Iterate {
            op,
            source,
            vars,
            body,
        } => {
            let src = ev(source, env, cx)?;
            if src.is_undef() {
                return undef();
            }
            iterate(*op, &src, vars, body, &e.ty, env, cx)
        }
        TKind::ToSet(inner) => match ev(inner, env, cx)? {
            Value::Undef(_) => Ok(Value::set([])),
            v => Ok(Value::set([v])),
        },
        TKind::AtPre(inner) => {
            let pre = cx
                .pre
                .ok_or_else(|| internal("'@pre' evaluated without a pre-state"))?;
            let at = EvalCtx { snap: pre, ..*cx };
            ev(inner, env, &at)
        }
        TKind::Not(inner) => Ok(bool3(&ev(inner, env, cx)?)?.not().into()),
        TKind::Neg(inner) => match ev(inner, env, cx)? {
            Value::Int(i) => i
                .checked_neg()
                .map(Value::Int)
                .ok_or(EvalError::Overflow(e.pos)),
            Value::Real(r) => Ok(Value::Real(-r)),
            Value::Undef(_) => undef(),
            v => Err(internal(format!("negation of {v}"))),
        },
        TKind::Binary { op, lhs, rhs } => {
            let l = ev(lhs, env, cx)?;
            let r = ev(rhs, env, cx)?;
            binary(*op, &l, &r, &e.ty, e.pos)
        }
        TKind::If { cond, then, els } => match bool3(&ev(cond, env, cx)?)? {
            Bool3::True => Ok(coerce_to(ev(then, env, cx)?, &e.ty)),
            Bool3::False => Ok(coerce_to(ev(els, env, cx)?, &e.ty)),
            Bool3::Undef => undef(),
        },
        TKind::Let { name, value, body } => {
            let v = ev(value, env, cx)?;
            env.bind(name.clone(), v);
            let r = ev(body, env, cx);
            env.pop(1);
            r
        }
        TKind::AllInstances(class) => {
            let ids = objects_of_kind(cx.snap, cx.model, class).map_err(internal)?;
            Ok(Value::set(ids.into_iter().map(Value::Obj)))
        }
        TKind::IsNew(inner) => match ev(inner, env, cx)? {
            Value::Obj(id) => {
                let (Some(pre), Some(post)) = (cx.pre, cx.post) else {
                    return Err(internal("oclIsNew evaluated without a pre-state"));
                };
                Ok(eval_ocl_is_new(&id, pre, post).into())
            }
            Value::Undef(_) => undef(),
            v => Err(internal(format!("oclIsNew on {v}"))),
        },
        TKind::IsTypeOf(inner, t) | TKind::IsKindOf(inner, t) => {
            let v = ev(inner, env, cx)?;
            if v.is_undef() {
                return undef();
            }
            let Some(dt) = dynamic_type(&v, cx.snap) else {
                return undef();
            };
            let exact = matches!(e.kind, TKind::IsTypeOf(..));
            Ok(Value::Bool(if exact {
                dt == *t
            } else {
                conforms_to(&dt, t, cx.model)
            }))
        }
        TKind::AsType(inner, t) => {
            let v = ev(inner, env, cx)?;
            if v.is_undef() {
                return undef();
            }
            match dynamic_type(&v, cx.snap) {
                Some(dt) if conforms_to(&dt, t, cx.model) => Ok(coerce_to(v, t)),
                _ => undef(),
            }
        }
        TKind::InState(inner, path) => match ev(inner, env, cx)? {
            Value::Obj(id) => match cx.snap.object(&id).and_then(|o| o.state.as_ref()) {
                Some(state) => Ok(Value::Bool(state.starts_with(path))),
                None => undef(),
            },
            Value::Undef(_) => undef(),
            v => Err(internal(format!("oclInState on {v}"))),
        },
    }
}

/// True iff the object exists after but not before; undefined if it does
/// not exist afterwards.
pub fn eval_ocl_is_new(id: &crate::model::ObjectId, pre: &Snapshot, post: &Snapshot) -> Bool3 {
    if !post.contains(id) {
        Bool3::Undef
    } else {
        Bool3::from(!pre.contains(id))
    }
}

fn coerce_to(v: Value, ty: &Type) -> Value {
    match (v, ty) {
        (Value::Int(i), Type::Real) => Value::Real(i as f64),
        (Value::Undef(_), t) => Value::Undef(t.clone()),
        (v, _) => v,
    }
}

fn binary(op: BinOp, l: &Value, r: &Value, ty: &Type, pos: Pos) -> Res {
    let logic = |f: fn(Bool3, Bool3) -> Bool3| -> Res { Ok(f(bool3(l)?, bool3(r)?).into()) };
    match op {
        BinOp::And => return logic(Bool3::and),
        BinOp::Or => return logic(Bool3::or),
        BinOp::Xor => return logic(Bool3::xor),
        BinOp::Implies => return logic(Bool3::implies),
        BinOp::Eq => return Ok(Value::Bool(strong_equal(l, r))),
        BinOp::Neq => return Ok(Value::Bool(!strong_equal(l, r))),
        BinOp::WeakEq => return Ok(weak_equal(l, r).into()),
        _ => {}
    }
    if l.is_undef() || r.is_undef() {
        return Ok(Value::Undef(ty.clone()));
    }
    match op {
        BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
            let ord = match (l, r) {
                (Value::Int(a), Value::Int(b)) => a.cmp(b),
                (Value::Str(a), Value::Str(b)) => a.cmp(b),
                _ => {
                    let (a, b) = (num(l), num(r));
                    match (a, b) {
                        (Some(a), Some(b)) => a.total_cmp(&b),
                        _ => return Err(internal(format!("cannot order {l} and {r}"))),
                    }
                }
            };
            use std::cmp::Ordering::*;
            Ok(Value::Bool(match op {
                BinOp::Lt => ord == Less,
                BinOp::Gt => ord == Greater,
                BinOp::Le => ord != Greater,
                _ => ord != Less,
            }))
        }
        BinOp::Div => {
            let (Some(a), Some(b)) = (num(l), num(r)) else {
                return Err(internal(format!("cannot divide {l} by {r}")));
            };
            if b == 0.0 {
                Ok(Value::Undef(Type::Real))
            } else {
                real(a / b, pos)
            }
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul => match (l, r) {
            (Value::Int(a), Value::Int(b)) => {
                let v = match op {
                    BinOp::Add => a.checked_add(*b),
                    BinOp::Sub => a.checked_sub(*b),
                    _ => a.checked_mul(*b),
                };
                v.map(Value::Int).ok_or(EvalError::Overflow(pos))
            }
            _ => {
                let (Some(a), Some(b)) = (num(l), num(r)) else {
                    return Err(internal(format!("arithmetic on {l} and {r}")));
                };
                real(
                    match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        _ => a * b,
                    },
                    pos,
                )
            }
        },
        _ => unreachable!(),
    }
}

fn builtin(op: Builtin, src: &Value, args: &[Value], ty: &Type, pos: Pos) -> Res {
    let undef = || Ok(Value::Undef(ty.clone()));
    let to_int = |r: f64| {
        if r.is_finite() && r >= i64::MIN as f64 && r < i64::MAX as f64 {
            Ok(Value::Int(r as i64))
        } else {
            Err(EvalError::Overflow(pos))
        }
    };
    match (op, src) {
        (Builtin::Abs, Value::Int(i)) => i
            .checked_abs()
            .map(Value::Int)
            .ok_or(EvalError::Overflow(pos)),
        (Builtin::Abs, Value::Real(r)) => Ok(Value::Real(r.abs())),
        (Builtin::Floor, Value::Int(i)) | (Builtin::Round, Value::Int(i)) => Ok(Value::Int(*i)),
        (Builtin::Floor, Value::Real(r)) => to_int(r.floor()),
        (Builtin::Round, Value::Real(r)) => to_int((r + 0.5).floor()),
        (Builtin::Max | Builtin::Min, _) => {
            let other = &args[0];
            if let (Value::Int(a), Value::Int(b)) = (src, other) {
                return Ok(Value::Int(if op == Builtin::Max {
                    *a.max(b)
                } else {
                    *a.min(b)
                }));
            }
            let (a, b) = (num(src).unwrap_or(0.0), num(other).unwrap_or(0.0));
            Ok(Value::Real(if op == Builtin::Max {
                a.max(b)
            } else {
                a.min(b)
            }))
        }
        (Builtin::Div | Builtin::Mod, Value::Int(a)) => {
            let Value::Int(b) = args[0] else {
                return Err(internal("div/mod on non-integers"));
            };
            if b == 0 {
                return undef();
            }
            let v = if op == Builtin::Div {
                a.checked_div(b)
            } else {
                a.checked_rem(b)
            };
            v.map(Value::Int).ok_or(EvalError::Overflow(pos))
        }
        (Builtin::Size, Value::Str(s)) => Ok(Value::Int(s.chars().count() as i64)),
        (Builtin::Concat, Value::Str(s)) => match &args[0] {
            Value::Str(t) => Ok(Value::Str(format!("{s}{t}"))),
            v => Err(internal(format!("concat with {v}"))),
        },
        (Builtin::ToUpper, Value::Str(s)) => Ok(Value::Str(s.to_uppercase())),
        (Builtin::ToLower, Value::Str(s)) => Ok(Value::Str(s.to_lowercase())),
        (Builtin::Substring, Value::Str(s)) => {
            let (Value::Int(lo), Value::Int(hi)) = (&args[0], &args[1]) else {
                return Err(internal("substring bounds are not integers"));
            };
            let chars: Vec<char> = s.chars().collect();
            if *lo < 1 || hi < lo || *hi as usize > chars.len() {
                return undef();
            }
            Ok(Value::Str(
                chars[*lo as usize - 1..*hi as usize].iter().collect(),
            ))
        }
        _ => Err(internal(format!("{op:?} applied to {src}"))),
    }
}

/// Applies a non-iterating collection operation. `ty` is the static result
/// type; `source` and `args` are defined.
pub fn eval_collection_op(op: CollOp, source: &Value, args: &[Value], ty: &Type, pos: Pos) -> Res {
    let xs = items(source)?;
    let kind = runtime_kind(source);
    let contains = |v: &Value| xs.iter().any(|x| strong_equal(x, v));
    Ok(match op {
        CollOp::Size => Value::Int(xs.len() as i64),
        CollOp::IsEmpty => Value::Bool(xs.is_empty()),
        CollOp::NotEmpty => Value::Bool(!xs.is_empty()),
        CollOp::Includes => Value::Bool(contains(&args[0])),
        CollOp::Excludes => Value::Bool(!contains(&args[0])),
        CollOp::Including => {
            let mut v = xs.to_vec();
            v.push(args[0].clone());
            Value::coll(kind, v)
        }
        CollOp::Excluding => Value::coll(
            kind,
            xs.iter()
                .filter(|x| !strong_equal(x, &args[0]))
                .cloned()
                .collect(),
        ),
        CollOp::Sum => {
            if *ty == Type::Integer {
                let mut acc: i64 = 0;
                for x in xs {
                    let Value::Int(i) = x else {
                        return Err(internal(format!("integer sum over {x}")));
                    };
                    acc = acc.checked_add(*i).ok_or(EvalError::Overflow(pos))?;
                }
                Value::Int(acc)
            } else {
                let mut acc = 0.0;
                for x in xs {
                    acc += num(x).ok_or_else(|| internal(format!("sum over {x}")))?;
                }
                real(acc, pos)?
            }
        }
        CollOp::Union => {
            let ys = items(&args[0])?;
            let k2 = runtime_kind(&args[0]);
            let mut v = xs.to_vec();
            v.extend(ys.iter().cloned());
            let k = match (kind, k2) {
                (CollectionKind::Set, CollectionKind::Set) => CollectionKind::Set,
                (CollectionKind::Sequence, CollectionKind::Sequence) => CollectionKind::Sequence,
                _ => CollectionKind::Bag,
            };
            Value::coll(k, v)
        }
        CollOp::Intersection => {
            let ys = items(&args[0])?;
            let k2 = runtime_kind(&args[0]);
            if kind == CollectionKind::Set || k2 == CollectionKind::Set {
                Value::set(
                    xs.iter()
                        .filter(|x| ys.iter().any(|y| strong_equal(x, y)))
                        .cloned(),
                )
            } else {
                let mut rest = ys.to_vec();
                let mut out = Vec::new();
                for x in xs {
                    if let Some(i) = rest.iter().position(|y| strong_equal(x, y)) {
                        rest.remove(i);
                        out.push(x.clone());
                    }
                }
                Value::bag(out)
            }
        }
        CollOp::AsSet => Value::set(xs.iter().cloned()),
        CollOp::AsBag => Value::bag(xs.iter().cloned()),
        CollOp::AsSequence => Value::seq(xs.iter().cloned()),
    })
}

fn iterate(
    op: IterOp,
    src: &Value,
    vars: &[String],
    body: &TExpr,
    ty: &Type,
    env: &mut Env,
    cx: &EvalCtx,
) -> Res {
    let xs = items(src)?;
    let undef = || Ok(Value::Undef(ty.clone()));
    match op {
        IterOp::Exists | IterOp::ForAll => {
            let mut acc = Bool3::from(op == IterOp::ForAll);
            let n = vars.len();
            let mut idx = vec![0usize; n];
            if xs.is_empty() {
                return Ok(acc.into());
            }
            loop {
                for (v, &i) in vars.iter().zip(&idx) {
                    env.bind(v.clone(), xs[i].clone());
                }
                let b = ev(body, env, cx);
                env.pop(n);
                let b = bool3(&b?)?;
                acc = if op == IterOp::Exists {
                    acc.or(b)
                } else {
                    acc.and(b)
                };
                let mut k = n;
                loop {
                    if k == 0 {
                        return Ok(acc.into());
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < xs.len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        _ => {
            let var = &vars[0];
            let mut results = Vec::with_capacity(xs.len());
            for x in xs {
                env.bind(var.clone(), x.clone());
                let r = ev(body, env, cx);
                env.pop(1);
                let r = r?;
                if r.is_undef() {
                    return undef();
                }
                results.push(r);
            }
            match op {
                IterOp::Select | IterOp::Reject => {
                    let keep = op == IterOp::Select;
                    let mut out = Vec::new();
                    for (x, r) in xs.iter().zip(&results) {
                        if matches!(r, Value::Bool(b) if *b == keep) {
                            out.push(x.clone());
                        }
                    }
                    Ok(Value::coll(runtime_kind(src), out))
                }
                IterOp::Collect => {
                    let mut out = Vec::new();
                    for r in results {
                        match r {
                            Value::Coll(_, inner) => out.extend(inner),
                            v => out.push(v),
                        }
                    }
                    let kind = ty.collection_kind().unwrap_or(CollectionKind::Bag);
                    Ok(Value::coll(kind, out))
                }
                IterOp::IsUnique => {
                    for i in 0..xs.len() {
                        for j in i + 1..xs.len() {
                            if !strong_equal(&xs[i], &xs[j])
                                && strong_equal(&results[i], &results[j])
                            {
                                return Ok(Value::Bool(false));
                            }
                        }
                    }
                    Ok(Value::Bool(true))
                }
                _ => unreachable!(),
            }
        }
    }
}
