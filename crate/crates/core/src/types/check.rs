use crate::diag::{Diagnostic, Diagnostics, Pos};
use crate::eval::Value;
use crate::model::{ClassModel, Feature, RoleRef};
use crate::syntax::*;

use super::typed::*;
use super::{conforms_to, least_common_supertype, CollectionKind, LcsError, Type};

type R = Result<TExpr, ()>;

#[derive(Debug, Clone)]
enum Scope {
    Var(String, Type),
    /// Features of this variable are reachable by bare name.
    Implicit(String, Type),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Receiver {
    Object,
    Joint,
    Event,
    None,
}

struct Cx<'m> {
    model: &'m ClassModel,
    diags: Vec<Diagnostic>,
    scopes: Vec<Scope>,
    post: bool,
    receiver: Receiver,
    has_result: bool,
    fresh: usize,
}

/// Variables in scope for a free-standing expression.
#[derive(Debug, Clone, Default)]
pub struct ExprScope {
    pub self_type: Option<Type>,
    pub vars: Vec<(String, Type)>,
    /// Allows `@pre` and `oclIsNew`.
    pub post: bool,
}

impl<'m> Cx<'m> {
    fn new(model: &'m ClassModel) -> Self {
        Cx {
            model,
            diags: Vec::new(),
            scopes: Vec::new(),
            post: false,
            receiver: Receiver::None,
            has_result: false,
            fresh: 0,
        }
    }

    fn err<T>(&mut self, pos: Pos, msg: impl Into<String>) -> Result<T, ()> {
        self.diags.push(Diagnostic::error(pos, msg));
        Err(())
    }

    fn bind_self(&mut self, ty: Type) {
        self.receiver = Receiver::Object;
        self.scopes.push(Scope::Var("self".into(), ty.clone()));
        self.scopes.push(Scope::Implicit("self".into(), ty));
    }

    fn fresh_var(&mut self) -> String {
        self.fresh += 1;
        format!("${}", self.fresh)
    }

    fn resolve_type(&mut self, t: &TypeExpr) -> Result<Type, ()> {
        match t {
            TypeExpr::Named(path, pos) => {
                if path.len() == 1 {
                    if let Some(b) = Type::basic_from_name(&path[0]) {
                        return Ok(b);
                    }
                }
                match self.model.resolve_class(&path.join("::")) {
                    Ok(c) => Ok(Type::Class(c)),
                    Err(m) => self.err(*pos, m),
                }
            }
            TypeExpr::Collection(k, e, _) => {
                Ok(Type::Collection(*k, Box::new(self.resolve_type(e)?)))
            }
        }
    }

    fn var(&self, name: &str) -> Option<Type> {
        self.scopes.iter().rev().find_map(|s| match s {
            Scope::Var(n, t) if n == name => Some(t.clone()),
            _ => None,
        })
    }

    fn is_value_name(&self, name: &str) -> bool {
        self.scopes.iter().any(|s| match s {
            Scope::Var(n, _) => n == name,
            Scope::Implicit(_, Type::Class(c)) => {
                matches!(self.model.lookup_feature(c, name), Ok(Some(_)) | Err(_))
            }
            Scope::Implicit(..) => false,
        })
    }

    /// A bare name or pathname used as a type, e.g. the source of
    /// `allInstances`.
    fn type_name(&self, e: &Expr) -> Option<Result<Type, String>> {
        let path = match &e.kind {
            ExprKind::Name(n) if !self.is_value_name(n) => vec![n.clone()],
            ExprKind::Path(p) => p.clone(),
            _ => return None,
        };
        if path.len() == 1 {
            if let Some(b) = Type::basic_from_name(&path[0]) {
                return Some(Ok(b));
            }
        }
        let joined = path.join("::");
        match self.model.resolve_class(&joined) {
            Ok(c) => Some(Ok(Type::Class(c))),
            Err(m) if path.len() > 1 => Some(Err(m)),
            Err(_) => None,
        }
    }

    fn type_arg(&mut self, e: &Expr) -> Result<Type, ()> {
        let te = match expr_to_type(e) {
            Some(t) => t,
            None => return self.err(e.pos, "expected a type name"),
        };
        self.resolve_type(&te)
    }

    // ---- expressions ----

    fn expr(&mut self, e: &Expr) -> R {
        let pos = e.pos;
        match &e.kind {
            ExprKind::Lit(l) => Ok(match l {
                Literal::Bool(b) => TExpr::new(TKind::Lit(Value::Bool(*b)), Type::Boolean, pos),
                Literal::Int(i) => TExpr::new(TKind::Lit(Value::Int(*i)), Type::Integer, pos),
                Literal::Real(r) => TExpr::new(TKind::Lit(Value::Real(*r)), Type::Real, pos),
                Literal::Str(s) => TExpr::new(TKind::Lit(Value::Str(s.clone())), Type::String, pos),
            }),
            ExprKind::SelfRef => match self.var("self") {
                Some(t) => Ok(TExpr::new(TKind::Var("self".into()), t, pos)),
                None => match self.receiver {
                    Receiver::Joint => self.err(
                        pos,
                        "'self' is ambiguous in a joint action; refer to a named receiver instead",
                    ),
                    Receiver::Event => self.err(pos, "'self' has nothing to refer to in an event"),
                    _ => self.err(pos, "'self' is not available here"),
                },
            },
            ExprKind::Name(n) => self.name(n, pos),
            ExprKind::Path(p) => self.err(
                pos,
                format!("'{}' names a classifier, not a value", p.join("::")),
            ),
            ExprKind::CollLit(kind, items) => {
                if *kind == CollectionKind::Collection {
                    return self.err(pos, "Collection is abstract; use Set, Bag or Sequence");
                }
                let items = items
                    .iter()
                    .map(|i| self.expr(i))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut elem: Option<Type> = None;
                for i in &items {
                    self.no_state(i)?;
                    elem = Some(match elem {
                        None => i.ty.clone(),
                        Some(t) => match least_common_supertype(&t, &i.ty, self.model) {
                            Ok(t) => t,
                            Err(e) => return self.err(i.pos, format!("collection elements: {e}")),
                        },
                    });
                }
                let ty = Type::Collection(*kind, Box::new(elem.unwrap_or(Type::OclAny)));
                Ok(TExpr::new(TKind::CollLit(*kind, items), ty, pos))
            }
            ExprKind::Nav { source, name } => {
                if let Some(t) = self.type_name(source) {
                    let t = match t {
                        Ok(t) => t,
                        Err(m) => return self.err(source.pos, m),
                    };
                    return self.type_feature(t, name, pos);
                }
                let src = self.expr(source)?;
                self.property(src, name, pos)
            }
            ExprKind::Call { source, name, args } => match source {
                Some(source) => {
                    if let Some(t) = self.type_name(source) {
                        let t = match t {
                            Ok(t) => t,
                            Err(m) => return self.err(source.pos, m),
                        };
                        if name == "allInstances" && args.is_empty() {
                            return self.type_feature(t, name, pos);
                        }
                        return self.err(
                            pos,
                            format!("'{t}' is a type; '{name}' cannot be called on it"),
                        );
                    }
                    let src = self.expr(source)?;
                    self.call(src, name, args, pos)
                }
                None => self.implicit_call(name, args, pos),
            },
            ExprKind::Arrow {
                source,
                op,
                iters,
                args,
            } => {
                let src = self.expr(source)?;
                let src = match &src.ty {
                    Type::Collection(..) => src,
                    Type::OclState => return self.err(pos, "'->' cannot be applied to a state"),
                    t => {
                        let ty = Type::set(t.clone());
                        TExpr::new(TKind::ToSet(Box::new(src)), ty, pos)
                    }
                };
                self.coll_op(src, op, iters, args, pos)
            }
            ExprKind::AtPre(inner) => {
                if !self.post {
                    return self.err(pos, "'@pre' may only be used in a postcondition");
                }
                let t = self.expr(inner)?;
                let ty = t.ty.clone();
                Ok(TExpr::new(TKind::AtPre(Box::new(t)), ty, pos))
            }
            ExprKind::Not(inner) => {
                let t = self.expr(inner)?;
                self.expect_bool(&t, "'not'")?;
                Ok(TExpr::new(TKind::Not(Box::new(t)), Type::Boolean, pos))
            }
            ExprKind::Neg(inner) => {
                let t = self.expr(inner)?;
                if !t.ty.is_numeric() {
                    return self.err(pos, format!("unary '-' expects a number, found {}", t.ty));
                }
                let ty = t.ty.clone();
                Ok(TExpr::new(TKind::Neg(Box::new(t)), ty, pos))
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.expr(lhs);
                let r = self.expr(rhs);
                let (l, r) = (l?, r?);
                self.binary(*op, l, r, pos)
            }
            ExprKind::If { cond, then, els } => {
                let c = self.expr(cond);
                let t = self.expr(then);
                let f = self.expr(els);
                let (c, t, f) = (c?, t?, f?);
                self.expect_bool(&c, "an if condition")?;
                self.no_state(&t)?;
                let ty = match least_common_supertype(&t.ty, &f.ty, self.model) {
                    Ok(ty) => ty,
                    Err(LcsError::Ambiguous(c)) => {
                        return self.err(
                            pos,
                            format!(
                                "the branches of this if-expression have no least common type; candidates are {}; use oclAsType to choose one",
                                c.iter().map(Type::to_string).collect::<Vec<_>>().join(", ")
                            ),
                        )
                    }
                    Err(e) => return self.err(pos, format!("if-expression branches: {e}")),
                };
                Ok(TExpr::new(
                    TKind::If {
                        cond: Box::new(c),
                        then: Box::new(t),
                        els: Box::new(f),
                    },
                    ty,
                    pos,
                ))
            }
            ExprKind::Let {
                name,
                ty,
                value,
                body,
            } => {
                let v = self.expr(value)?;
                self.no_state(&v)?;
                let vty = match ty {
                    Some(t) => {
                        let declared = self.resolve_type(t)?;
                        if !conforms_to(&v.ty, &declared, self.model) {
                            return self.err(
                                value.pos,
                                format!(
                                    "let '{name}' is declared {declared} but its value has type {}",
                                    v.ty
                                ),
                            );
                        }
                        declared
                    }
                    None => v.ty.clone(),
                };
                self.scopes.push(Scope::Var(name.clone(), vty));
                let b = self.expr(body);
                self.scopes.pop();
                let b = b?;
                let ty = b.ty.clone();
                Ok(TExpr::new(
                    TKind::Let {
                        name: name.clone(),
                        value: Box::new(v),
                        body: Box::new(b),
                    },
                    ty,
                    pos,
                ))
            }
        }
    }

    fn no_state(&mut self, e: &TExpr) -> Result<(), ()> {
        if e.ty == Type::OclState {
            return self.err(e.pos, "states are not values");
        }
        Ok(())
    }

    fn expect_bool(&mut self, e: &TExpr, what: &str) -> Result<(), ()> {
        if e.ty != Type::Boolean {
            return self.err(e.pos, format!("{what} expects Boolean, found {}", e.ty));
        }
        Ok(())
    }

    fn name(&mut self, n: &str, pos: Pos) -> R {
        for i in (0..self.scopes.len()).rev() {
            match self.scopes[i].clone() {
                Scope::Var(v, t) if v == n => return Ok(TExpr::new(TKind::Var(v), t, pos)),
                Scope::Implicit(v, Type::Class(c)) => match self.model.lookup_feature(&c, n) {
                    Ok(Some(Feature::Operation { .. })) => {
                        return self.err(pos, format!("'{n}' is an operation; call it as {n}()"))
                    }
                    Ok(Some(_)) | Err(_) => {
                        let src = TExpr::new(TKind::Var(v), Type::Class(c), pos);
                        return self.property(src, n, pos);
                    }
                    Ok(None) if n == "oclIsNew" || n == "isNew" => {
                        let src = TExpr::new(TKind::Var(v), Type::Class(c), pos);
                        return self.property(src, n, pos);
                    }
                    Ok(None) => {}
                },
                _ => {}
            }
        }
        if n == "result" {
            return self.err(
                pos,
                "'result' is only available in postconditions of operations with a return type",
            );
        }
        if self
            .type_name(&Expr::new(ExprKind::Name(n.into()), pos))
            .is_some()
        {
            return self.err(pos, format!("'{n}' names a type, not a value"));
        }
        self.err(pos, format!("unknown name '{n}'"))
    }

    fn type_feature(&mut self, t: Type, name: &str, pos: Pos) -> R {
        match (&t, name) {
            (Type::Class(c), "allInstances") => Ok(TExpr::new(
                TKind::AllInstances(c.clone()),
                Type::set(t.clone()),
                pos,
            )),
            (_, "allInstances") => self.err(
                pos,
                format!("allInstances is not available on {t}: its extent is infinite"),
            ),
            (Type::Class(c), _) => match self.model.lookup_feature(c, name) {
                Ok(Some(Feature::Attribute { owner, decl })) if decl.is_static => Ok(TExpr::new(
                    TKind::StaticAttr {
                        class: owner.qualified_name(),
                        attr: decl.name.clone(),
                    },
                    decl.ty.clone(),
                    pos,
                )),
                _ => self.err(
                    pos,
                    format!("'{name}' is not a class-scoped attribute of {c}"),
                ),
            },
            _ => self.err(pos, format!("type {t} has no feature '{name}'")),
        }
    }

    fn collect(&mut self, src: TExpr, var: String, body: TExpr, pos: Pos) -> TExpr {
        let kind = if src.ty.collection_kind() == Some(CollectionKind::Sequence) {
            CollectionKind::Sequence
        } else {
            CollectionKind::Bag
        };
        let elem = match &body.ty {
            Type::Collection(_, e) => (**e).clone(),
            t => t.clone(),
        };
        TExpr::new(
            TKind::Iterate {
                op: IterOp::Collect,
                source: Box::new(src),
                vars: vec![var],
                body: Box::new(body),
            },
            Type::Collection(kind, Box::new(elem)),
            pos,
        )
    }

    /// `src.name` without parentheses.
    fn property(&mut self, src: TExpr, name: &str, pos: Pos) -> R {
        if let Type::Collection(_, elem) = &src.ty {
            let var = self.fresh_var();
            let item = TExpr::new(TKind::Var(var.clone()), (**elem).clone(), pos);
            let body = self.property(item, name, pos)?;
            return Ok(self.collect(src, var, body, pos));
        }
        if name == "oclIsNew" || name == "isNew" {
            return self.is_new(src, pos);
        }
        match &src.ty {
            Type::Class(c) => match self.model.lookup_feature(c, name) {
                Ok(Some(Feature::Attribute { owner, decl })) => {
                    if decl.is_static {
                        return Ok(TExpr::new(
                            TKind::StaticAttr {
                                class: owner.qualified_name(),
                                attr: decl.name.clone(),
                            },
                            decl.ty.clone(),
                            pos,
                        ));
                    }
                    let ty = decl.ty.clone();
                    Ok(TExpr::new(
                        TKind::Attr {
                            source: Box::new(src),
                            attr: decl.name.clone(),
                        },
                        ty,
                        pos,
                    ))
                }
                Ok(Some(Feature::Role(role))) => {
                    let ty = self.model.role_type(role);
                    Ok(TExpr::new(
                        TKind::Role {
                            source: Box::new(src),
                            role,
                        },
                        ty,
                        pos,
                    ))
                }
                Ok(Some(Feature::Operation { .. })) => {
                    self.err(pos, format!("'{name}' is an operation; call it as {name}()"))
                }
                Ok(None) => self.err(pos, format!("class {c} has no feature '{name}'")),
                Err(owners) => self.err(
                    pos,
                    format!(
                        "feature '{name}' is inherited ambiguously from {}; use oclAsType to choose one",
                        owners.join(", ")
                    ),
                ),
            },
            t => self.err(pos, format!("type {t} has no property '{name}'")),
        }
    }

    fn is_new(&mut self, src: TExpr, pos: Pos) -> R {
        if !self.post {
            return self.err(pos, "oclIsNew may only be used in a postcondition");
        }
        if src.ty.class_name().is_none() {
            return self.err(pos, format!("oclIsNew applies to objects, not {}", src.ty));
        }
        Ok(TExpr::new(TKind::IsNew(Box::new(src)), Type::Boolean, pos))
    }

    fn implicit_call(&mut self, name: &str, args: &[Expr], pos: Pos) -> R {
        for i in (0..self.scopes.len()).rev() {
            if let Scope::Implicit(v, t) = self.scopes[i].clone() {
                let applies = is_object_builtin(name)
                    || match &t {
                        Type::Class(c) => matches!(
                            self.model.lookup_feature(c, name),
                            Ok(Some(Feature::Operation { .. })) | Err(_)
                        ),
                        _ => false,
                    };
                if applies {
                    let src = TExpr::new(TKind::Var(v), t, pos);
                    return self.call(src, name, args, pos);
                }
            }
        }
        self.err(pos, format!("unknown operation '{name}'"))
    }

    fn args(&mut self, args: &[Expr]) -> Result<Vec<TExpr>, ()> {
        let out: Vec<R> = args.iter().map(|a| self.expr(a)).collect();
        out.into_iter().collect()
    }

    fn call(&mut self, src: TExpr, name: &str, args: &[Expr], pos: Pos) -> R {
        if let Type::Collection(_, elem) = &src.ty {
            if !matches!(name, "oclIsTypeOf" | "oclIsKindOf" | "oclAsType") {
                let var = self.fresh_var();
                let item = TExpr::new(TKind::Var(var.clone()), (**elem).clone(), pos);
                let body = self.call(item, name, args, pos)?;
                return Ok(self.collect(src, var, body, pos));
            }
        }
        match name {
            "oclIsTypeOf" | "oclIsKindOf" | "oclAsType" => {
                let [arg] = args else {
                    return self.err(pos, format!("{name} takes exactly one type argument"));
                };
                let t = self.type_arg(arg)?;
                if src.ty.is_collection() || t.is_collection() {
                    return self.err(
                        pos,
                        format!("{name} applies to single values, not collections"),
                    );
                }
                self.no_state(&src)?;
                let b = Box::new(src);
                return Ok(match name {
                    "oclIsTypeOf" => TExpr::new(TKind::IsTypeOf(b, t), Type::Boolean, pos),
                    "oclIsKindOf" => TExpr::new(TKind::IsKindOf(b, t), Type::Boolean, pos),
                    _ => {
                        if !conforms_to(&t, &b.ty, self.model)
                            && !conforms_to(&b.ty, &t, self.model)
                        {
                            return self
                                .err(pos, format!("cannot cast {} to unrelated type {t}", b.ty));
                        }
                        TExpr::new(TKind::AsType(b, t.clone()), t, pos)
                    }
                });
            }
            "oclIsNew" | "isNew" => {
                if !args.is_empty() {
                    return self.err(pos, format!("{name} takes no arguments"));
                }
                return self.is_new(src, pos);
            }
            "oclInState" => {
                let [arg] = args else {
                    return self.err(pos, "oclInState takes exactly one state name");
                };
                let path = match &arg.kind {
                    ExprKind::Name(n) => vec![n.clone()],
                    ExprKind::Path(p) => p.clone(),
                    _ => {
                        return self.err(
                            arg.pos,
                            "oclInState expects a state name such as Active::Valid",
                        )
                    }
                };
                let Some(c) = src.ty.class_name().map(str::to_string) else {
                    return self.err(
                        pos,
                        format!("oclInState applies to objects, not {}", src.ty),
                    );
                };
                let Some(sm) = self.model.state_machine_of(&c) else {
                    return self.err(pos, format!("class {c} has no state machine"));
                };
                return match sm.resolve(&path) {
                    Ok(full) => Ok(TExpr::new(
                        TKind::InState(Box::new(src), full),
                        Type::Boolean,
                        pos,
                    )),
                    Err(m) => self.err(arg.pos, m),
                };
            }
            _ => {}
        }
        let args = self.args(args)?;
        match src.ty.clone() {
            Type::Class(c) => match self.model.lookup_feature(&c, name) {
                Ok(Some(Feature::Operation { owner, decl })) => {
                    if !(decl.query && decl.body.is_some()) {
                        return self.err(
                            pos,
                            format!(
                                "operation {}::{name} has no query body and cannot be evaluated",
                                owner.qualified_name()
                            ),
                        );
                    }
                    let owner = owner.qualified_name();
                    let params: Vec<Type> = decl.params.iter().map(|(_, t)| t.clone()).collect();
                    let returns = decl.returns.clone().unwrap_or(Type::OclAny);
                    self.check_args(&format!("{owner}::{name}"), &params, &args, pos)?;
                    Ok(TExpr::new(
                        TKind::Query {
                            source: Box::new(src),
                            owner,
                            op: name.to_string(),
                            args,
                        },
                        returns,
                        pos,
                    ))
                }
                Ok(Some(_)) => self.err(pos, format!("'{name}' is not an operation of {c}")),
                Ok(None) => self.err(pos, format!("class {c} has no operation '{name}'")),
                Err(owners) => self.err(
                    pos,
                    format!(
                        "operation '{name}' is inherited ambiguously from {}; use oclAsType to choose one",
                        owners.join(", ")
                    ),
                ),
            },
            t => self.builtin(src, &t, name, args, pos),
        }
    }

    fn check_args(
        &mut self,
        what: &str,
        params: &[Type],
        args: &[TExpr],
        pos: Pos,
    ) -> Result<(), ()> {
        if params.len() != args.len() {
            return self.err(
                pos,
                format!(
                    "{what} expects {} argument(s), found {}",
                    params.len(),
                    args.len()
                ),
            );
        }
        for (p, a) in params.iter().zip(args) {
            if !conforms_to(&a.ty, p, self.model) {
                return self.err(
                    a.pos,
                    format!("{what}: argument of type {} does not conform to {p}", a.ty),
                );
            }
        }
        Ok(())
    }

    fn builtin(&mut self, src: TExpr, t: &Type, name: &str, args: Vec<TExpr>, pos: Pos) -> R {
        use Builtin as B;
        let (op, params, ret): (B, Vec<Type>, Type) = match (t, name) {
            (Type::Integer | Type::Real, "abs") => (B::Abs, vec![], t.clone()),
            (Type::Integer | Type::Real, "floor") => (B::Floor, vec![], Type::Integer),
            (Type::Integer | Type::Real, "round") => (B::Round, vec![], Type::Integer),
            (Type::Integer | Type::Real, "max" | "min") => {
                let other = args.first().map(|a| a.ty.clone()).unwrap_or(Type::Real);
                let ret = if *t == Type::Integer && other == Type::Integer {
                    Type::Integer
                } else {
                    Type::Real
                };
                let op = if name == "max" { B::Max } else { B::Min };
                (op, vec![Type::Real], ret)
            }
            (Type::Integer, "div") => (B::Div, vec![Type::Integer], Type::Integer),
            (Type::Integer, "mod") => (B::Mod, vec![Type::Integer], Type::Integer),
            (Type::String, "size") => (B::Size, vec![], Type::Integer),
            (Type::String, "concat") => (B::Concat, vec![Type::String], Type::String),
            (Type::String, "toUpper") => (B::ToUpper, vec![], Type::String),
            (Type::String, "toLower") => (B::ToLower, vec![], Type::String),
            (Type::String, "substring") => (
                B::Substring,
                vec![Type::Integer, Type::Integer],
                Type::String,
            ),
            _ => return self.err(pos, format!("type {t} has no operation '{name}'")),
        };
        self.check_args(name, &params, &args, pos)?;
        Ok(TExpr::new(
            TKind::Builtin {
                op,
                source: Box::new(src),
                args,
            },
            ret,
            pos,
        ))
    }

    fn coll_op(&mut self, src: TExpr, op: &str, iters: &[IterVar], args: &[Expr], pos: Pos) -> R {
        let Type::Collection(kind, elem) = src.ty.clone() else {
            unreachable!()
        };
        let iter_op = match op {
            "exists" => Some(IterOp::Exists),
            "forAll" | "forall" => Some(IterOp::ForAll),
            "select" => Some(IterOp::Select),
            "reject" => Some(IterOp::Reject),
            "collect" => Some(IterOp::Collect),
            "isUnique" => Some(IterOp::IsUnique),
            _ => None,
        };
        if let Some(iop) = iter_op {
            return self.iterate(src, iop, kind, *elem, iters, args, pos);
        }
        if !iters.is_empty() {
            return self.err(pos, format!("'{op}' does not take an iterator"));
        }
        let cop = match op {
            "size" => CollOp::Size,
            "isEmpty" => CollOp::IsEmpty,
            "notEmpty" => CollOp::NotEmpty,
            "includes" => CollOp::Includes,
            "excludes" => CollOp::Excludes,
            "including" => CollOp::Including,
            "excluding" => CollOp::Excluding,
            "sum" => CollOp::Sum,
            "union" => CollOp::Union,
            "intersection" => CollOp::Intersection,
            "asSet" => CollOp::AsSet,
            "asBag" => CollOp::AsBag,
            "asSequence" => CollOp::AsSequence,
            _ => return self.err(pos, format!("unknown collection operation '{op}'")),
        };
        let args = self.args(args)?;
        let want = match cop {
            CollOp::Includes
            | CollOp::Excludes
            | CollOp::Including
            | CollOp::Excluding
            | CollOp::Union
            | CollOp::Intersection => 1,
            _ => 0,
        };
        if args.len() != want {
            return self.err(
                pos,
                format!("'{op}' expects {want} argument(s), found {}", args.len()),
            );
        }
        let ty = match cop {
            CollOp::Size => Type::Integer,
            CollOp::IsEmpty | CollOp::NotEmpty => Type::Boolean,
            CollOp::Includes | CollOp::Excludes | CollOp::Including | CollOp::Excluding => {
                let a = &args[0];
                self.no_state(a)?;
                let joined = match least_common_supertype(&elem, &a.ty, self.model) {
                    Ok(t) => t,
                    Err(LcsError::Ambiguous(_)) => Type::OclAny,
                    Err(e) => return self.err(a.pos, format!("'{op}': {e}")),
                };
                match cop {
                    CollOp::Includes | CollOp::Excludes => Type::Boolean,
                    CollOp::Including => Type::Collection(kind, Box::new(joined)),
                    _ => src.ty.clone(),
                }
            }
            CollOp::Sum => {
                if !elem.is_numeric() {
                    return self.err(pos, format!("'sum' needs numeric elements, found {elem}"));
                }
                (*elem).clone()
            }
            CollOp::Union | CollOp::Intersection => {
                let a = &args[0];
                let Type::Collection(ka, ea) = &a.ty else {
                    return self.err(
                        a.pos,
                        format!("'{op}' expects a collection, found {}", a.ty),
                    );
                };
                use CollectionKind::*;
                let k = match (cop, kind, *ka) {
                    (_, Sequence, Sequence) if cop == CollOp::Union => Sequence,
                    (_, Sequence, _) | (_, _, Sequence) => {
                        return self.err(
                            pos,
                            format!("'{op}' cannot mix sequences with other collections"),
                        )
                    }
                    (CollOp::Union, Set, Set) => Set,
                    (CollOp::Union, _, _) => Bag,
                    (_, Set, _) | (_, _, Set) => Set,
                    _ => Bag,
                };
                let e = match least_common_supertype(&elem, ea, self.model) {
                    Ok(t) => t,
                    Err(LcsError::Ambiguous(_)) => Type::OclAny,
                    Err(e) => return self.err(a.pos, format!("'{op}': {e}")),
                };
                Type::Collection(k, Box::new(e))
            }
            CollOp::AsSet => Type::set((*elem).clone()),
            CollOp::AsBag => Type::bag((*elem).clone()),
            CollOp::AsSequence => Type::sequence((*elem).clone()),
        };
        Ok(TExpr::new(
            TKind::Coll {
                op: cop,
                source: Box::new(src),
                args,
            },
            ty,
            pos,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn iterate(
        &mut self,
        src: TExpr,
        op: IterOp,
        kind: CollectionKind,
        elem: Type,
        iters: &[IterVar],
        args: &[Expr],
        pos: Pos,
    ) -> R {
        let [body] = args else {
            return self.err(
                pos,
                "an iterator operation takes exactly one body expression",
            );
        };
        if iters.len() > 1 && !matches!(op, IterOp::Exists | IterOp::ForAll) {
            return self.err(pos, "only exists and forAll accept several iterators");
        }
        let mark = self.scopes.len();
        let mut vars = Vec::new();
        if iters.is_empty() {
            let v = self.fresh_var();
            self.scopes.push(Scope::Implicit(v.clone(), elem.clone()));
            vars.push(v);
        } else {
            for it in iters {
                let ty = match &it.ty {
                    Some(te) => {
                        let declared = match self.resolve_type(te) {
                            Ok(t) => t,
                            Err(()) => {
                                self.scopes.truncate(mark);
                                return Err(());
                            }
                        };
                        if !conforms_to(&elem, &declared, self.model) {
                            self.scopes.truncate(mark);
                            return self.err(
                                te.pos(),
                                format!("iterator '{}' is declared {declared} but the elements are {elem}", it.name),
                            );
                        }
                        declared
                    }
                    None => elem.clone(),
                };
                self.scopes.push(Scope::Var(it.name.clone(), ty));
                vars.push(it.name.clone());
            }
        }
        let b = self.expr(body);
        self.scopes.truncate(mark);
        let b = b?;
        let ty = match op {
            IterOp::Exists | IterOp::ForAll | IterOp::Select | IterOp::Reject => {
                self.expect_bool(&b, "an iterator body")?;
                match op {
                    IterOp::Select | IterOp::Reject => src.ty.clone(),
                    _ => Type::Boolean,
                }
            }
            IterOp::IsUnique => {
                self.no_state(&b)?;
                Type::Boolean
            }
            IterOp::Collect => {
                self.no_state(&b)?;
                let _ = kind;
                return Ok(self.collect(src, vars.remove(0), b, pos));
            }
        };
        Ok(TExpr::new(
            TKind::Iterate {
                op,
                source: Box::new(src),
                vars,
                body: Box::new(b),
            },
            ty,
            pos,
        ))
    }

    fn binary(&mut self, op: BinOp, l: TExpr, r: TExpr, pos: Pos) -> R {
        let sym = op.symbol();
        let ty = match op {
            BinOp::And | BinOp::Or | BinOp::Xor | BinOp::Implies => {
                self.expect_bool(&l, &format!("'{sym}'"))?;
                self.expect_bool(&r, &format!("'{sym}'"))?;
                Type::Boolean
            }
            BinOp::Eq | BinOp::WeakEq | BinOp::Neq => {
                self.no_state(&l)?;
                self.no_state(&r)?;
                if let Err(LcsError::NoCommonSupertype(a, b)) =
                    least_common_supertype(&l.ty, &r.ty, self.model)
                {
                    return self.err(
                        pos,
                        format!("cannot compare {a} with {b}: no common supertype"),
                    );
                }
                Type::Boolean
            }
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
                let ok = (l.ty.is_numeric() && r.ty.is_numeric())
                    || (l.ty == Type::String && r.ty == Type::String);
                if !ok {
                    return self.err(
                        pos,
                        format!("'{sym}' cannot compare {} with {}", l.ty, r.ty),
                    );
                }
                Type::Boolean
            }
            BinOp::Add | BinOp::Sub | BinOp::Mul => {
                if !(l.ty.is_numeric() && r.ty.is_numeric()) {
                    return self.err(
                        pos,
                        format!("'{sym}' expects numbers, found {} and {}", l.ty, r.ty),
                    );
                }
                if l.ty == Type::Integer && r.ty == Type::Integer {
                    Type::Integer
                } else {
                    Type::Real
                }
            }
            BinOp::Div => {
                if !(l.ty.is_numeric() && r.ty.is_numeric()) {
                    return self.err(
                        pos,
                        format!("'/' expects numbers, found {} and {}", l.ty, r.ty),
                    );
                }
                Type::Real
            }
        };
        Ok(TExpr::new(
            TKind::Binary {
                op,
                lhs: Box::new(l),
                rhs: Box::new(r),
            },
            ty,
            pos,
        ))
    }

    fn messages(&mut self, items: &[MessageItem]) -> Result<Vec<TMessage>, ()> {
        let mut out = Vec::new();
        let mut failed = false;
        for m in items {
            match self.message(m) {
                Ok(t) => out.push(t),
                Err(()) => failed = true,
            }
        }
        if failed {
            Err(())
        } else {
            Ok(out)
        }
    }

    fn message(&mut self, m: &MessageItem) -> Result<TMessage, ()> {
        match m {
            MessageItem::If {
                cond,
                then,
                els,
                pos,
            } => {
                let c = self.expr(cond)?;
                self.expect_bool(&c, "a message condition")?;
                let then = self.messages(then)?;
                let els = self.messages(els)?;
                Ok(TMessage::If {
                    cond: c,
                    then,
                    els,
                    pos: *pos,
                })
            }
            MessageItem::Send {
                target,
                op,
                args,
                pos,
            } => {
                let target = match target {
                    Some(t) => self.expr(t)?,
                    None => self.expr(&Expr::new(ExprKind::SelfRef, *pos))?,
                };
                let class = match &target.ty {
                    Type::Class(c) => c.clone(),
                    Type::Collection(_, e) if e.class_name().is_some() => {
                        e.class_name().unwrap().to_string()
                    }
                    t => {
                        return self.err(
                            *pos,
                            format!("messages can only be sent to objects, not {t}"),
                        )
                    }
                };
                let args = self.args(args)?;
                let Some((owner, decl)) = self.model.operation_of(&class, op) else {
                    return self.err(*pos, format!("class {class} has no operation '{op}'"));
                };
                let params: Vec<Type> = decl.params.iter().map(|(_, t)| t.clone()).collect();
                let what = format!("{}::{op}", owner.qualified_name());
                self.check_args(&what, &params, &args, *pos)?;
                Ok(TMessage::Send {
                    target,
                    op: op.clone(),
                    args,
                    pos: *pos,
                })
            }
        }
    }
}

fn is_object_builtin(name: &str) -> bool {
    matches!(
        name,
        "oclIsTypeOf" | "oclIsKindOf" | "oclAsType" | "oclInState" | "oclIsNew" | "isNew"
    )
}

fn expr_to_type(e: &Expr) -> Option<TypeExpr> {
    match &e.kind {
        ExprKind::Name(n) => Some(TypeExpr::Named(vec![n.clone()], e.pos)),
        ExprKind::Path(p) => Some(TypeExpr::Named(p.clone(), e.pos)),
        ExprKind::Call {
            source: None,
            name,
            args,
        } if args.len() == 1 => {
            let k = CollectionKind::from_name(name)?;
            Some(TypeExpr::Collection(
                k,
                Box::new(expr_to_type(&args[0])?),
                e.pos,
            ))
        }
        _ => None,
    }
}

// ---- declarations ----

#[derive(Debug, Clone)]
pub struct TypedInvariant {
    pub id: String,
    pub class: String,
    pub self_name: Option<String>,
    pub body: TExpr,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct TypedDerived {
    pub id: String,
    pub class: String,
    pub attr: String,
    pub ty: Type,
    pub mode: RecursionMode,
    pub expr: TExpr,
    pub pos: Pos,
    /// Name given to the context object besides `self`.
    pub self_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstTarget {
    Attribute(String),
    Role(RoleRef),
    /// A constant query without a backing attribute.
    Unchecked,
}

#[derive(Debug, Clone)]
pub struct TypedConstant {
    pub class: String,
    pub name: String,
    pub target: ConstTarget,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub enum TypedReceivers {
    Object(String),
    Joint(Vec<(String, Type)>),
    Event,
}

#[derive(Debug, Clone)]
pub struct TypedOperation {
    pub id: String,
    pub receivers: TypedReceivers,
    /// Name given to the receiver besides `self`.
    pub self_name: Option<String>,
    pub op: String,
    pub params: Vec<(String, Type)>,
    pub returns: Option<Type>,
    pub pre: Option<TExpr>,
    pub post: Option<TExpr>,
    pub called: Option<Vec<TMessage>>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct TypedAction {
    pub id: String,
    pub class: String,
    pub condition: TExpr,
    pub messages: Vec<TMessage>,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum TypedDecl {
    Invariant(TypedInvariant),
    Derived(Vec<TypedDerived>),
    Constant(Vec<TypedConstant>),
    Operation(TypedOperation),
    Action(TypedAction),
}

#[derive(Debug, Clone, Default)]
pub struct TypedFile {
    pub invariants: Vec<TypedInvariant>,
    pub derived: Vec<TypedDerived>,
    pub constants: Vec<TypedConstant>,
    pub operations: Vec<TypedOperation>,
    pub actions: Vec<TypedAction>,
}

impl TypedFile {
    pub fn extend(&mut self, other: TypedFile) {
        self.invariants.extend(other.invariants);
        self.derived.extend(other.derived);
        self.constants.extend(other.constants);
        self.operations.extend(other.operations);
        self.actions.extend(other.actions);
    }

    fn push(&mut self, d: TypedDecl) {
        match d {
            TypedDecl::Invariant(i) => self.invariants.push(i),
            TypedDecl::Derived(d) => self.derived.extend(d),
            TypedDecl::Constant(c) => self.constants.extend(c),
            TypedDecl::Operation(o) => self.operations.push(o),
            TypedDecl::Action(a) => self.actions.push(a),
        }
    }
}

fn context_class(cx: &mut Cx, c: &ClassContext) -> Result<String, ()> {
    match cx.model.resolve_class(&c.class_text()) {
        Ok(q) => Ok(q),
        Err(m) => cx.err(c.pos, m),
    }
}

fn enter_class(cx: &mut Cx, c: &ClassContext) -> Result<String, ()> {
    let class = context_class(cx, c)?;
    cx.bind_self(Type::Class(class.clone()));
    if let Some(n) = &c.self_name {
        cx.scopes
            .push(Scope::Var(n.clone(), Type::Class(class.clone())));
    }
    Ok(class)
}

fn simple_name(q: &str) -> &str {
    q.rsplit("::").next().unwrap_or(q)
}

fn derived_def(
    cx: &mut Cx,
    context: &ClassContext,
    class: &str,
    attr: &str,
    rhs: &Expr,
    mode: RecursionMode,
    pos: Pos,
) -> Result<TypedDerived, ()> {
    let Some(decl) = cx.model.attribute_of(class, attr).cloned() else {
        return cx.err(pos, format!("class {class} has no attribute '{attr}'"));
    };
    if !decl.derived {
        return cx.err(
            pos,
            format!("attribute '{attr}' of {class} is not declared derived"),
        );
    }
    if decl.is_static {
        return cx.err(
            pos,
            format!("class-scoped attribute '{attr}' cannot be derived"),
        );
    }
    let mut e = cx.expr(rhs)?;
    if let (Type::Collection(ka, _), Type::Collection(kr, er)) = (&decl.ty, &e.ty) {
        if ka != kr {
            let (op, ty) = match ka {
                CollectionKind::Set => (CollOp::AsSet, Type::set((**er).clone())),
                CollectionKind::Bag => (CollOp::AsBag, Type::bag((**er).clone())),
                CollectionKind::Sequence if *kr == CollectionKind::Sequence => unreachable!(),
                _ => {
                    return cx.err(
                        pos,
                        format!("'{attr}' is declared {} but defined as {}", decl.ty, e.ty),
                    )
                }
            };
            let p = e.pos;
            e = TExpr::new(
                TKind::Coll {
                    op,
                    source: Box::new(e),
                    args: vec![],
                },
                ty,
                p,
            );
        }
    }
    if !conforms_to(&e.ty, &decl.ty, cx.model) {
        return cx.err(
            pos,
            format!("'{attr}' is declared {} but defined as {}", decl.ty, e.ty),
        );
    }
    Ok(TypedDerived {
        id: format!("{}.{attr}", simple_name(class)),
        class: class.to_string(),
        attr: attr.to_string(),
        ty: decl.ty.clone(),
        mode,
        expr: e,
        pos,
        self_name: context.self_name.clone(),
    })
}

fn check_decl(cx: &mut Cx, decl: &ConstraintDecl) -> Result<TypedDecl, ()> {
    match decl {
        ConstraintDecl::Invariant(inv) => {
            let class = enter_class(cx, &inv.context)?;
            if let ExprKind::Binary {
                op: BinOp::Eq,
                lhs,
                rhs,
            } = &inv.body.kind
            {
                if let ExprKind::Name(attr) = &lhs.kind {
                    if cx
                        .model
                        .attribute_of(&class, attr)
                        .is_some_and(|a| a.derived)
                    {
                        let d = derived_def(
                            cx,
                            &inv.context,
                            &class,
                            attr,
                            rhs,
                            inv.mode,
                            inv.body.pos,
                        )?;
                        return Ok(TypedDecl::Derived(vec![d]));
                    }
                }
            }
            let body = cx.expr(&inv.body)?;
            cx.expect_bool(&body, "an invariant")?;
            let id = inv
                .name
                .clone()
                .unwrap_or_else(|| format!("{}:{}", simple_name(&class), inv.context.pos.line));
            Ok(TypedDecl::Invariant(TypedInvariant {
                id,
                class,
                self_name: inv.context.self_name.clone(),
                body,
                pos: inv.context.pos,
            }))
        }
        ConstraintDecl::Derived(block) => {
            let class = enter_class(cx, &block.context)?;
            let mut defs = Vec::new();
            let mut failed = false;
            for d in &block.defs {
                match derived_def(
                    cx,
                    &block.context,
                    &class,
                    &d.attr,
                    &d.expr,
                    block.mode,
                    d.pos,
                ) {
                    Ok(t) => defs.push(t),
                    Err(()) => failed = true,
                }
            }
            if failed {
                return Err(());
            }
            Ok(TypedDecl::Derived(defs))
        }
        ConstraintDecl::Constant(c) => {
            let class = context_class(cx, &c.context)?;
            let mut out = Vec::new();
            for item in &c.items {
                let target = match cx.model.lookup_feature(&class, &item.name) {
                    Ok(Some(Feature::Attribute { .. })) if !item.query => {
                        ConstTarget::Attribute(item.name.clone())
                    }
                    Ok(Some(Feature::Role(r))) if !item.query => ConstTarget::Role(r),
                    Ok(Some(Feature::Operation { decl, .. })) if item.query => {
                        if !decl.query {
                            return cx.err(item.pos, format!("'{}' is not a query", item.name));
                        }
                        match decl.body.as_deref().map(str::trim) {
                            Some(b) if cx.model.attribute_of(&class, b).is_some() => {
                                ConstTarget::Attribute(b.to_string())
                            }
                            _ => ConstTarget::Unchecked,
                        }
                    }
                    Ok(Some(_)) if item.query => {
                        return cx.err(
                            item.pos,
                            format!("'{}' is not a query operation", item.name),
                        )
                    }
                    Ok(Some(_)) => {
                        return cx.err(
                            item.pos,
                            format!(
                                "'{}' is an operation; write constant {}()",
                                item.name, item.name
                            ),
                        )
                    }
                    Ok(None) => {
                        return cx.err(
                            item.pos,
                            format!("class {class} has no feature '{}'", item.name),
                        )
                    }
                    Err(o) => {
                        return cx.err(
                            item.pos,
                            format!(
                                "'{}' is inherited ambiguously from {}",
                                item.name,
                                o.join(", ")
                            ),
                        )
                    }
                };
                out.push(TypedConstant {
                    class: class.clone(),
                    name: item.name.clone(),
                    target,
                    pos: item.pos,
                });
            }
            Ok(TypedDecl::Constant(out))
        }
        ConstraintDecl::Operation(spec) => check_operation_spec(cx, spec),
        ConstraintDecl::Action(a) => {
            let class = enter_class(cx, &a.context)?;
            let cond = cx.expr(&a.condition);
            let msgs = cx.messages(&a.messages);
            let (cond, messages) = (cond?, msgs?);
            cx.expect_bool(&cond, "an action condition")?;
            Ok(TypedDecl::Action(TypedAction {
                id: format!("{}:{}", simple_name(&class), a.context.pos.line),
                class,
                condition: cond,
                messages,
                pos: a.context.pos,
            }))
        }
    }
}

fn check_operation_spec(cx: &mut Cx, spec: &OperationSpec) -> Result<TypedDecl, ()> {
    let mut params = Vec::new();
    for p in &spec.params {
        params.push((p.name.clone(), cx.resolve_type(&p.ty)?));
    }
    let mut returns = match &spec.returns {
        Some(t) => Some(cx.resolve_type(t)?),
        None => None,
    };
    let receivers = match &spec.receivers {
        Receivers::Class(c) => {
            let class = enter_class(cx, c)?;
            let Some((_, decl)) = cx.model.operation_of(&class, &spec.op) else {
                return cx.err(
                    spec.pos,
                    format!("class {class} has no operation '{}'", spec.op),
                );
            };
            let declared: Vec<Type> = decl.params.iter().map(|(_, t)| t.clone()).collect();
            let given: Vec<Type> = params.iter().map(|(_, t)| t.clone()).collect();
            if declared != given {
                return cx.err(
                    spec.pos,
                    format!(
                        "parameters of {}::{} do not match its declaration ({})",
                        simple_name(&class),
                        spec.op,
                        declared
                            .iter()
                            .map(Type::to_string)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ),
                );
            }
            match (&returns, &decl.returns) {
                (Some(a), Some(b)) if a != b => {
                    return cx.err(
                        spec.pos,
                        format!("{} is declared to return {b}, not {a}", spec.op),
                    )
                }
                (Some(a), None) => {
                    return cx.err(
                        spec.pos,
                        format!("{} is declared without a return type, not {a}", spec.op),
                    )
                }
                (None, Some(b)) => returns = Some(b.clone()),
                _ => {}
            }
            TypedReceivers::Object(class)
        }
        Receivers::Joint(rs) => {
            cx.receiver = Receiver::Joint;
            let mut out = Vec::new();
            for r in rs {
                let t = cx.resolve_type(&r.ty)?;
                if t.class_name().is_none() {
                    return cx.err(
                        r.pos,
                        format!("receiver '{}' must be an object, not {t}", r.name),
                    );
                }
                cx.scopes.push(Scope::Var(r.name.clone(), t.clone()));
                out.push((r.name.clone(), t));
            }
            TypedReceivers::Joint(out)
        }
        Receivers::Event => {
            cx.receiver = Receiver::Event;
            TypedReceivers::Event
        }
    };
    for (n, t) in &params {
        cx.scopes.push(Scope::Var(n.clone(), t.clone()));
    }
    let pre = match &spec.pre {
        Some(e) => {
            cx.post = false;
            cx.expr(e)
                .and_then(|t| cx.expect_bool(&t, "a precondition").map(|_| Some(t)))
        }
        None => Ok(None),
    };
    let (post, called) = {
        cx.post = true;
        let mark = cx.scopes.len();
        let called = match &spec.called {
            Some(m) => cx.messages(m).map(Some),
            None => Ok(None),
        };
        if let Some(r) = &returns {
            cx.has_result = true;
            cx.scopes.push(Scope::Var("result".into(), r.clone()));
        }
        let post = match &spec.post {
            Some(e) => cx
                .expr(e)
                .and_then(|t| cx.expect_bool(&t, "a postcondition").map(|_| Some(t))),
            None => Ok(None),
        };
        cx.scopes.truncate(mark);
        (post, called)
    };
    let (pre, post, called) = (pre?, post?, called?);
    let self_name = match &spec.receivers {
        Receivers::Class(c) => c.self_name.clone(),
        _ => None,
    };
    Ok(TypedDecl::Operation(TypedOperation {
        id: spec.display_name(),
        receivers,
        self_name,
        op: spec.op.clone(),
        params,
        returns,
        pre,
        post,
        called,
        pos: spec.pos,
    }))
}

/// Checks one declaration against the model.
pub fn typecheck(decl: &ConstraintDecl, model: &ClassModel) -> Result<TypedDecl, Diagnostics> {
    let mut cx = Cx::new(model);
    match check_decl(&mut cx, decl) {
        Ok(d) if cx.diags.is_empty() => Ok(d),
        _ => Err(Diagnostics(cx.diags)),
    }
}

/// Checks every declaration, collecting all diagnostics.
pub fn typecheck_file(file: &ConstraintFile, model: &ClassModel) -> Result<TypedFile, Diagnostics> {
    let mut out = TypedFile::default();
    let mut diags = Vec::new();
    for d in &file.decls {
        match typecheck(d, model) {
            Ok(t) => out.push(t),
            Err(e) => diags.extend(e.0),
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(Diagnostics(diags))
    }
}

pub fn typecheck_expression(
    expr: &Expr,
    model: &ClassModel,
    scope: &ExprScope,
) -> Result<TExpr, Diagnostics> {
    let mut cx = Cx::new(model);
    cx.post = scope.post;
    if let Some(t) = &scope.self_type {
        cx.bind_self(t.clone());
    }
    for (n, t) in &scope.vars {
        cx.scopes.push(Scope::Var(n.clone(), t.clone()));
    }
    match cx.expr(expr) {
        Ok(t) if cx.diags.is_empty() => Ok(t),
        _ => Err(Diagnostics(cx.diags)),
    }
}

/// Type-checks the body of a query operation declared in the model.
pub(crate) fn typecheck_query_body(
    model: &ClassModel,
    owner: &str,
    params: &[(String, Type)],
    body: &Expr,
) -> Result<TExpr, Diagnostics> {
    let scope = ExprScope {
        self_type: Some(Type::Class(owner.to_string())),
        vars: params.to_vec(),
        post: false,
    };
    typecheck_expression(body, model, &scope)
}
