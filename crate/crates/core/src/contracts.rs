//! Invariants over snapshots, operation specifications over before/after
//! snapshot pairs, and constancy declarations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Deserialize;

use crate::diag::{Diagnostic, Pos};
use crate::eval::{dynamic_type, eval_bool, Bool3, Env, EvalCtx, EvalError, QueryTable, Value};
use crate::model::{objects_of_kind, ClassModel, ObjectId, RoleRef, Snapshot};
use crate::types::{
    conforms_to, ConstTarget, Type, TypedConstant, TypedFile, TypedInvariant, TypedOperation,
    TypedReceivers,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Satisfied,
    Violated,
    Undefined,
}

impl From<Bool3> for Verdict {
    fn from(b: Bool3) -> Self {
        match b {
            Bool3::True => Verdict::Satisfied,
            Bool3::False => Verdict::Violated,
            Bool3::Undef => Verdict::Undefined,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Undefined => "undefined",
        })
    }
}

/// One verdict for one constraint under one binding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ReportRow {
    pub constraint: String,
    pub binding: String,
    pub verdict: Verdict,
    pub pos: Pos,
}

impl fmt::Display for ReportRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} | {} | {}",
            self.constraint, self.binding, self.verdict
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub rows: Vec<ReportRow>,
    /// Remarks that are not verdicts, such as unchecked constant queries.
    pub notes: Vec<Diagnostic>,
}

impl CheckReport {
    pub fn push(
        &mut self,
        constraint: impl Into<String>,
        binding: impl Into<String>,
        verdict: Verdict,
        pos: Pos,
    ) {
        self.rows.push(ReportRow {
            constraint: constraint.into(),
            binding: binding.into(),
            verdict,
            pos,
        });
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.rows.extend(other.rows);
        self.notes.extend(other.notes);
    }

    pub fn sort(&mut self) {
        self.rows
            .sort_by(|a, b| (&a.constraint, &a.binding).cmp(&(&b.constraint, &b.binding)));
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.rows.iter().filter(|r| r.verdict == v).count()
    }

    pub fn with_verdict(&self, v: Verdict) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.verdict == v)
    }

    pub fn all_satisfied(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == Verdict::Satisfied)
    }

    pub fn verdict_of(&self, constraint: &str, binding: &str) -> Option<Verdict> {
        self.rows
            .iter()
            .find(|r| r.constraint == constraint && r.binding == binding)
            .map(|r| r.verdict)
    }
}

fn object_env(id: &ObjectId, self_name: Option<&str>) -> Env {
    let mut env = Env::new().with("self", Value::Obj(id.clone()));
    if let Some(n) = self_name {
        env.bind(n, Value::Obj(id.clone()));
    }
    env
}

/// Evaluates one invariant for every object of its context class.
pub fn check_invariant(
    inv: &TypedInvariant,
    snap: &Snapshot,
    model: &ClassModel,
    queries: &QueryTable,
) -> Result<CheckReport, EvalError> {
    let cx = EvalCtx::new(model, snap, queries);
    let mut report = CheckReport::default();
    for id in objects_of_kind(snap, model, &inv.class).map_err(EvalError::Internal)? {
        let b = eval_bool(&inv.body, &object_env(&id, inv.self_name.as_deref()), &cx)?;
        report.push(&inv.id, id.as_str(), b.into(), inv.pos);
    }
    Ok(report)
}

/// Evaluates every invariant of the file; rows sorted by constraint, then
/// binding.
pub fn check_invariants(
    file: &TypedFile,
    snap: &Snapshot,
    model: &ClassModel,
    queries: &QueryTable,
) -> Result<CheckReport, EvalError> {
    let mut report = CheckReport::default();
    for inv in &file.invariants {
        report.extend(check_invariant(inv, snap, model, queries)?);
    }
    report.sort();
    Ok(report)
}

/// An invocation document: which operation ran, on what, and the states
/// around it. Snapshot paths are relative to the document; omitted ones
/// fall back to the snapshots given on the command line.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvocationDoc {
    pub op: String,
    #[serde(default)]
    pub receiver: Option<String>,
    #[serde(default)]
    pub receivers: BTreeMap<String, String>,
    #[serde(default)]
    pub args: BTreeMap<String, toml::Value>,
    #[serde(default)]
    pub result: Option<toml::Value>,
    #[serde(default)]
    pub pre_snapshot: Option<String>,
    #[serde(default)]
    pub post_snapshot: Option<String>,
}

impl InvocationDoc {
    pub fn parse(text: &str) -> Result<InvocationDoc, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    /// True if this records an execution of `spec`'s operation.
    pub fn names(&self, spec: &TypedOperation) -> bool {
        match self.op.rsplit_once("::") {
            Some((class, op)) => {
                op == spec.op
                    && matches!(&spec.receivers, TypedReceivers::Object(c)
                        if c == class || c.rsplit("::").next() == Some(class))
            }
            None => self.op == spec.op || self.op == spec.id,
        }
    }

    /// Resolves receivers and converts arguments against the signature.
    pub fn bind(
        &self,
        spec: &TypedOperation,
        model: &ClassModel,
        pre: Snapshot,
        post: Snapshot,
    ) -> Result<OpInvocation, String> {
        let receivers = match &spec.receivers {
            TypedReceivers::Object(class) => {
                let Some(r) = &self.receiver else {
                    return Err(format!("invocation of {} names no receiver", spec.id));
                };
                if !self.receivers.is_empty() {
                    return Err(format!("{} has a single receiver; use 'receiver'", spec.id));
                }
                vec![(
                    "self".to_string(),
                    receiver(r, &Type::Class(class.clone()), &pre, model)?,
                )]
            }
            TypedReceivers::Joint(rs) => {
                if self.receiver.is_some() {
                    return Err(format!(
                        "{} is a joint action; name its receivers in 'receivers'",
                        spec.id
                    ));
                }
                let mut out = Vec::new();
                for (name, ty) in rs {
                    let Some(r) = self.receivers.get(name) else {
                        return Err(format!("receiver '{name}' of {} is not bound", spec.id));
                    };
                    out.push((name.clone(), receiver(r, ty, &pre, model)?));
                }
                if let Some(extra) = self
                    .receivers
                    .keys()
                    .find(|k| !rs.iter().any(|(n, _)| n == *k))
                {
                    return Err(format!("{} has no receiver named '{extra}'", spec.id));
                }
                out
            }
            TypedReceivers::Event => {
                if self.receiver.is_some() || !self.receivers.is_empty() {
                    return Err(format!("{} is an event and has no receivers", spec.id));
                }
                Vec::new()
            }
        };
        let mut args = Vec::new();
        for (name, ty) in &spec.params {
            let Some(raw) = self.args.get(name) else {
                return Err(format!("argument '{name}' of {} is missing", spec.id));
            };
            let v = pre
                .value_from_toml(raw, ty, model)
                .map_err(|e| format!("argument '{name}': {e}"))?;
            args.push((name.clone(), v));
        }
        if let Some(extra) = self
            .args
            .keys()
            .find(|k| !spec.params.iter().any(|(n, _)| n == *k))
        {
            return Err(format!("{} has no parameter named '{extra}'", spec.id));
        }
        let result = match (&self.result, &spec.returns) {
            (Some(raw), Some(ty)) => Some(
                post.value_from_toml(raw, ty, model)
                    .map_err(|e| format!("result: {e}"))?,
            ),
            (Some(_), None) => {
                return Err(format!(
                    "{} returns nothing, but a result was given",
                    spec.id
                ))
            }
            (None, _) => None,
        };
        Ok(OpInvocation {
            op: spec.id.clone(),
            receivers,
            args,
            result,
            pre,
            post,
        })
    }
}

fn receiver(id: &str, ty: &Type, pre: &Snapshot, model: &ClassModel) -> Result<ObjectId, String> {
    let oid = ObjectId::new(id);
    let Some(o) = pre.object(&oid) else {
        return Err(format!(
            "receiver '{id}' does not exist before the operation"
        ));
    };
    if !conforms_to(&Type::Class(o.class.clone()), ty, model) {
        return Err(format!(
            "receiver '{id}' of class {} does not conform to {ty}",
            o.class
        ));
    }
    Ok(oid)
}

/// A recorded execution of an operation, joint action or event.
#[derive(Debug, Clone)]
pub struct OpInvocation {
    pub op: String,
    /// `self` for a single receiver, the receiver names of a joint action,
    /// nothing for an event.
    pub receivers: Vec<(String, ObjectId)>,
    pub args: Vec<(String, Value)>,
    pub result: Option<Value>,
    pub pre: Snapshot,
    pub post: Snapshot,
}

impl OpInvocation {
    /// Description of the binding, e.g. `b1, g=g7`.
    pub fn binding(&self) -> String {
        let mut parts = Vec::new();
        for (n, id) in &self.receivers {
            if n == "self" {
                parts.push(id.to_string());
            } else {
                parts.push(format!("{n}={id}"));
            }
        }
        for (n, v) in &self.args {
            parts.push(format!("{n}={v}"));
        }
        if parts.is_empty() {
            "()".into()
        } else {
            parts.join(", ")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpVerdicts {
    pub pre: Verdict,
    /// The postcondition alone.
    pub post: Verdict,
    /// `pre implies post`, the actual postcondition of the operation.
    pub combined: Verdict,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContractError {
    #[error("{0}")]
    Binding(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Binds receivers, arguments and `result`, for evaluation before
/// (`post = false`) or after the operation.
pub fn invocation_env(spec: &TypedOperation, inv: &OpInvocation, post: bool) -> Env {
    let mut env = Env::new();
    for (n, id) in &inv.receivers {
        env.bind(n.clone(), Value::Obj(id.clone()));
        if n == "self" {
            if let Some(alias) = &spec.self_name {
                env.bind(alias.clone(), Value::Obj(id.clone()));
            }
        }
    }
    for (n, v) in &inv.args {
        env.bind(n.clone(), v.clone());
    }
    if post {
        if let Some(ty) = &spec.returns {
            env.bind(
                "result",
                inv.result.clone().unwrap_or(Value::Undef(ty.clone())),
            );
        }
    }
    env
}

pub fn check_operation(
    spec: &TypedOperation,
    inv: &OpInvocation,
    model: &ClassModel,
    queries: &QueryTable,
) -> Result<OpVerdicts, ContractError> {
    let expected = match &spec.receivers {
        TypedReceivers::Object(_) => 1,
        TypedReceivers::Joint(rs) => rs.len(),
        TypedReceivers::Event => 0,
    };
    if inv.receivers.len() != expected {
        return Err(ContractError::Binding(format!(
            "{} expects {expected} receiver(s), the invocation binds {}",
            spec.id,
            inv.receivers.len()
        )));
    }
    if inv.args.len() != spec.params.len() {
        return Err(ContractError::Binding(format!(
            "{} expects {} argument(s), the invocation binds {}",
            spec.id,
            spec.params.len(),
            inv.args.len()
        )));
    }
    for ((n, v), (_, ty)) in inv.args.iter().zip(&spec.params) {
        if let Some(dt) = dynamic_type(v, &inv.pre) {
            if !conforms_to(&dt, ty, model) {
                return Err(ContractError::Binding(format!(
                    "argument '{n}' of type {dt} does not conform to {ty}"
                )));
            }
        }
    }
    let pre_cx = EvalCtx::new(model, &inv.pre, queries);
    let pre = match &spec.pre {
        Some(e) => eval_bool(e, &invocation_env(spec, inv, false), &pre_cx)?,
        None => Bool3::True,
    };
    let post_cx = EvalCtx::new(model, &inv.post, queries).with_pre(&inv.pre);
    let post = match &spec.post {
        Some(e) => eval_bool(e, &invocation_env(spec, inv, true), &post_cx)?,
        None => Bool3::True,
    };
    Ok(OpVerdicts {
        pre: pre.into(),
        post: post.into(),
        combined: pre.implies(post).into(),
    })
}

/// Report rows for one checked invocation: `id:pre`, `id:post` and the
/// combined `id`.
pub fn operation_rows(spec: &TypedOperation, inv: &OpInvocation, v: OpVerdicts) -> CheckReport {
    let mut r = CheckReport::default();
    let b = inv.binding();
    r.push(format!("{}:pre", spec.id), b.clone(), v.pre, spec.pos);
    r.push(format!("{}:post", spec.id), b.clone(), v.post, spec.pos);
    r.push(spec.id.clone(), b, v.combined, spec.pos);
    r
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Watched {
    Attr(String, String),
    Role(String, RoleRef),
}

/// Reports every object present in both snapshots whose constant
/// attribute value or constant role links changed. Constants come from the
/// model's flags and from constant declarations. Objects created between
/// the snapshots are exempt; deleted objects are allowed.
pub fn check_constancy(
    model: &ClassModel,
    constants: &[TypedConstant],
    pre: &Snapshot,
    post: &Snapshot,
) -> Vec<Diagnostic> {
    let mut watched: BTreeMap<Watched, Pos> = BTreeMap::new();
    let mut out = Vec::new();
    for c in &model.classes {
        let q = c.qualified_name();
        for a in c.attributes.iter().filter(|a| a.constant && !a.is_static) {
            watched.insert(Watched::Attr(q.clone(), a.name.clone()), Pos::default());
        }
    }
    for (ai, assoc) in model.associations.iter().enumerate() {
        for t in 0..2 {
            if assoc.ends[t].constant {
                let role = RoleRef {
                    assoc: ai,
                    target_end: t,
                };
                watched.insert(
                    Watched::Role(assoc.ends[1 - t].class.clone(), role),
                    Pos::default(),
                );
            }
        }
    }
    for c in constants {
        match &c.target {
            ConstTarget::Attribute(a) => {
                watched.insert(Watched::Attr(c.class.clone(), a.clone()), c.pos);
            }
            ConstTarget::Role(r) => {
                watched.insert(Watched::Role(c.class.clone(), *r), c.pos);
            }
            ConstTarget::Unchecked => out.push(Diagnostic::note(
                c.pos,
                format!(
                    "constant query {}::{}() is computed and was not checked",
                    c.class, c.name
                ),
            )),
        }
    }
    let mut reported = BTreeSet::new();
    for (w, pos) in &watched {
        let class = match w {
            Watched::Attr(c, _) | Watched::Role(c, _) => c,
        };
        let Ok(ids) = objects_of_kind(post, model, class) else {
            continue;
        };
        for id in ids.iter().filter(|id| pre.contains(id)) {
            let (name, before, after) = match w {
                Watched::Attr(_, a) => {
                    let ty = model
                        .attribute_of(class, a)
                        .map(|d| d.ty.clone())
                        .unwrap_or(Type::OclAny);
                    let get =
                        |s: &Snapshot| s.attr(id, a).cloned().unwrap_or(Value::Undef(ty.clone()));
                    (a.clone(), get(pre), get(post))
                }
                Watched::Role(_, r) => {
                    let get = |s: &Snapshot| {
                        Value::set(s.navigate(*r, id).iter().cloned().map(Value::Obj))
                    };
                    (model.role_target(*r).role.clone(), get(pre), get(post))
                }
            };
            if !crate::eval::strong_equal(&before, &after)
                && reported.insert((id.clone(), name.clone()))
            {
                out.push(Diagnostic::error(
                    *pos,
                    format!("constant {name} of '{id}' changed from {before} to {after}"),
                ));
            }
        }
    }
    out
}
