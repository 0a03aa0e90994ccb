//! Message traces interleaved with observed states, and the `called` and
//! `action` constraints checked against them.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::contracts::{CheckReport, Verdict};
use crate::diag::{Diagnostic, Diagnostics, Pos};
use crate::eval::{
    eval, eval_bool, strong_equal, Bool3, Env, EvalCtx, EvalError, QueryTable, Value,
};
use crate::model::{load_snapshot, ClassModel, ObjectId, Snapshot};
use crate::types::typed::TMessage;
use crate::types::{conforms_to, Type, TypedAction, TypedOperation, TypedReceivers};

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEntry {
    /// An observed system state; index into [`Trace::snapshots`].
    State(usize),
    Begin {
        id: String,
        op: String,
        receivers: Vec<(String, ObjectId)>,
        args: Vec<(String, Value)>,
    },
    Send {
        sender: Option<ObjectId>,
        receiver: ObjectId,
        op: String,
        args: Vec<Value>,
    },
    End {
        id: String,
    },
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub snapshots: Vec<(String, Snapshot)>,
    pub entries: Vec<TraceEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceDoc {
    #[serde(default)]
    snapshots: BTreeMap<String, toml::Value>,
    #[serde(default, rename = "entry")]
    entries: Vec<EntryDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum EntryDoc {
    State {
        snapshot: String,
    },
    Begin {
        id: String,
        op: String,
        #[serde(default)]
        receiver: Option<String>,
        #[serde(default)]
        receivers: BTreeMap<String, String>,
        #[serde(default)]
        args: BTreeMap<String, toml::Value>,
    },
    Send {
        #[serde(default)]
        sender: Option<String>,
        receiver: String,
        op: String,
        #[serde(default)]
        args: Vec<toml::Value>,
    },
    End {
        id: String,
    },
}

/// Loads a trace document. Snapshots are given inline as tables or as
/// paths that `read` resolves.
pub fn load_trace(
    text: &str,
    model: &ClassModel,
    read: &dyn Fn(&str) -> Result<String, String>,
) -> Result<Trace, Diagnostics> {
    let doc: TraceDoc = toml::from_str(text)
        .map_err(|e| Diagnostics::single(Diagnostic::error(span_pos(text, &e), e.message())))?;
    let mut diags = Vec::new();
    let mut trace = Trace::default();
    let mut names = BTreeMap::new();
    for (name, v) in &doc.snapshots {
        let loaded = match v {
            toml::Value::String(path) => match read(path) {
                Ok(t) => load_snapshot(&t, model).map_err(|d| d.in_file(path)),
                Err(e) => Err(Diagnostics::single(Diagnostic::error(
                    Pos::default(),
                    format!("snapshot '{name}': {e}"),
                ))),
            },
            toml::Value::Table(t) => {
                let inline = toml::to_string(t).unwrap_or_default();
                load_snapshot(&inline, model).map_err(|d| {
                    Diagnostics(
                        d.0.into_iter()
                            .map(|x| {
                                Diagnostic::error(
                                    Pos::default(),
                                    format!("snapshot '{name}': {}", x.message),
                                )
                            })
                            .collect(),
                    )
                })
            }
            _ => Err(Diagnostics::single(Diagnostic::error(
                Pos::default(),
                format!("snapshot '{name}' must be a path or a table"),
            ))),
        };
        match loaded {
            Ok(s) => {
                names.insert(name.clone(), trace.snapshots.len());
                trace.snapshots.push((name.clone(), s));
            }
            Err(d) => diags.extend(d.0),
        }
    }
    if !diags.is_empty() {
        return Err(Diagnostics(diags));
    }
    let mut current: Option<usize> = None;
    let mut open: Vec<String> = Vec::new();
    let mut seen_ids = Vec::new();
    for (k, e) in doc.entries.into_iter().enumerate() {
        let n = k + 1;
        let mut err =
            |m: String| diags.push(Diagnostic::error(Pos::default(), format!("entry {n}: {m}")));
        let state = current.map(|i| &trace.snapshots[i].1);
        let entry = match e {
            EntryDoc::State { snapshot } => match names.get(&snapshot) {
                Some(&i) => {
                    current = Some(i);
                    TraceEntry::State(i)
                }
                None => {
                    err(format!("unknown snapshot '{snapshot}'"));
                    continue;
                }
            },
            EntryDoc::Begin {
                id,
                op,
                receiver,
                receivers,
                args,
            } => {
                if seen_ids.contains(&id) {
                    err(format!("invocation id '{id}' is used twice"));
                    continue;
                }
                seen_ids.push(id.clone());
                open.push(id.clone());
                let mut rs: Vec<(String, ObjectId)> = receiver
                    .into_iter()
                    .map(|r| ("self".to_string(), ObjectId::new(r)))
                    .collect();
                rs.extend(receivers.into_iter().map(|(k, v)| (k, ObjectId::new(v))));
                let mut vals = Vec::new();
                let decl = rs
                    .iter()
                    .find(|(n, _)| n == "self")
                    .and_then(|(_, id)| class_in(&trace, state, id))
                    .and_then(|c| model.operation_of(&c, &op).map(|(_, d)| d.clone()));
                for (name, raw) in args {
                    let ty = decl
                        .as_ref()
                        .and_then(|d| d.params.iter().find(|(p, _)| *p == name))
                        .map(|(_, t)| t.clone());
                    match convert(&trace, state, &raw, ty.as_ref(), model) {
                        Ok(v) => vals.push((name, v)),
                        Err(m) => err(format!("argument '{name}': {m}")),
                    }
                }
                TraceEntry::Begin {
                    id,
                    op,
                    receivers: rs,
                    args: vals,
                }
            }
            EntryDoc::Send {
                sender,
                receiver,
                op,
                args,
            } => {
                let receiver = ObjectId::new(receiver);
                let decl = class_in(&trace, state, &receiver)
                    .and_then(|c| model.operation_of(&c, &op).map(|(_, d)| d.clone()));
                let mut vals = Vec::new();
                for (i, raw) in args.iter().enumerate() {
                    let ty = decl
                        .as_ref()
                        .and_then(|d| d.params.get(i))
                        .map(|(_, t)| t.clone());
                    match convert(&trace, state, raw, ty.as_ref(), model) {
                        Ok(v) => vals.push(v),
                        Err(m) => err(format!("argument {}: {m}", i + 1)),
                    }
                }
                TraceEntry::Send {
                    sender: sender.map(ObjectId::new),
                    receiver,
                    op,
                    args: vals,
                }
            }
            EntryDoc::End { id } => {
                match open.iter().rposition(|o| *o == id) {
                    Some(i) => {
                        open.remove(i);
                    }
                    None => {
                        err(format!(
                            "'end' of invocation '{id}' without a matching 'begin'"
                        ));
                        continue;
                    }
                }
                TraceEntry::End { id }
            }
        };
        trace.entries.push(entry);
    }
    for id in open {
        diags.push(Diagnostic::error(
            Pos::default(),
            format!("invocation '{id}' never ends"),
        ));
    }
    if diags.is_empty() {
        Ok(trace)
    } else {
        Err(Diagnostics(diags))
    }
}

fn span_pos(text: &str, e: &toml::de::Error) -> Pos {
    e.span()
        .map(|s| Pos::from_offset(text, s.start))
        .unwrap_or_default()
}

/// Class of `id` in the current state, else in any snapshot of the trace.
fn class_in(trace: &Trace, state: Option<&Snapshot>, id: &ObjectId) -> Option<String> {
    state
        .and_then(|s| s.object(id))
        .or_else(|| trace.snapshots.iter().find_map(|(_, s)| s.object(id)))
        .map(|o| o.class.clone())
}

fn convert(
    trace: &Trace,
    state: Option<&Snapshot>,
    raw: &toml::Value,
    ty: Option<&Type>,
    model: &ClassModel,
) -> Result<Value, String> {
    let snap = state.or_else(|| trace.snapshots.first().map(|(_, s)| s));
    match (ty, snap) {
        (Some(t), Some(s)) => s.value_from_toml(raw, t, model),
        _ => Ok(match raw {
            toml::Value::Boolean(b) => Value::Bool(*b),
            toml::Value::Integer(i) => Value::Int(*i),
            toml::Value::Float(r) => Value::Real(*r),
            toml::Value::String(s) => {
                let id = ObjectId::new(s.clone());
                if snap.is_some_and(|x| x.contains(&id)) {
                    Value::Obj(id)
                } else {
                    Value::Str(s.clone())
                }
            }
            other => return Err(format!("unsupported argument value {other}")),
        }),
    }
}

/// A message the constraint requires.
#[derive(Debug, Clone, PartialEq)]
struct Required {
    receiver: ObjectId,
    op: String,
    args: Vec<Value>,
}

/// Resolves a message list against a state. `None` when a condition or
/// target is undefined.
fn required(
    msgs: &[TMessage],
    env: &Env,
    cx: &EvalCtx,
) -> Result<Option<Vec<Required>>, EvalError> {
    let mut out = Vec::new();
    for m in msgs {
        match m {
            TMessage::If {
                cond, then, els, ..
            } => {
                let branch = match eval_bool(cond, env, cx)? {
                    Bool3::True => then,
                    Bool3::False => els,
                    Bool3::Undef => return Ok(None),
                };
                match required(branch, env, cx)? {
                    Some(r) => out.extend(r),
                    None => return Ok(None),
                }
            }
            TMessage::Send {
                target, op, args, ..
            } => {
                let t = eval(target, env, cx)?;
                let mut vals = Vec::new();
                for a in args {
                    let v = eval(a, env, cx)?;
                    if v.is_undef() {
                        return Ok(None);
                    }
                    vals.push(v);
                }
                let receivers: Vec<ObjectId> = match t {
                    Value::Obj(id) => vec![id],
                    Value::Coll(_, items) => {
                        items.iter().filter_map(|v| v.as_obj().cloned()).collect()
                    }
                    _ => return Ok(None),
                };
                for r in receivers {
                    out.push(Required {
                        receiver: r,
                        op: op.clone(),
                        args: vals.clone(),
                    });
                }
            }
        }
    }
    Ok(Some(out))
}

fn sent(entries: &[TraceEntry], r: &Required) -> bool {
    entries.iter().any(|e| match e {
        TraceEntry::Send {
            receiver, op, args, ..
        } => {
            *receiver == r.receiver
                && *op == r.op
                && args.len() == r.args.len()
                && args.iter().zip(&r.args).all(|(a, b)| strong_equal(a, b))
        }
        _ => false,
    })
}

fn verdict(entries: &[TraceEntry], req: Option<Vec<Required>>) -> Verdict {
    match req {
        None => Verdict::Undefined,
        Some(req) if req.iter().all(|r| sent(entries, r)) => Verdict::Satisfied,
        Some(_) => Verdict::Violated,
    }
}

/// True if a `begin` entry records an execution of `spec`'s operation.
fn executes(
    spec: &TypedOperation,
    op: &str,
    receivers: &[(String, ObjectId)],
    trace: &Trace,
    at: Option<&Snapshot>,
    model: &ClassModel,
) -> bool {
    if op != spec.op && op != spec.id {
        return false;
    }
    match &spec.receivers {
        TypedReceivers::Object(class) => receivers.iter().any(|(n, id)| {
            n == "self"
                && class_in(trace, at, id).is_some_and(|c| {
                    conforms_to(&Type::Class(c), &Type::Class(class.clone()), model)
                })
        }),
        TypedReceivers::Joint(rs) => rs
            .iter()
            .all(|(n, _)| receivers.iter().any(|(m, _)| m == n)),
        TypedReceivers::Event => receivers.is_empty(),
    }
}

/// Checks a `called` clause: every execution span of the operation must
/// contain the messages required under the conditions at span start.
/// `@pre` refers to the span-start state.
pub fn check_called(
    spec: &TypedOperation,
    trace: &Trace,
    model: &ClassModel,
    queries: &QueryTable,
) -> Result<CheckReport, EvalError> {
    let mut report = CheckReport::default();
    let Some(msgs) = &spec.called else {
        return Ok(report);
    };
    let id = format!("{}:called", spec.id);
    let mut current: Option<usize> = None;
    for (k, e) in trace.entries.iter().enumerate() {
        match e {
            TraceEntry::State(i) => current = Some(*i),
            TraceEntry::Begin {
                id: inv,
                op,
                receivers,
                args,
            } => {
                let at = current.map(|i| &trace.snapshots[i].1);
                if !executes(spec, op, receivers, trace, at, model) {
                    continue;
                }
                let end = trace.entries[k..]
                    .iter()
                    .position(|x| matches!(x, TraceEntry::End { id } if id == inv))
                    .map(|p| k + p)
                    .unwrap_or(trace.entries.len());
                let span = &trace.entries[k + 1..end];
                let Some(snap) = at else {
                    report.push(&id, inv.as_str(), Verdict::Undefined, spec.pos);
                    continue;
                };
                let mut env = Env::new();
                for (n, o) in receivers {
                    env.bind(n.clone(), Value::Obj(o.clone()));
                }
                for (n, v) in args {
                    env.bind(n.clone(), v.clone());
                }
                let cx = EvalCtx::new(model, snap, queries).with_pre(snap);
                report.push(
                    &id,
                    inv.as_str(),
                    verdict(span, required(msgs, &env, &cx)?),
                    spec.pos,
                );
            }
            _ => {}
        }
    }
    if report.rows.is_empty() {
        report.notes.push(Diagnostic::note(
            spec.pos,
            format!(
                "{id}: the trace contains no execution of {}; vacuously satisfied",
                spec.id
            ),
        ));
    }
    Ok(report)
}

/// Checks an `action` constraint: whenever the condition rises from
/// false or undefined at one observed state to true at the next, the
/// messages must be sent between the two states. Targets and conditional
/// message lists are evaluated at the later state.
pub fn check_action(
    spec: &TypedAction,
    trace: &Trace,
    model: &ClassModel,
    queries: &QueryTable,
) -> Result<CheckReport, EvalError> {
    let mut report = CheckReport::default();
    let points: Vec<(usize, usize)> = trace
        .entries
        .iter()
        .enumerate()
        .filter_map(|(k, e)| match e {
            TraceEntry::State(i) => Some((k, *i)),
            _ => None,
        })
        .collect();
    for w in points.windows(2) {
        let ((k0, s0), (k1, s1)) = (w[0], w[1]);
        let (a, b) = (&trace.snapshots[s0], &trace.snapshots[s1]);
        let segment = &trace.entries[k0 + 1..k1];
        let cx_a = EvalCtx::new(model, &a.1, queries);
        let cx_b = EvalCtx::new(model, &b.1, queries);
        let ids =
            crate::model::objects_of_kind(&b.1, model, &spec.class).map_err(EvalError::Internal)?;
        for obj in ids {
            let env = Env::new().with("self", Value::Obj(obj.clone()));
            let before = if a.1.contains(&obj) {
                eval_bool(&spec.condition, &env, &cx_a)?
            } else {
                Bool3::Undef
            };
            let after = eval_bool(&spec.condition, &env, &cx_b)?;
            let binding = format!("{obj} @ {}->{}", a.0, b.0);
            if after == Bool3::True && before != Bool3::True {
                let v = verdict(segment, required(&spec.messages, &env, &cx_b)?);
                report.push(&spec.id, binding, v, spec.pos);
            } else if after == Bool3::Undef && before == Bool3::Undef {
                report.push(&spec.id, binding, Verdict::Undefined, spec.pos);
            }
        }
    }
    Ok(report)
}
