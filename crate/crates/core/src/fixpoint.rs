//! Recursive derived attributes: minimal fixpoints by iteration from the
//! bottom element, and checking of given (loose) solutions.

use std::collections::BTreeMap;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use crate::diag::{Diagnostic, Diagnostics};
use crate::eval::{eval, strong_equal, Bool3, Env, EvalCtx, EvalError, QueryTable, Value};
use crate::model::{objects_of_kind, ClassModel, ObjectId, Snapshot};
use crate::syntax::RecursionMode;
use crate::types::{Type, TypedDerived};

pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Definitions that depend on each other, solved together.
#[derive(Debug, Clone)]
pub struct DerivedGroup {
    pub defs: Vec<TypedDerived>,
    pub mode: RecursionMode,
}

impl DerivedGroup {
    pub fn new(defs: Vec<TypedDerived>) -> DerivedGroup {
        let mode = defs.first().map(|d| d.mode).unwrap_or_default();
        DerivedGroup { defs, mode }
    }

    pub fn is_loose(&self) -> bool {
        self.mode == RecursionMode::Loose
    }

    /// True if some definition reads an attribute defined in the group.
    pub fn is_recursive(&self) -> bool {
        self.defs.iter().any(|d| {
            d.expr
                .attributes_read()
                .iter()
                .any(|a| self.defs.iter().any(|o| &o.attr == a))
        })
    }

    fn set_valued(&self) -> bool {
        self.defs.iter().all(|d| d.ty.is_collection())
    }
}

/// Groups definitions by strongly connected components of the reference
/// graph, dependencies first.
pub fn group_derived(defs: &[TypedDerived]) -> Result<Vec<DerivedGroup>, Diagnostics> {
    let mut graph = DiGraphMap::<usize, ()>::new();
    for i in 0..defs.len() {
        graph.add_node(i);
    }
    for (i, d) in defs.iter().enumerate() {
        for a in d.expr.attributes_read() {
            for (j, o) in defs.iter().enumerate() {
                if o.attr == a {
                    graph.add_edge(i, j, ());
                }
            }
        }
    }
    let mut diags = Vec::new();
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for d in defs {
        let n = seen.entry((d.class.clone(), d.attr.clone())).or_default();
        *n += 1;
        if *n == 2 {
            diags.push(Diagnostic::error(
                d.pos,
                format!("'{}' is defined more than once", d.id),
            ));
        }
    }
    let mut groups = Vec::new();
    for mut scc in tarjan_scc(&graph) {
        scc.sort();
        let members: Vec<TypedDerived> = scc.iter().map(|&i| defs[i].clone()).collect();
        let loose = members
            .iter()
            .filter(|d| d.mode == RecursionMode::Loose)
            .count();
        if loose != 0 && loose != members.len() {
            diags.push(Diagnostic::error(
                members[0].pos,
                format!(
                    "mutually recursive definitions {} mix loose and executable semantics",
                    members
                        .iter()
                        .map(|d| d.id.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            ));
        }
        groups.push(DerivedGroup::new(members));
    }
    if diags.is_empty() {
        Ok(groups)
    } else {
        Err(Diagnostics(diags))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub object: ObjectId,
    pub previous: Value,
    pub last: Value,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FixpointError {
    #[error("{attr} did not converge after {iterations} iteration(s)")]
    Divergence {
        attr: String,
        iterations: usize,
        /// The last two iterates of every object whose value still changed.
        iterates: Vec<Iterate>,
    },
    #[error("{attr} has no value for object '{object}'; loose definitions need explicit values")]
    MissingValue { attr: String, object: ObjectId },
    #[error("the minimality certificate only applies to collection-valued definitions")]
    Inapplicable,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl FixpointError {
    /// Human-readable report including the last two iterates.
    pub fn report(&self) -> String {
        let mut s = self.to_string();
        if let FixpointError::Divergence { iterates, .. } = self {
            for it in iterates {
                s.push_str(&format!(
                    "\n  {}: {} then {}",
                    it.object, it.previous, it.last
                ));
            }
        }
        s
    }
}

/// Result of a successful minimal-fixpoint computation.
#[derive(Debug, Clone)]
pub struct Solution {
    pub snapshot: Snapshot,
    /// Applications of the equations, including the one confirming
    /// stability.
    pub iterations: usize,
    pub warnings: Vec<Diagnostic>,
}

struct Solver<'a> {
    model: &'a ClassModel,
    queries: &'a QueryTable,
}

type Slots = Vec<(usize, ObjectId)>;

impl Solver<'_> {
    fn slots(&self, group: &DerivedGroup, snap: &Snapshot) -> Result<Slots, EvalError> {
        let mut out = Vec::new();
        for (i, d) in group.defs.iter().enumerate() {
            let ids = objects_of_kind(snap, self.model, &d.class).map_err(EvalError::Internal)?;
            out.extend(ids.into_iter().map(|id| (i, id)));
        }
        Ok(out)
    }

    fn apply(&self, d: &TypedDerived, id: &ObjectId, snap: &Snapshot) -> Result<Value, EvalError> {
        let mut env = Env::new().with("self", Value::Obj(id.clone()));
        if let Some(n) = &d.self_name {
            env.bind(n.clone(), Value::Obj(id.clone()));
        }
        let v = eval(&d.expr, &env, &EvalCtx::new(self.model, snap, self.queries))?;
        Ok(match (v, &d.ty) {
            (Value::Int(i), Type::Real) => Value::Real(i as f64),
            (Value::Undef(_), t) => Value::Undef(t.clone()),
            (v, _) => v,
        })
    }
}

fn bottom(d: &TypedDerived, id: &ObjectId, snap: &Snapshot) -> Value {
    match &d.ty {
        Type::Collection(k, _) => Value::coll(*k, vec![]),
        t => snap
            .attr(id, &d.attr)
            .cloned()
            .unwrap_or(Value::Undef(t.clone())),
    }
}

fn contained(small: &Value, big: &Value) -> bool {
    match (small.as_items(), big.as_items()) {
        (Some(a), Some(b)) => a.iter().all(|x| b.iter().any(|y| strong_equal(x, y))),
        _ => false,
    }
}

/// Computes the least solution of the group's equations by iterated
/// application from the bottom element: empty collections for
/// collection-valued attributes, and for scalars the snapshot's value if
/// given, else undefined.
pub fn solve_minimal(
    group: &DerivedGroup,
    snap: &Snapshot,
    model: &ClassModel,
    queries: &QueryTable,
    max_iter: usize,
) -> Result<Solution, FixpointError> {
    let solver = Solver { model, queries };
    let slots = solver.slots(group, snap)?;
    let mut current: Vec<Value> = slots
        .iter()
        .map(|(i, id)| bottom(&group.defs[*i], id, snap))
        .collect();
    let install = |vals: &[Value]| {
        snap.with_attrs(
            slots
                .iter()
                .zip(vals)
                .map(|((i, id), v)| (id.clone(), group.defs[*i].attr.clone(), v.clone())),
        )
    };
    let mut warned = vec![false; group.defs.len()];
    let mut warnings = Vec::new();
    let mut iterations = 0;
    loop {
        let state = install(&current);
        if iterations >= max_iter {
            let previous = current.clone();
            let next: Vec<Value> = match slots
                .iter()
                .map(|(i, id)| solver.apply(&group.defs[*i], id, &state))
                .collect::<Result<_, _>>()
            {
                Ok(v) => v,
                Err(_) => previous.clone(),
            };
            return Err(divergence(group, &slots, &previous, &next, iterations));
        }
        iterations += 1;
        let mut next = Vec::with_capacity(slots.len());
        for (i, id) in &slots {
            match solver.apply(&group.defs[*i], id, &state) {
                Ok(v) => next.push(v),
                Err(EvalError::Overflow(_)) => {
                    let mut partial = next.clone();
                    partial.extend(current[partial.len()..].iter().cloned());
                    partial[next.len()] = Value::Undef(group.defs[*i].ty.clone());
                    return Err(divergence(group, &slots, &current, &partial, iterations));
                }
                Err(e) => return Err(e.into()),
            }
        }
        for (k, (i, id)) in slots.iter().enumerate() {
            let d = &group.defs[*i];
            if d.ty.is_collection() && !warned[*i] && !contained(&current[k], &next[k]) {
                warned[*i] = true;
                warnings.push(Diagnostic::warning(
                    d.pos,
                    format!(
                        "{} is not monotone: the value for '{id}' shrank from {} to {}",
                        d.id, current[k], next[k]
                    ),
                ));
            }
        }
        let stable = current.iter().zip(&next).all(|(a, b)| strong_equal(a, b));
        current = next;
        if stable {
            return Ok(Solution {
                snapshot: install(&current),
                iterations,
                warnings,
            });
        }
    }
}

fn divergence(
    group: &DerivedGroup,
    slots: &Slots,
    prev: &[Value],
    last: &[Value],
    iterations: usize,
) -> FixpointError {
    let mut attrs: Vec<&str> = Vec::new();
    let mut iterates = Vec::new();
    for (k, (i, id)) in slots.iter().enumerate() {
        if !strong_equal(&prev[k], &last[k]) {
            let d = &group.defs[*i];
            if !attrs.contains(&d.id.as_str()) {
                attrs.push(&d.id);
            }
            iterates.push(Iterate {
                object: id.clone(),
                previous: prev[k].clone(),
                last: last[k].clone(),
            });
        }
    }
    if attrs.is_empty() {
        attrs = group.defs.iter().map(|d| d.id.as_str()).collect();
    }
    FixpointError::Divergence {
        attr: attrs.join(", "),
        iterations,
        iterates,
    }
}

/// Verdict of one loose equation for one object.
#[derive(Debug, Clone, PartialEq)]
pub struct LooseRow {
    pub id: String,
    pub object: ObjectId,
    pub verdict: Bool3,
}

/// Checks the snapshot's explicit values against each equation. Any
/// solution passes, minimal or not. A collection-valued value passes when it
/// contains everything its right-hand side yields; scalars must match
/// exactly.
pub fn check_loose(
    group: &DerivedGroup,
    snap: &Snapshot,
    model: &ClassModel,
    queries: &QueryTable,
) -> Result<Vec<LooseRow>, FixpointError> {
    let solver = Solver { model, queries };
    let slots = solver.slots(group, snap)?;
    let mut rows = Vec::new();
    for (i, id) in &slots {
        let d = &group.defs[*i];
        let Some(given) = snap.attr(id, &d.attr) else {
            return Err(FixpointError::MissingValue {
                attr: d.id.clone(),
                object: id.clone(),
            });
        };
        let computed = solver.apply(d, id, snap)?;
        rows.push(LooseRow {
            id: d.id.clone(),
            object: id.clone(),
            verdict: if d.ty.is_collection() {
                match (&computed, given) {
                    (Value::Undef(_), _) | (_, Value::Undef(_)) => Bool3::Undef,
                    _ => Bool3::from(contained(&computed, given)),
                }
            } else {
                Bool3::from(strong_equal(given, &computed))
            },
        });
    }
    Ok(rows)
}

/// Whether the minimal solution is pointwise contained in `candidate`.
pub fn minimality_certificate(
    group: &DerivedGroup,
    snap: &Snapshot,
    candidate: &Snapshot,
    model: &ClassModel,
    queries: &QueryTable,
    max_iter: usize,
) -> Result<bool, FixpointError> {
    if !group.set_valued() {
        return Err(FixpointError::Inapplicable);
    }
    let minimal = solve_minimal(group, snap, model, queries, max_iter)?.snapshot;
    let solver = Solver { model, queries };
    for (i, id) in solver.slots(group, snap)? {
        let attr = &group.defs[i].attr;
        let empty = Value::set([]);
        let small = minimal.attr(&id, attr).unwrap_or(&empty);
        let Some(big) = candidate.attr(&id, attr) else {
            return Err(FixpointError::MissingValue {
                attr: group.defs[i].id.clone(),
                object: id,
            });
        };
        if !contained(small, big) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of resolving every derived group of a constraint set.
#[derive(Debug, Clone)]
pub struct Resolution {
    pub snapshot: Snapshot,
    pub loose: Vec<LooseRow>,
    pub warnings: Vec<Diagnostic>,
}

/// Solves executable groups in dependency order and checks loose groups
/// against the values the snapshot gives.
pub fn resolve_all(
    groups: &[DerivedGroup],
    snap: &Snapshot,
    model: &ClassModel,
    queries: &QueryTable,
    max_iter: usize,
) -> Result<Resolution, FixpointError> {
    let mut snapshot = snap.clone();
    let mut loose = Vec::new();
    let mut warnings = Vec::new();
    for g in groups {
        if g.is_loose() {
            loose.extend(check_loose(g, &snapshot, model, queries)?);
        } else {
            let s = solve_minimal(g, &snapshot, model, queries, max_iter)?;
            warnings.extend(s.warnings);
            snapshot = s.snapshot;
        }
    }
    Ok(Resolution {
        snapshot,
        loose,
        warnings,
    })
}

impl fmt::Display for LooseRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | {} | {}", self.id, self.object, self.verdict)
    }
}
