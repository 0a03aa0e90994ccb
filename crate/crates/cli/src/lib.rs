//! The `oclk` command pipeline: load inputs, type-check, resolve derived
//! attributes, check, and render the verdicts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use oclk_core::contracts::{
    check_constancy, check_invariants, check_operation, operation_rows, CheckReport, InvocationDoc,
    OpInvocation, Verdict,
};
use oclk_core::dynamics::{check_action, check_called, load_trace, Trace};
use oclk_core::eval::{eval, Env, EvalCtx, QueryTable, Value};
use oclk_core::fixpoint::{group_derived, resolve_all, DerivedGroup, DEFAULT_MAX_ITER};
use oclk_core::model::{
    load_class_model, load_snapshot, validate_multiplicities, ClassModel, ObjectId, Snapshot,
};
use oclk_core::syntax::{parse_constraint_file, parse_expression_text};
use oclk_core::types::{typecheck_expression, ExprScope, Type, TypedFile, TypedOperation};
use oclk_core::{Diagnostic, Diagnostics, Severity};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Machine,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Option<PathBuf>,
    /// One snapshot, or a pre and a post snapshot.
    pub snapshots: Vec<PathBuf>,
    pub constraints: Vec<PathBuf>,
    pub invocations: Vec<PathBuf>,
    pub trace: Option<PathBuf>,
    pub max_iter: usize,
    pub format: Format,
    pub self_id: Option<String>,
    pub undefined_ok: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            snapshots: Vec::new(),
            constraints: Vec::new(),
            invocations: Vec::new(),
            trace: None,
            max_iter: DEFAULT_MAX_ITER,
            format: Format::Text,
            self_id: None,
            undefined_ok: false,
        }
    }
}

/// What a command printed and how it exits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Errors that stop a command before or during checking.
struct Failure(Vec<String>);

impl From<Diagnostics> for Failure {
    fn from(d: Diagnostics) -> Self {
        Failure(d.iter().map(|d| d.to_string()).collect())
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure(vec![format!("error: {s}")])
    }
}

type Res<T> = Result<T, Failure>;

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", display(path)).into())
}

fn load_model(cfg: &RunConfig) -> Res<ClassModel> {
    match &cfg.model {
        Some(p) => Ok(load_class_model(&read(p)?).map_err(|d| d.in_file(&display(p)))?),
        None => Err("no model given; use --model".to_string().into()),
    }
}

fn load_snap(path: &Path, model: &ClassModel) -> Res<Snapshot> {
    Ok(load_snapshot(&read(path)?, model).map_err(|d| d.in_file(&display(path)))?)
}

fn load_constraints(paths: &[PathBuf], model: &ClassModel) -> Res<TypedFile> {
    let mut out = TypedFile::default();
    let mut diags = Vec::new();
    for p in paths {
        let name = display(p);
        let parsed = match parse_constraint_file(&read(p)?) {
            Ok(f) => f,
            Err(d) => {
                diags.extend(d.in_file(&name).0);
                continue;
            }
        };
        match oclk_core::types::typecheck_file(&parsed, model) {
            Ok(t) => out.extend(t),
            Err(d) => diags.extend(d.in_file(&name).0),
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(Diagnostics(diags).into())
    }
}

fn model_diag(model: &Option<PathBuf>) -> impl Fn(Diagnostics) -> Failure + '_ {
    move |d| match model {
        Some(p) => d.in_file(&display(p)).into(),
        None => d.into(),
    }
}

/// Everything `check` and `trace` need, loaded and validated up front.
struct Loaded {
    model: ClassModel,
    file: TypedFile,
    queries: QueryTable,
    groups: Vec<DerivedGroup>,
    snapshots: Vec<(String, Snapshot)>,
    invocations: Vec<(usize, InvocationDoc, Snapshot, Snapshot)>,
    trace: Option<Trace>,
    warnings: Vec<Diagnostic>,
}

fn load_all(cfg: &RunConfig, need_snapshot: bool) -> Res<Loaded> {
    let model = load_model(cfg)?;
    let file = load_constraints(&cfg.constraints, &model)?;
    let queries = QueryTable::build(&model).map_err(model_diag(&cfg.model))?;
    let groups = group_derived(&file.derived)?;
    let mut warnings = Vec::new();

    if cfg.snapshots.len() > 2 {
        return Err("at most two snapshots (pre and post) may be given"
            .to_string()
            .into());
    }
    if need_snapshot && cfg.snapshots.is_empty() {
        return Err("no snapshot given; use --snapshot".to_string().into());
    }
    let labels: &[&str] = if cfg.snapshots.len() == 2 {
        &["pre", "post"]
    } else {
        &[""]
    };
    let mut snapshots = Vec::new();
    for (p, label) in cfg.snapshots.iter().zip(labels) {
        let s = load_snap(p, &model)?;
        for d in validate_multiplicities(&s, &model) {
            warnings.push(
                Diagnostic {
                    severity: Severity::Warning,
                    ..d
                }
                .in_file(display(p)),
            );
        }
        snapshots.push((label.to_string(), s));
    }

    let mut invocations = Vec::new();
    for p in &cfg.invocations {
        let name = display(p);
        let doc = InvocationDoc::parse(&read(p)?).map_err(|e| format!("{name}: {e}"))?;
        let Some(k) = file.operations.iter().position(|s| doc.names(s)) else {
            return Err(format!("{name}: no operation specification matches '{}'", doc.op).into());
        };
        let dir = p.parent().unwrap_or(Path::new("."));
        let pick = |given: &Option<String>, fallback: usize, which: &str| -> Res<Snapshot> {
            match given {
                Some(rel) => load_snap(&dir.join(rel), &model),
                None if snapshots.len() == 2 => Ok(snapshots[fallback].1.clone()),
                None => Err(format!("{name}: no {which} snapshot; name one in the invocation or pass two --snapshot").into()),
            }
        };
        let pre = pick(&doc.pre_snapshot, 0, "pre")?;
        let post = pick(&doc.post_snapshot, 1, "post")?;
        invocations.push((k, doc, pre, post));
    }

    let trace = match &cfg.trace {
        None => None,
        Some(p) => {
            let dir = p.parent().unwrap_or(Path::new(".")).to_path_buf();
            let reader = |rel: &str| {
                fs::read_to_string(dir.join(rel)).map_err(|e| format!("cannot read {rel}: {e}"))
            };
            Some(load_trace(&read(p)?, &model, &reader).map_err(|d| d.in_file(&display(p)))?)
        }
    };

    Ok(Loaded {
        model,
        file,
        queries,
        groups,
        snapshots,
        invocations,
        trace,
        warnings,
    })
}

impl Loaded {
    /// Fills in executable derived attributes; loose ones are checked and
    /// their rows returned.
    fn resolve(
        &self,
        snap: &Snapshot,
        max_iter: usize,
        notes: &mut Vec<Diagnostic>,
    ) -> Res<(Snapshot, CheckReport)> {
        let r = resolve_all(&self.groups, snap, &self.model, &self.queries, max_iter)
            .map_err(|e| Failure(vec![format!("error: {}", e.report())]))?;
        notes.extend(r.warnings);
        let mut rows = CheckReport::default();
        for l in r.loose {
            let pos = self
                .file
                .derived
                .iter()
                .find(|d| d.id == l.id)
                .map(|d| d.pos)
                .unwrap_or_default();
            rows.push(l.id, l.object.to_string(), l.verdict.into(), pos);
        }
        Ok((r.snapshot, rows))
    }

    fn dynamics(&self, max_iter: usize, notes: &mut Vec<Diagnostic>) -> Res<CheckReport> {
        let mut report = CheckReport::default();
        let Some(trace) = &self.trace else {
            return Ok(report);
        };
        let mut resolved = trace.clone();
        for (_, s) in &mut resolved.snapshots {
            *s = self.resolve(s, max_iter, notes)?.0;
        }
        for op in self.file.operations.iter().filter(|o| o.called.is_some()) {
            report.extend(
                check_called(op, &resolved, &self.model, &self.queries).map_err(eval_failure)?,
            );
        }
        for a in &self.file.actions {
            report.extend(
                check_action(a, &resolved, &self.model, &self.queries).map_err(eval_failure)?,
            );
        }
        Ok(report)
    }
}

fn eval_failure(e: impl std::fmt::Display) -> Failure {
    Failure(vec![format!("error: {e}")])
}

fn at(binding: String, label: &str) -> String {
    if label.is_empty() {
        binding
    } else {
        format!("{binding} @ {label}")
    }
}

fn relabel(report: CheckReport, label: &str) -> CheckReport {
    let mut out = CheckReport {
        notes: report.notes,
        ..CheckReport::default()
    };
    for r in report.rows {
        out.push(r.constraint, at(r.binding, label), r.verdict, r.pos);
    }
    out
}

fn check_invocation(
    l: &Loaded,
    spec: &TypedOperation,
    doc: &InvocationDoc,
    pre: &Snapshot,
    post: &Snapshot,
    max_iter: usize,
    notes: &mut Vec<Diagnostic>,
) -> Res<CheckReport> {
    let pre = l.resolve(pre, max_iter, notes)?.0;
    let post = l.resolve(post, max_iter, notes)?.0;
    let inv: OpInvocation = doc
        .bind(spec, &l.model, pre, post)
        .map_err(|e| format!("invocation of {}: {e}", doc.op))?;
    let v = check_operation(spec, &inv, &l.model, &l.queries).map_err(eval_failure)?;
    Ok(operation_rows(spec, &inv, v))
}

/// Runs the full checking pipeline.
pub fn cmd_check(cfg: &RunConfig) -> Outcome {
    finish(cfg, run_check(cfg))
}

fn run_check(cfg: &RunConfig) -> Res<(CheckReport, Vec<Diagnostic>)> {
    let l = load_all(cfg, cfg.invocations.is_empty())?;
    let mut notes = l.warnings.clone();
    let mut report = CheckReport::default();
    let mut resolved = Vec::new();
    for (label, snap) in &l.snapshots {
        let (s, loose) = l.resolve(snap, cfg.max_iter, &mut notes)?;
        report.extend(relabel(loose, label));
        let inv = check_invariants(&l.file, &s, &l.model, &l.queries).map_err(eval_failure)?;
        report.extend(relabel(inv, label));
        resolved.push(s);
    }
    for (k, doc, pre, post) in &l.invocations {
        report.extend(check_invocation(
            &l,
            &l.file.operations[*k],
            doc,
            pre,
            post,
            cfg.max_iter,
            &mut notes,
        )?);
    }
    if let [pre, post] = resolved.as_slice() {
        for d in check_constancy(&l.model, &l.file.constants, pre, post) {
            if d.is_error() {
                report.push("constancy", d.message, Verdict::Violated, d.pos);
            } else {
                notes.push(d);
            }
        }
    }
    report.extend(l.dynamics(cfg.max_iter, &mut notes)?);
    Ok((report, notes))
}

/// Checks only the `called` and `action` constraints against a trace.
pub fn cmd_trace(cfg: &RunConfig) -> Outcome {
    let run = || -> Res<(CheckReport, Vec<Diagnostic>)> {
        if cfg.trace.is_none() {
            return Err("no trace given; use --trace".to_string().into());
        }
        let l = load_all(cfg, false)?;
        let mut notes = l.warnings.clone();
        let report = l.dynamics(cfg.max_iter, &mut notes)?;
        Ok((report, notes))
    };
    finish(cfg, run())
}

/// Type-checks the constraint files and the model's query bodies.
pub fn cmd_typecheck(cfg: &RunConfig) -> Outcome {
    let run = || -> Res<usize> {
        let model = load_model(cfg)?;
        let file = load_constraints(&cfg.constraints, &model)?;
        QueryTable::build(&model).map_err(model_diag(&cfg.model))?;
        group_derived(&file.derived)?;
        Ok(file.invariants.len()
            + file.derived.len()
            + file.constants.len()
            + file.operations.len()
            + file.actions.len())
    };
    match run() {
        Ok(n) => Outcome {
            code: EXIT_OK,
            stdout: match cfg.format {
                Format::Text => format!("ok: {n} declarations well-typed\n"),
                Format::Machine => format!("ok\t{n}\n"),
            },
            stderr: String::new(),
        },
        Err(f) => error_outcome(f),
    }
}

/// Parses, type-checks and evaluates one expression.
pub fn cmd_eval(cfg: &RunConfig, expression: &str) -> Outcome {
    let run = || -> Res<(Value, Vec<Diagnostic>)> {
        let model = match &cfg.model {
            Some(_) => load_model(cfg)?,
            None => load_class_model("").map_err(Failure::from)?,
        };
        let file = load_constraints(&cfg.constraints, &model)?;
        let queries = QueryTable::build(&model).map_err(model_diag(&cfg.model))?;
        let groups = group_derived(&file.derived)?;
        if cfg.snapshots.len() > 2 {
            return Err("at most two snapshots (pre and post) may be given"
                .to_string()
                .into());
        }
        let mut notes = Vec::new();
        let mut snaps = Vec::new();
        for p in &cfg.snapshots {
            let s = load_snap(p, &model)?;
            let r = resolve_all(&groups, &s, &model, &queries, cfg.max_iter)
                .map_err(|e| Failure(vec![format!("error: {}", e.report())]))?;
            notes.extend(r.warnings);
            snaps.push(r.snapshot);
        }
        let current = snaps.last().cloned().unwrap_or_else(Snapshot::empty);
        let mut env = Env::new();
        let mut scope = ExprScope {
            self_type: None,
            vars: Vec::new(),
            post: snaps.len() == 2,
        };
        if let Some(id) = &cfg.self_id {
            let oid = ObjectId::new(id.clone());
            let Some(o) = current.object(&oid) else {
                return Err(format!("--self: no object '{id}' in the snapshot").into());
            };
            scope.self_type = Some(Type::Class(o.class.clone()));
            env.bind("self", Value::Obj(oid));
        }
        let parsed = parse_expression_text(expression).map_err(|d| d.in_file("<expression>"))?;
        let typed =
            typecheck_expression(&parsed, &model, &scope).map_err(|d| d.in_file("<expression>"))?;
        let mut cx = EvalCtx::new(&model, &current, &queries);
        if let [pre, _] = snaps.as_slice() {
            cx = cx.with_pre(pre);
        }
        let v = eval(&typed, &env, &cx).map_err(eval_failure)?;
        Ok((v, notes))
    };
    match run() {
        Ok((v, notes)) => Outcome {
            code: if v.is_undef() { EXIT_FAILED } else { EXIT_OK },
            stdout: format!("{v}\n"),
            stderr: render_notes(&notes),
        },
        Err(f) => error_outcome(f),
    }
}

fn render_notes(notes: &[Diagnostic]) -> String {
    notes.iter().map(|d| format!("{d}\n")).collect()
}

fn error_outcome(f: Failure) -> Outcome {
    let mut stderr = String::new();
    for line in f.0 {
        let _ = writeln!(stderr, "{line}");
    }
    Outcome {
        code: EXIT_ERROR,
        stdout: String::new(),
        stderr,
    }
}

/// Exit code for a finished report.
pub fn exit_code(report: &CheckReport, undefined_ok: bool) -> i32 {
    if report.count(Verdict::Violated) > 0
        || (!undefined_ok && report.count(Verdict::Undefined) > 0)
    {
        EXIT_FAILED
    } else {
        EXIT_OK
    }
}

/// Renders the verdict rows. Text output groups violated and undefined
/// verdicts apart from each other; machine output is one tab-separated
/// line per verdict.
pub fn render(report: &CheckReport, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Machine => {
            for r in &report.rows {
                let _ = writeln!(out, "{}\t{}\t{}", r.verdict, r.constraint, r.binding);
            }
        }
        Format::Text => {
            for v in [Verdict::Violated, Verdict::Undefined, Verdict::Satisfied] {
                let n = report.count(v);
                if n == 0 {
                    continue;
                }
                let _ = writeln!(out, "{v} ({n}):");
                for r in report.with_verdict(v) {
                    let _ = writeln!(out, "  {} | {}", r.constraint, r.binding);
                }
            }
            let _ = writeln!(
                out,
                "{} satisfied, {} violated, {} undefined",
                report.count(Verdict::Satisfied),
                report.count(Verdict::Violated),
                report.count(Verdict::Undefined)
            );
        }
    }
    out
}

fn finish(cfg: &RunConfig, run: Res<(CheckReport, Vec<Diagnostic>)>) -> Outcome {
    match run {
        Ok((mut report, notes)) => {
            report.sort();
            let mut all_notes = notes;
            all_notes.extend(report.notes.iter().cloned());
            Outcome {
                code: exit_code(&report, cfg.undefined_ok),
                stdout: render(&report, cfg.format),
                stderr: render_notes(&all_notes),
            }
        }
        Err(f) => error_outcome(f),
    }
}

/// Runs `check` and returns the report itself, for callers that want the
/// rows rather than rendered text.
pub fn check_report(cfg: &RunConfig) -> Result<CheckReport, Vec<String>> {
    run_check(cfg)
        .map(|(mut r, _)| {
            r.sort();
            r
        })
        .map_err(|f| f.0)
}
