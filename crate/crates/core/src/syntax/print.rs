//! Pretty printers. `print_expr` inserts only the parentheses precedence
//! requires; `print_full` parenthesizes every operator application.

use super::ast::*;
use crate::eval::value::{format_real, quote_string};

const UNARY: u8 = 7;
const POSTFIX: u8 = 8;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.level(),
        ExprKind::Not(_) | ExprKind::Neg(_) => UNARY,
        _ => POSTFIX,
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, false);
    out
}

pub fn print_full(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, true);
    out
}

fn child(out: &mut String, e: &Expr, parens: bool, full: bool) {
    if parens {
        out.push('(');
        write_expr(out, e, full);
        out.push(')');
    } else {
        write_expr(out, e, full);
    }
}

fn list(out: &mut String, items: &[Expr], full: bool) {
    for (i, a) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a, full);
    }
}

fn write_expr(out: &mut String, e: &Expr, full: bool) {
    match &e.kind {
        ExprKind::Lit(Literal::Bool(b)) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Lit(Literal::Int(i)) => out.push_str(&i.to_string()),
        ExprKind::Lit(Literal::Real(r)) => out.push_str(&format_real(*r)),
        ExprKind::Lit(Literal::Str(s)) => out.push_str(&quote_string(s)),
        ExprKind::SelfRef => out.push_str("self"),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Path(p) => out.push_str(&p.join("::")),
        ExprKind::CollLit(k, items) => {
            out.push_str(k.name());
            out.push('{');
            list(out, items, full);
            out.push('}');
        }
        ExprKind::Nav { source, name } => {
            child(out, source, level(source) < POSTFIX, full);
            out.push('.');
            out.push_str(name);
        }
        ExprKind::Call { source, name, args } => {
            if let Some(s) = source {
                child(out, s, level(s) < POSTFIX, full);
                out.push('.');
            }
            out.push_str(name);
            out.push('(');
            list(out, args, full);
            out.push(')');
        }
        ExprKind::Arrow {
            source,
            op,
            iters,
            args,
        } => {
            child(out, source, level(source) < POSTFIX, full);
            out.push_str("->");
            out.push_str(op);
            out.push('(');
            for (i, v) in iters.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&v.name);
                if let Some(t) = &v.ty {
                    out.push_str(" : ");
                    out.push_str(&t.to_string());
                }
            }
            if !iters.is_empty() {
                out.push_str(" | ");
            }
            list(out, args, full);
            out.push(')');
        }
        ExprKind::AtPre(inner) => {
            child(out, inner, level(inner) < POSTFIX, full);
            out.push_str("@pre");
        }
        ExprKind::Not(inner) => {
            out.push_str(if full { "(not " } else { "not " });
            child(out, inner, level(inner) < UNARY, full);
            if full {
                out.push(')');
            }
        }
        ExprKind::Neg(inner) => {
            if full {
                out.push('(');
            }
            out.push('-');
            let nested_minus = matches!(inner.kind, ExprKind::Neg(_));
            child(out, inner, nested_minus || level(inner) < UNARY, full);
            if full {
                out.push(')');
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            if full {
                out.push('(');
            }
            let l = op.level();
            let (lp, rp) = if op.is_right_assoc() {
                (level(lhs) <= l, level(rhs) < l)
            } else {
                (level(lhs) < l, level(rhs) <= l)
            };
            child(out, lhs, lp && !full, full);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            child(out, rhs, rp && !full, full);
            if full {
                out.push(')');
            }
        }
        ExprKind::If { cond, then, els } => {
            out.push_str("if ");
            write_expr(out, cond, full);
            out.push_str(" then ");
            write_expr(out, then, full);
            out.push_str(" else ");
            write_expr(out, els, full);
            out.push_str(" endif");
        }
        ExprKind::Let {
            name,
            ty,
            value,
            body,
        } => {
            out.push_str("(let ");
            out.push_str(name);
            if let Some(t) = ty {
                out.push_str(" : ");
                out.push_str(&t.to_string());
            }
            out.push_str(" = ");
            write_expr(out, value, full);
            out.push_str(" in ");
            write_expr(out, body, full);
            out.push(')');
        }
    }
}

fn write_context(out: &mut String, c: &ClassContext) {
    if let Some(n) = &c.self_name {
        out.push_str(n);
        out.push_str(" : ");
    }
    out.push_str(&c.class_text());
}

fn write_params(out: &mut String, ps: &[Param]) {
    out.push('(');
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&p.name);
        out.push_str(" : ");
        out.push_str(&p.ty.to_string());
    }
    out.push(')');
}

fn write_messages(out: &mut String, items: &[MessageItem]) {
    for (i, m) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match m {
            MessageItem::Send {
                target, op, args, ..
            } => {
                if let Some(t) = target {
                    child(out, t, level(t) < POSTFIX, false);
                    out.push('.');
                }
                out.push_str(op);
                out.push('(');
                list(out, args, false);
                out.push(')');
            }
            MessageItem::If {
                cond, then, els, ..
            } => {
                out.push_str("if ");
                write_expr(out, cond, false);
                out.push_str(" then ");
                write_messages(out, then);
                if !els.is_empty() {
                    out.push_str(" else ");
                    write_messages(out, els);
                }
                out.push_str(" endif");
            }
        }
    }
}

fn mode_word(m: RecursionMode) -> &'static str {
    match m {
        RecursionMode::Default => "",
        RecursionMode::Executable => " executable",
        RecursionMode::Loose => " loose",
    }
}

fn invariant_head(out: &mut String, c: &ClassContext, mode: RecursionMode, name: &Option<String>) {
    out.push_str("context ");
    write_context(out, c);
    out.push_str(mode_word(mode));
    out.push_str(" invariant");
    if let Some(n) = name {
        out.push(' ');
        out.push_str(n);
    }
    out.push_str(":\n  ");
}

pub fn print_decl(d: &ConstraintDecl) -> String {
    let mut out = String::new();
    match d {
        ConstraintDecl::Invariant(i) => {
            invariant_head(&mut out, &i.context, i.mode, &i.name);
            out.push_str(&print_expr(&i.body));
        }
        ConstraintDecl::Derived(b) => {
            invariant_head(&mut out, &b.context, b.mode, &b.name);
            for (k, def) in b.defs.iter().enumerate() {
                if k > 0 {
                    out.push_str(";\n  ");
                }
                out.push_str(&def.attr);
                out.push_str(" = ");
                out.push_str(&print_expr(&def.expr));
            }
        }
        ConstraintDecl::Constant(c) => {
            invariant_head(&mut out, &c.context, RecursionMode::Default, &c.name);
            let items: Vec<String> = c
                .items
                .iter()
                .map(|i| format!("constant {}{}", i.name, if i.query { "()" } else { "" }))
                .collect();
            out.push_str(&items.join("\n  "));
        }
        ConstraintDecl::Operation(o) => {
            match &o.receivers {
                Receivers::Class(c) => {
                    out.push_str("context ");
                    write_context(&mut out, c);
                    out.push_str("::");
                }
                Receivers::Joint(ps) => {
                    out.push_str("action ");
                    write_params(&mut out, ps);
                    out.push_str("::");
                }
                Receivers::Event => out.push_str("event "),
            }
            out.push_str(&o.op);
            write_params(&mut out, &o.params);
            if let Some(t) = &o.returns {
                out.push_str(" : ");
                out.push_str(&t.to_string());
            }
            if let Some(p) = &o.pre {
                out.push_str("\npre: ");
                out.push_str(&print_expr(p));
            }
            if let Some(p) = &o.post {
                out.push_str("\npost: ");
                out.push_str(&print_expr(p));
            }
            if let Some(c) = &o.called {
                out.push_str("\ncalled: ");
                write_messages(&mut out, c);
            }
        }
        ConstraintDecl::Action(a) => {
            out.push_str("context ");
            write_context(&mut out, &a.context);
            out.push_str(" action:\n  on ");
            out.push_str(&print_expr(&a.condition));
            out.push_str(" do ");
            write_messages(&mut out, &a.messages);
        }
    }
    out
}

pub fn print_file(f: &ConstraintFile) -> String {
    let mut out = String::new();
    for d in &f.decls {
        out.push_str(&print_decl(d));
        out.push_str("\n\n");
    }
    out
}
