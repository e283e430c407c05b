use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Atomic, BoolExpr, Decl, Expr, ExprKind, Func, Program, SourceUnit};

/// Shortest decimal text that reads back to exactly `v`.
pub fn fmt_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:?}")
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 4;

fn render_expr(e: &Expr) -> (String, u8) {
    match &e.kind {
        ExprKind::Var(name) => (name.clone(), PREC_ATOM),
        ExprKind::Const(v) if v.is_sign_negative() => (format!("({})", fmt_number(*v)), PREC_ATOM),
        ExprKind::Const(v) => (fmt_number(*v), PREC_ATOM),
        ExprKind::Apply(Func::Neg, args) => (format!("-({})", pretty_expr(&args[0])), PREC_UNARY),
        ExprKind::Apply(f, args) if f.is_infix() => {
            let prec = match f {
                Func::Add | Func::Sub => PREC_SUM,
                _ => PREC_PRODUCT,
            };
            let lhs = wrap_expr(&args[0], prec);
            let rhs = wrap_expr(&args[1], prec + 1);
            (format!("{lhs} {} {rhs}", f.name()), prec)
        }
        ExprKind::Apply(f, args) => {
            let args: Vec<String> = args.iter().map(pretty_expr).collect();
            (format!("{}({})", f.name(), args.join(", ")), PREC_ATOM)
        }
    }
}

fn wrap_expr(e: &Expr, min: u8) -> String {
    let (text, prec) = render_expr(e);
    if prec < min {
        format!("({text})")
    } else {
        text
    }
}

pub fn pretty_expr(e: &Expr) -> String {
    render_expr(e).0
}

fn render_bool(b: &BoolExpr) -> (String, u8) {
    match b {
        BoolExpr::True => ("tt".into(), 3),
        BoolExpr::False => ("ff".into(), 3),
        BoolExpr::Leq(l, r) => (format!("{} <= {}", pretty_expr(l), pretty_expr(r)), 3),
        BoolExpr::Sugar(op, l, r) => (format!("{} {} {}", pretty_expr(l), op.symbol(), pretty_expr(r)), 3),
        BoolExpr::Not(a) => (format!("!({})", pretty_bool(a)), 3),
        BoolExpr::And(a, b) => (format!("{} && {}", wrap_bool(a, 2), wrap_bool(b, 3)), 2),
        BoolExpr::Or(a, b) => (format!("{} || {}", wrap_bool(a, 1), wrap_bool(b, 2)), 1),
    }
}

fn wrap_bool(b: &BoolExpr, min: u8) -> String {
    let (text, prec) = render_bool(b);
    if prec < min {
        format!("({text})")
    } else {
        text
    }
}

pub fn pretty_bool(b: &BoolExpr) -> String {
    render_bool(b).0
}

fn write_program(p: &Program, out: &mut String) {
    match p {
        Program::Atom(Atomic::Assign { var, expr, .. }) => {
            out.push_str(&format!("{var} := {}", pretty_expr(expr)));
        }
        Program::Atom(Atomic::Diff(d)) => {
            let eqs: Vec<String> = d
                .eqs
                .iter()
                .map(|(v, e)| format!("{v}' = {}", pretty_expr(e)))
                .collect();
            out.push_str(&format!("{} for {}", eqs.join(", "), pretty_expr(&d.duration)));
        }
        Program::Seq(a, b) => {
            write_program(a, out);
            out.push_str(" ; ");
            write_program(b, out);
        }
        Program::If(c, a, b) => {
            out.push_str(&format!("if {} then {{ ", pretty_bool(c)));
            write_program(a, out);
            out.push_str(" } else { ");
            write_program(b, out);
            out.push_str(" }");
        }
        Program::While(c, body) => {
            out.push_str(&format!("while {} do {{ ", pretty_bool(c)));
            write_program(body, out);
            out.push_str(" }");
        }
    }
}

/// Single-line concrete syntax for a program; parsing it yields `p` again.
pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    write_program(p, &mut out);
    out
}

/// Concrete syntax for a whole unit: one declaration per line, then the body.
pub fn pretty_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    for d in &unit.decls {
        match d {
            Decl::Assign { var, expr, .. } => out.push_str(&format!("{var} := {};\n", pretty_expr(expr))),
            Decl::VarList { var, values, .. } => {
                let vals: Vec<String> = values.iter().map(|v| fmt_number(*v)).collect();
                out.push_str(&format!("{var} := {{{}}};\n", vals.join(", ")));
            }
        }
    }
    out.push_str(&pretty(&unit.body));
    out.push('\n');
    out
}
