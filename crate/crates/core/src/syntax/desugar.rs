use alloc::sync::Arc;
use alloc::vec;

use super::{Atomic, BoolExpr, CmpOp, Decl, Diff, Expr, ExprKind, Func, Program, SourceUnit};

/// Rewrites surface comparisons into the core condition language and
/// normalises unary minus to a negative literal or `0 - e`.
pub fn desugar(unit: &SourceUnit) -> SourceUnit {
    let decls = unit
        .decls
        .iter()
        .map(|d| match d {
            Decl::Assign { var, expr, span } => Decl::Assign {
                var: var.clone(),
                expr: desugar_expr(expr),
                span: *span,
            },
            other => other.clone(),
        })
        .collect();
    SourceUnit {
        decls,
        body: desugar_program(&unit.body),
    }
}

pub(crate) fn desugar_program(p: &Program) -> Program {
    match p {
        Program::Atom(Atomic::Assign { var, expr, span }) => Program::Atom(Atomic::Assign {
            var: var.clone(),
            expr: desugar_expr(expr),
            span: *span,
        }),
        Program::Atom(Atomic::Diff(d)) => Program::Atom(Atomic::Diff(Diff {
            eqs: d.eqs.iter().map(|(v, e)| (v.clone(), desugar_expr(e))).collect(),
            duration: desugar_expr(&d.duration),
            span: d.span,
        })),
        Program::Seq(a, b) => Program::Seq(Arc::new(desugar_program(a)), Arc::new(desugar_program(b))),
        Program::If(c, a, b) => Program::If(
            desugar_bool(c),
            Arc::new(desugar_program(a)),
            Arc::new(desugar_program(b)),
        ),
        Program::While(c, body) => Program::While(desugar_bool(c), Arc::new(desugar_program(body))),
    }
}

pub(crate) fn desugar_expr(e: &Expr) -> Expr {
    match &e.kind {
        ExprKind::Var(_) | ExprKind::Const(_) => e.clone(),
        ExprKind::Apply(Func::Neg, args) => {
            let inner = desugar_expr(&args[0]);
            match inner.kind {
                ExprKind::Const(v) => Expr::new(ExprKind::Const(-v), e.span),
                _ => Expr::new(
                    ExprKind::Apply(Func::Sub, vec![Expr::new(ExprKind::Const(0.0), e.span), inner]),
                    e.span,
                ),
            }
        }
        ExprKind::Apply(f, args) => Expr::new(ExprKind::Apply(*f, args.iter().map(desugar_expr).collect()), e.span),
    }
}

pub(crate) fn desugar_bool(b: &BoolExpr) -> BoolExpr {
    match b {
        BoolExpr::True => BoolExpr::True,
        BoolExpr::False => BoolExpr::False,
        BoolExpr::Leq(l, r) => BoolExpr::Leq(desugar_expr(l), desugar_expr(r)),
        BoolExpr::And(l, r) => BoolExpr::and(desugar_bool(l), desugar_bool(r)),
        BoolExpr::Or(l, r) => BoolExpr::or(desugar_bool(l), desugar_bool(r)),
        BoolExpr::Not(a) => BoolExpr::negate(desugar_bool(a)),
        BoolExpr::Sugar(op, l, r) => {
            let (l, r) = (desugar_expr(l), desugar_expr(r));
            match op {
                CmpOp::Lt => BoolExpr::negate(BoolExpr::Leq(r, l)),
                CmpOp::Gt => BoolExpr::negate(BoolExpr::Leq(l, r)),
                CmpOp::Geq => BoolExpr::Leq(r, l),
                CmpOp::Eq => BoolExpr::and(BoolExpr::Leq(l.clone(), r.clone()), BoolExpr::Leq(r, l)),
                CmpOp::Neq => BoolExpr::negate(BoolExpr::and(BoolExpr::Leq(l.clone(), r.clone()), BoolExpr::Leq(r, l))),
            }
        }
    }
}
