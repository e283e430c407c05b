//! Strict evaluation of expressions and conditions.

use alloc::string::{String, ToString};

use super::{Env, ErrorKind};
use crate::syntax::{pretty_expr, BoolExpr, CmpOp, Expr, ExprKind, Func, Span};

/// A failed evaluation: what went wrong and in which subexpression.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{kind:?} in '{text}'")]
pub struct EvalError {
    pub kind: ErrorKind,
    /// Rendering of the offending subexpression (a variable name for
    /// uninitialised reads).
    pub text: String,
    pub span: Span,
}

impl EvalError {
    pub(crate) fn at(kind: ErrorKind, e: &Expr) -> Self {
        EvalError {
            kind,
            text: pretty_expr(e),
            span: e.span,
        }
    }
}

pub fn eval_expr(env: &Env, e: &Expr) -> Result<f64, EvalError> {
    match &e.kind {
        ExprKind::Const(v) => Ok(*v),
        ExprKind::Var(name) => env.get(name).ok_or_else(|| EvalError {
            kind: ErrorKind::UninitializedVariable,
            text: name.to_string(),
            span: e.span,
        }),
        ExprKind::Apply(f, args) => {
            let x = eval_expr(env, &args[0])?;
            let y = match args.get(1) {
                Some(arg) => eval_expr(env, arg)?,
                None => 0.0,
            };
            apply(*f, x, y).map_err(|kind| EvalError::at(kind, e))
        }
    }
}

/// Applies a function symbol to already evaluated arguments (`y` is ignored
/// for unary symbols).
pub(crate) fn apply(f: Func, x: f64, y: f64) -> Result<f64, ErrorKind> {
    let v = match f {
        Func::Add => x + y,
        Func::Sub => x - y,
        Func::Mul => x * y,
        Func::Div if y == 0.0 => return Err(ErrorKind::DivisionByZero),
        Func::Div => x / y,
        Func::Neg => -x,
        Func::Sqrt if x < 0.0 => return Err(ErrorKind::DomainError),
        Func::Sqrt => libm::sqrt(x),
        Func::Exp => libm::exp(x),
        Func::Ln if x <= 0.0 => return Err(ErrorKind::DomainError),
        Func::Ln => libm::log(x),
        Func::Sin => libm::sin(x),
        Func::Cos => libm::cos(x),
        Func::Tan => libm::tan(x),
        Func::Min => x.min(y),
        Func::Max => x.max(y),
        Func::Pow => libm::pow(x, y),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ErrorKind::DomainError)
    }
}

/// Evaluates a condition. Both operands of `&&` and `||` are always
/// evaluated, so an undefined operand is never masked.
pub fn eval_bool(env: &Env, b: &BoolExpr) -> Result<bool, EvalError> {
    match b {
        BoolExpr::True => Ok(true),
        BoolExpr::False => Ok(false),
        BoolExpr::Leq(l, r) => Ok(eval_expr(env, l)? <= eval_expr(env, r)?),
        BoolExpr::And(l, r) => {
            let (l, r) = (eval_bool(env, l)?, eval_bool(env, r)?);
            Ok(l && r)
        }
        BoolExpr::Or(l, r) => {
            let (l, r) = (eval_bool(env, l)?, eval_bool(env, r)?);
            Ok(l || r)
        }
        BoolExpr::Not(a) => Ok(!eval_bool(env, a)?),
        BoolExpr::Sugar(op, l, r) => {
            let (l, r) = (eval_expr(env, l)?, eval_expr(env, r)?);
            Ok(match op {
                CmpOp::Lt => l < r,
                CmpOp::Gt => l > r,
                CmpOp::Geq => l >= r,
                CmpOp::Eq => l == r,
                CmpOp::Neq => l != r,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{desugar, parse, Program};

    fn expr(src: &str) -> Expr {
        match desugar(&parse(&alloc::format!("z := {src}")).unwrap()).body {
            Program::Atom(crate::syntax::Atomic::Assign { expr, .. }) => expr,
            _ => unreachable!(),
        }
    }

    fn cond(src: &str) -> BoolExpr {
        match desugar(&parse(&alloc::format!("while {src} do {{ z := 1 }}")).unwrap()).body {
            Program::While(b, _) => b,
            _ => unreachable!(),
        }
    }

    #[test]
    fn division_by_zero_is_reported() {
        let env = Env::from_pairs([("x", 0.0)]);
        let err = eval_expr(&env, &expr("1/x")).unwrap_err();
        assert_eq!(err.kind, ErrorKind::DivisionByZero);
        assert_eq!(err.text, "1 / x");
    }

    #[test]
    fn arithmetic_and_named_functions() {
        let env = Env::from_pairs([("x", 1.0)]);
        assert_eq!(eval_expr(&env, &expr("x + 1")).unwrap(), 2.0);
        assert_eq!(eval_expr(&Env::new(), &expr("sqrt(3)")).unwrap(), libm::sqrt(3.0));
        assert_eq!(eval_expr(&Env::new(), &expr("max(2, pow(2, 3))")).unwrap(), 8.0);
    }

    #[test]
    fn domain_errors() {
        let env = Env::new();
        for src in ["sqrt(-1)", "ln(0)", "exp(1000)", "pow(-8, 0.5)"] {
            assert_eq!(
                eval_expr(&env, &expr(src)).unwrap_err().kind,
                ErrorKind::DomainError,
                "{src}"
            );
        }
    }

    #[test]
    fn missing_variable() {
        let err = eval_expr(&Env::new(), &expr("y * 2")).unwrap_err();
        assert_eq!((err.kind, err.text.as_str()), (ErrorKind::UninitializedVariable, "y"));
    }

    #[test]
    fn conditions_do_not_short_circuit() {
        let env = Env::from_pairs([("x", 0.0)]);
        assert!(eval_bool(&env, &cond("1/x <= 1 || tt")).is_err());
        assert!(!eval_bool(&env, &cond("tt && ff")).unwrap());
        assert!(eval_bool(&Env::from_pairs([("x", 1.0)]), &cond("x <= 1")).unwrap());
    }
}
