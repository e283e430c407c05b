//! Canonical affine form of differential statements.
//!
//! Inside a differential statement every variable that is not one of the
//! statement's own differential variables is a constant whose value is read
//! from the environment at entry. Subexpressions built only from such
//! constants are folded to literals; what remains must be affine in the
//! differential variables.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Matrix;
use crate::semantics::eval::{apply, EvalError};
use crate::semantics::{Env, ErrorKind};
use crate::syntax::{Diff, Expr, ExprKind, Func, Span};

/// `x' = A x + b` over the differential variables `vars`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineSystem {
    pub vars: Vec<String>,
    pub a: Matrix,
    pub b: Vec<f64>,
    /// Span of the differential statement this system was derived from.
    pub origin: Span,
}

impl AffineSystem {
    pub fn new(vars: Vec<String>, a: Matrix, b: Vec<f64>) -> Self {
        assert_eq!(a.rows(), vars.len());
        assert_eq!(a.cols(), vars.len());
        assert_eq!(b.len(), vars.len());
        AffineSystem {
            vars,
            a,
            b,
            origin: Span::SYNTHETIC,
        }
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    /// Right-hand side `A x + b`.
    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.a.mul_vec(x);
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o += b;
        }
        out
    }
}

/// Replaces every maximal subexpression free of non-frozen variables by its
/// value, and moves literal factors of `*` to the left.
pub fn fold_constants(e: &Expr, env: &Env, frozen: &impl Fn(&str) -> bool) -> Result<Expr, EvalError> {
    match &e.kind {
        ExprKind::Const(_) => Ok(e.clone()),
        ExprKind::Var(name) if frozen(name) => match env.get(name) {
            Some(v) => Ok(Expr::new(ExprKind::Const(v), e.span)),
            None => Err(EvalError {
                kind: ErrorKind::UninitializedVariable,
                text: name.clone(),
                span: e.span,
            }),
        },
        ExprKind::Var(_) => Ok(e.clone()),
        ExprKind::Apply(f, args) => {
            let mut folded = args
                .iter()
                .map(|a| fold_constants(a, env, frozen))
                .collect::<Result<Vec<_>, _>>()?;
            if folded.iter().all(|a| a.as_const().is_some()) {
                let x = folded[0].as_const().unwrap_or(0.0);
                let y = folded.get(1).and_then(Expr::as_const).unwrap_or(0.0);
                let v = apply(*f, x, y).map_err(|kind| EvalError::at(kind, e))?;
                return Ok(Expr::new(ExprKind::Const(v), e.span));
            }
            if *f == Func::Mul && folded[1].as_const().is_some() {
                folded.swap(0, 1);
            }
            Ok(Expr::new(ExprKind::Apply(*f, folded), e.span))
        }
    }
}

/// Coefficients of an affine expression: `sum coef[j] * x_j + offset`.
#[derive(Clone, Debug, PartialEq)]
struct Affine {
    coef: Vec<f64>,
    offset: f64,
}

impl Affine {
    fn constant(n: usize, c: f64) -> Self {
        Affine {
            coef: vec![0.0; n],
            offset: c,
        }
    }

    fn map(mut self, f: impl Fn(f64) -> f64) -> Self {
        self.coef.iter_mut().for_each(|c| *c = f(*c));
        self.offset = f(self.offset);
        self
    }

    fn combine(mut self, other: Affine, f: impl Fn(f64, f64) -> f64) -> Self {
        for (a, b) in self.coef.iter_mut().zip(other.coef) {
            *a = f(*a, b);
        }
        self.offset = f(self.offset, other.offset);
        self
    }
}

fn affine_of(e: &Expr, vars: &[String]) -> Result<Affine, EvalError> {
    let n = vars.len();
    let nonlinear = || EvalError::at(ErrorKind::NonLinearODE, e);
    match &e.kind {
        ExprKind::Const(c) => Ok(Affine::constant(n, *c)),
        ExprKind::Var(name) => {
            let j = vars.iter().position(|v| v == name).ok_or_else(nonlinear)?;
            let mut a = Affine::constant(n, 0.0);
            a.coef[j] = 1.0;
            Ok(a)
        }
        ExprKind::Apply(f, args) => match f {
            Func::Add => Ok(affine_of(&args[0], vars)?.combine(affine_of(&args[1], vars)?, |a, b| a + b)),
            Func::Sub => Ok(affine_of(&args[0], vars)?.combine(affine_of(&args[1], vars)?, |a, b| a - b)),
            Func::Neg => Ok(affine_of(&args[0], vars)?.map(|a| -a)),
            Func::Mul => match (args[0].as_const(), args[1].as_const()) {
                (Some(s), _) => Ok(affine_of(&args[1], vars)?.map(|a| s * a)),
                (_, Some(s)) => Ok(affine_of(&args[0], vars)?.map(|a| a * s)),
                _ => Err(nonlinear()),
            },
            Func::Div => match args[1].as_const() {
                Some(0.0) => Err(EvalError::at(ErrorKind::DivisionByZero, e)),
                Some(d) => Ok(affine_of(&args[0], vars)?.map(|a| a / d)),
                None => Err(nonlinear()),
            },
            _ => Err(nonlinear()),
        },
    }
}

/// Puts the right-hand sides of `diff` into the form `A x + b`, reading
/// every non-differential variable from `env`.
pub fn to_affine(diff: &Diff, env: &Env) -> Result<AffineSystem, EvalError> {
    let vars: Vec<String> = diff.vars().map(String::from).collect();
    let n = vars.len();
    let mut a = Matrix::zeros(n, n);
    let mut b = vec![0.0; n];
    let frozen = |name: &str| !diff.binds(name);
    for (i, (_, rhs)) in diff.eqs.iter().enumerate() {
        let folded = fold_constants(rhs, env, &frozen)?;
        let aff = affine_of(&folded, &vars)?;
        if !aff.offset.is_finite() || aff.coef.iter().any(|c| !c.is_finite()) {
            return Err(EvalError::at(ErrorKind::DomainError, rhs));
        }
        for (j, c) in aff.coef.into_iter().enumerate() {
            a[(i, j)] = c;
        }
        b[i] = aff.offset;
    }
    Ok(AffineSystem {
        vars,
        a,
        b,
        origin: diff.span,
    })
}

/// Environment-free linearity check: every variable that is not bound by
/// `diff` is treated as an unknown constant.
pub fn check_linear(diff: &Diff) -> Result<(), EvalError> {
    // Returns whether the expression mentions a differential variable.
    fn walk(e: &Expr, diff: &Diff) -> Result<bool, EvalError> {
        match &e.kind {
            ExprKind::Const(_) => Ok(false),
            ExprKind::Var(name) => Ok(diff.binds(name)),
            ExprKind::Apply(f, args) => {
                let dynamic = args.iter().map(|a| walk(a, diff)).collect::<Result<Vec<_>, _>>()?;
                let nonlinear = Err(EvalError::at(ErrorKind::NonLinearODE, e));
                match f {
                    Func::Add | Func::Sub | Func::Neg => Ok(dynamic.contains(&true)),
                    Func::Mul if dynamic[0] && dynamic[1] => nonlinear,
                    Func::Mul => Ok(dynamic[0] || dynamic[1]),
                    Func::Div if dynamic[1] => nonlinear,
                    Func::Div => Ok(dynamic[0]),
                    _ if dynamic.contains(&true) => nonlinear,
                    _ => Ok(false),
                }
            }
        }
    }
    diff.eqs.iter().try_for_each(|(_, rhs)| walk(rhs, diff).map(|_| ()))
}
