//! Failure-aware operational semantics.
//!
//! A program is run from an environment for a time budget `t`. It either
//! finishes with time to spare (`skip`), is interrupted inside a
//! differential statement when the budget runs out (`stop`), or fails
//! (`err`). [`big_step`] computes the outcome directly; [`small_step`] is the
//! step-by-step machine that [`run_to_terminal`] iterates.

mod big_step;
pub mod eval;
pub(crate) mod small_step;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use big_step::big_step;
pub use eval::{eval_bool, eval_expr, EvalError};
pub use small_step::{applicable_rules, run_to_terminal, small_step, Config, Event, Rule, Step, Transition};

use crate::linearize::to_affine;
use crate::odesolve::{Solution, SolverMode};
use crate::syntax::{Diff, Span};

/// Values of the variables assigned so far.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Env(BTreeMap<String, f64>);

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Env(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: &str, value: f64) -> Option<f64> {
        match self.0.get_mut(name) {
            Some(slot) => Some(core::mem::replace(slot, value)),
            None => self.0.insert(name.into(), value),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Variables in alphabetical order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Largest absolute difference over the union of both key sets;
    /// infinite if a variable is missing on one side.
    pub fn max_deviation(&self, other: &Env) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, v) in self.iter() {
            match other.get(k) {
                Some(w) => worst = worst.max((v - w).abs()),
                None => return f64::INFINITY,
            }
        }
        if other.iter().any(|(k, _)| !self.contains(k)) {
            return f64::INFINITY;
        }
        worst
    }
}

impl fmt::Display for Env {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    DivisionByZero,
    DomainError,
    UninitializedVariable,
    NonLinearODE,
    NegativeDuration,
    ArityError,
    SolverFailure,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::DivisionByZero => "DivisionByZero",
            ErrorKind::DomainError => "DomainError",
            ErrorKind::UninitializedVariable => "UninitializedVariable",
            ErrorKind::NonLinearODE => "NonLinearODE",
            ErrorKind::NegativeDuration => "NegativeDuration",
            ErrorKind::ArityError => "ArityError",
            ErrorKind::SolverFailure => "SolverFailure",
        }
    }
}

/// A runtime failure together with the environment it happened in.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorInfo {
    pub kind: ErrorKind,
    pub text: String,
    pub span: Span,
    pub env: Env,
}

impl ErrorInfo {
    pub fn new(err: EvalError, env: &Env) -> Self {
        ErrorInfo {
            kind: err.kind,
            text: err.text,
            span: err.span,
            env: env.clone(),
        }
    }

    /// The message without the `Error:` prefix and location. With a source
    /// the offending text is quoted as written there.
    pub fn message(&self, source: Option<&str>) -> String {
        let text = source.and_then(|s| self.span.text(s)).unwrap_or(&self.text);
        match self.kind {
            ErrorKind::DivisionByZero => format!("the divisor of the division '{text}' is zero"),
            ErrorKind::DomainError => format!("the expression '{text}' is undefined"),
            ErrorKind::UninitializedVariable => format!("the variable '{text}' is used before being assigned"),
            ErrorKind::NonLinearODE => {
                format!("the differential equations contain the non-linear expression '{text}'")
            }
            ErrorKind::NegativeDuration => format!("the duration '{text}' is negative"),
            ErrorKind::ArityError => format!("wrong number of arguments in '{text}'"),
            ErrorKind::SolverFailure => format!("the solution of '{text}' is not finite"),
        }
    }

    /// `Error: <message> at <line>:<col>`, without the location when the
    /// span does not point into `source`.
    pub fn render(&self, source: Option<&str>) -> String {
        let msg = self.message(source);
        match source.and_then(|s| self.span.line_col(s)) {
            Some((line, col)) => format!("Error: {msg} at {line}:{col}"),
            None => format!("Error: {msg}"),
        }
    }
}

impl fmt::Display for ErrorInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(None))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    MaxIterations,
    MaxTime,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    /// Simulation horizon in seconds.
    pub max_time: f64,
    /// Number of loop unfoldings allowed in one evaluation.
    pub max_iterations: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_time: 150.0,
            max_iterations: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    /// The program finished exactly when the time budget ran out.
    Skip(Env),
    /// The time budget ran out inside a differential statement.
    Stop(Env),
    Err(ErrorInfo),
    BoundReached {
        kind: BoundKind,
        partial: Env,
        elapsed: f64,
    },
    /// The program finished after `elapsed` seconds, before the budget ran out.
    TerminatedEarly {
        env: Env,
        elapsed: f64,
    },
}

impl Outcome {
    pub fn env(&self) -> &Env {
        match self {
            Outcome::Skip(env) | Outcome::Stop(env) | Outcome::TerminatedEarly { env, .. } => env,
            Outcome::Err(info) => &info.env,
            Outcome::BoundReached { partial, .. } => partial,
        }
    }

    pub fn variant(&self) -> &'static str {
        match self {
            Outcome::Skip(_) => "skip",
            Outcome::Stop(_) => "stop",
            Outcome::Err(_) => "err",
            Outcome::BoundReached { .. } => "bound",
            Outcome::TerminatedEarly { .. } => "terminated-early",
        }
    }

    pub fn error(&self) -> Option<&ErrorInfo> {
        match self {
            Outcome::Err(info) => Some(info),
            _ => None,
        }
    }

    /// Same variant and, except for errors, every variable within `tol`.
    /// Errors agree on their kind.
    pub fn agrees_with(&self, other: &Outcome, tol: f64) -> bool {
        match (self, other) {
            (Outcome::Err(x), Outcome::Err(y)) => x.kind == y.kind,
            (Outcome::BoundReached { kind: a, .. }, Outcome::BoundReached { kind: b, .. }) if a != b => false,
            _ if self.variant() == other.variant() => self.env().max_deviation(other.env()) <= tol,
            _ => false,
        }
    }
}

/// A differential statement ready to run: its duration and flow.
#[derive(Clone, Debug)]
pub struct DiffPlan {
    pub duration: f64,
    pub solution: Solution,
}

impl DiffPlan {
    /// Evaluates the duration (once, at entry) and linearises the equations.
    pub fn new(diff: &Diff, env: &Env, mode: SolverMode) -> Result<DiffPlan, EvalError> {
        let duration = eval_expr(env, &diff.duration)?;
        if duration < 0.0 {
            return Err(EvalError::at(ErrorKind::NegativeDuration, &diff.duration));
        }
        let system = to_affine(diff, env)?;
        let x0 = system
            .vars
            .iter()
            .map(|v| {
                env.get(v).ok_or_else(|| EvalError {
                    kind: ErrorKind::UninitializedVariable,
                    text: v.clone(),
                    span: diff.span,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DiffPlan {
            duration,
            solution: Solution::new(system, x0, mode, duration),
        })
    }

    /// `env` updated with the flow at local time `tau`.
    pub fn flow(&mut self, env: &Env, tau: f64) -> Result<Env, EvalError> {
        let x = self.solution.at(tau).map_err(|_| EvalError {
            kind: ErrorKind::SolverFailure,
            text: self.describe(),
            span: self.solution.system().origin,
        })?;
        let mut out = env.clone();
        for (v, x) in self.solution.system().vars.iter().zip(x) {
            out.set(v, x);
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        let vars: Vec<String> = self.solution.system().vars.iter().map(|v| format!("{v}'")).collect();
        vars.join(", ")
    }
}
