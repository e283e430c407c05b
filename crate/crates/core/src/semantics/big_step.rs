use super::{BoundKind, DiffPlan, Env, ErrorInfo, Limits, Outcome};
use crate::odesolve::SolverMode;
use crate::semantics::eval::{eval_bool, eval_expr};
use crate::syntax::{Atomic, Program};

enum Res {
    /// Finished with `leftover` time not consumed.
    Skip(Env, f64),
    Stop(Env),
    Err(ErrorInfo),
    /// Loop budget exhausted with `residual` time left.
    Bound(Env, f64),
}

struct Ctx {
    mode: SolverMode,
    max_iterations: usize,
    iterations: usize,
}

/// Outcome of running `p` from `env` for `t` seconds.
///
/// The loop budget counts unfoldings across the whole evaluation. A program
/// that finishes before `t` is reported as [`Outcome::TerminatedEarly`].
pub fn big_step(p: &Program, env: &Env, t: f64, mode: SolverMode, limits: &Limits) -> Outcome {
    let mut ctx = Ctx {
        mode,
        max_iterations: limits.max_iterations,
        iterations: 0,
    };
    match eval(&mut ctx, p, env.clone(), t) {
        Res::Skip(env, 0.0) => Outcome::Skip(env),
        Res::Skip(env, leftover) => Outcome::TerminatedEarly {
            env,
            elapsed: t - leftover,
        },
        Res::Stop(env) => Outcome::Stop(env),
        Res::Err(info) => Outcome::Err(info),
        Res::Bound(partial, residual) => Outcome::BoundReached {
            kind: BoundKind::MaxIterations,
            partial,
            elapsed: t - residual,
        },
    }
}

fn eval(ctx: &mut Ctx, p: &Program, env: Env, t: f64) -> Res {
    match p {
        Program::Atom(a) => atomic(ctx, a, env, t),
        Program::Seq(..) => {
            // Walk the right spine iteratively so long statement lists do not
            // grow the stack.
            let (mut cur, mut env, mut t) = (p, env, t);
            while let Program::Seq(first, rest) = cur {
                match eval(ctx, first, env, t) {
                    Res::Skip(e, u) => (env, t) = (e, u),
                    other => return other,
                }
                cur = rest;
            }
            eval(ctx, cur, env, t)
        }
        Program::If(b, p, q) => match eval_bool(&env, b) {
            Ok(true) => eval(ctx, p, env, t),
            Ok(false) => eval(ctx, q, env, t),
            Err(e) => Res::Err(ErrorInfo::new(e, &env)),
        },
        Program::While(b, body) => {
            let (mut env, mut t) = (env, t);
            loop {
                match eval_bool(&env, b) {
                    Ok(false) => return Res::Skip(env, t),
                    Err(e) => return Res::Err(ErrorInfo::new(e, &env)),
                    Ok(true) => {}
                }
                ctx.iterations += 1;
                if ctx.iterations > ctx.max_iterations {
                    return Res::Bound(env, t);
                }
                match eval(ctx, body, env, t) {
                    Res::Skip(e, u) => (env, t) = (e, u),
                    other => return other,
                }
            }
        }
    }
}

fn atomic(ctx: &Ctx, a: &Atomic, env: Env, t: f64) -> Res {
    match a {
        Atomic::Assign { var, expr, .. } => match eval_expr(&env, expr) {
            Ok(v) => {
                let mut env = env;
                env.set(var, v);
                Res::Skip(env, t)
            }
            Err(e) => Res::Err(ErrorInfo::new(e, &env)),
        },
        Atomic::Diff(diff) => {
            let mut plan = match DiffPlan::new(diff, &env, ctx.mode) {
                Ok(plan) => plan,
                Err(e) => return Res::Err(ErrorInfo::new(e, &env)),
            };
            let d = plan.duration;
            let (tau, stop) = if t < d { (t, true) } else { (d, false) };
            match plan.flow(&env, tau) {
                Ok(next) if stop => Res::Stop(next),
                Ok(next) => Res::Skip(next, t - d),
                Err(e) => Res::Err(ErrorInfo::new(e, &env)),
            }
        }
    }
}
