use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{BoundKind, DiffPlan, Env, ErrorInfo, Limits, Outcome};
use crate::odesolve::SolverMode;
use crate::semantics::eval::{eval_bool, eval_expr};
use crate::syntax::{Atomic, Program};

/// A machine state: the program still to run, the environment and the
/// residual time.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub program: Arc<Program>,
    pub env: Env,
    pub time: f64,
}

impl Config {
    pub fn new(program: Program, env: Env, time: f64) -> Self {
        Config {
            program: Arc::new(program),
            env,
            time,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Next(Config),
    Skip { env: Env, residual: f64 },
    Stop { env: Env },
    Err(ErrorInfo),
}

/// Reduction rules of the machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Asg,
    AsgErr,
    DiffStop,
    DiffSkip,
    DiffErr,
    IfTrue,
    IfFalse,
    IfErr,
    WhTrue,
    WhFalse,
    WhErr,
    Seq,
    SeqSkip,
    SeqStop,
    SeqErr,
}

impl Rule {
    /// The rule a sequence `p; q` takes when `p` reduces by `self`.
    fn lift_to_seq(self) -> Rule {
        match self {
            Rule::Asg | Rule::DiffSkip | Rule::WhFalse => Rule::SeqSkip,
            Rule::DiffStop | Rule::SeqStop => Rule::SeqStop,
            Rule::AsgErr | Rule::DiffErr | Rule::IfErr | Rule::WhErr | Rule::SeqErr => Rule::SeqErr,
            Rule::IfTrue | Rule::IfFalse | Rule::WhTrue | Rule::Seq | Rule::SeqSkip => Rule::Seq,
        }
    }
}

/// What an atomic statement did during a step.
#[derive(Clone, Debug)]
pub enum Event {
    Assigned {
        var: String,
        old: Option<f64>,
        new: f64,
    },
    /// A differential statement ran for `elapsed` seconds of its flow.
    Flowed {
        plan: DiffPlan,
        elapsed: f64,
    },
}

#[derive(Clone, Debug)]
pub struct Transition {
    /// Rule applied at the top of the configuration.
    pub rule: Rule,
    /// Rule applied to the innermost statement that actually reduced.
    pub leaf: Rule,
    pub step: Step,
    pub event: Option<Event>,
}

/// One reduction of the machine.
pub fn small_step(c: &Config, mode: SolverMode) -> Transition {
    step(&c.program, &c.env, c.time, mode)
}

fn leaf(rule: Rule, step: Step, event: Option<Event>) -> Transition {
    Transition {
        rule,
        leaf: rule,
        step,
        event,
    }
}

fn step(p: &Arc<Program>, env: &Env, t: f64, mode: SolverMode) -> Transition {
    let next = |program: &Arc<Program>| {
        Step::Next(Config {
            program: program.clone(),
            env: env.clone(),
            time: t,
        })
    };
    match &**p {
        Program::Atom(Atomic::Assign { var, expr, .. }) => match eval_expr(env, expr) {
            Ok(v) => {
                let mut out = env.clone();
                let old = out.set(var, v);
                let event = Event::Assigned {
                    var: var.clone(),
                    old,
                    new: v,
                };
                leaf(Rule::Asg, Step::Skip { env: out, residual: t }, Some(event))
            }
            Err(e) => leaf(Rule::AsgErr, Step::Err(ErrorInfo::new(e, env)), None),
        },
        Program::Atom(Atomic::Diff(diff)) => {
            let mut plan = match DiffPlan::new(diff, env, mode) {
                Ok(plan) => plan,
                Err(e) => return leaf(Rule::DiffErr, Step::Err(ErrorInfo::new(e, env)), None),
            };
            let d = plan.duration;
            let elapsed = if t < d { t } else { d };
            match plan.flow(env, elapsed) {
                Err(e) => leaf(Rule::DiffErr, Step::Err(ErrorInfo::new(e, env)), None),
                Ok(out) => {
                    let event = Some(Event::Flowed { plan, elapsed });
                    if t < d {
                        leaf(Rule::DiffStop, Step::Stop { env: out }, event)
                    } else {
                        leaf(
                            Rule::DiffSkip,
                            Step::Skip {
                                env: out,
                                residual: t - d,
                            },
                            event,
                        )
                    }
                }
            }
        }
        Program::If(b, then, other) => match eval_bool(env, b) {
            Ok(true) => leaf(Rule::IfTrue, next(then), None),
            Ok(false) => leaf(Rule::IfFalse, next(other), None),
            Err(e) => leaf(Rule::IfErr, Step::Err(ErrorInfo::new(e, env)), None),
        },
        Program::While(b, body) => match eval_bool(env, b) {
            Ok(true) => {
                let unfolded = Arc::new(Program::Seq(body.clone(), p.clone()));
                leaf(Rule::WhTrue, next(&unfolded), None)
            }
            Ok(false) => leaf(
                Rule::WhFalse,
                Step::Skip {
                    env: env.clone(),
                    residual: t,
                },
                None,
            ),
            Err(e) => leaf(Rule::WhErr, Step::Err(ErrorInfo::new(e, env)), None),
        },
        Program::Seq(first, rest) => {
            let inner = step(first, env, t, mode);
            let step = match inner.step {
                Step::Next(c) => Step::Next(Config {
                    program: Arc::new(Program::Seq(c.program, rest.clone())),
                    env: c.env,
                    time: c.time,
                }),
                Step::Skip { env, residual } => Step::Next(Config {
                    program: rest.clone(),
                    env,
                    time: residual,
                }),
                terminal => terminal,
            };
            Transition {
                rule: inner.rule.lift_to_seq(),
                leaf: inner.leaf,
                step,
                event: inner.event,
            }
        }
    }
}

/// Every rule whose premises hold in `c`, each premise checked on its own.
/// A deterministic machine always returns exactly one rule.
pub fn applicable_rules(c: &Config, mode: SolverMode) -> Vec<Rule> {
    guards(&c.program, &c.env, c.time, mode)
}

fn guards(p: &Program, env: &Env, t: f64, mode: SolverMode) -> Vec<Rule> {
    let mut out = Vec::new();
    let mut check = |rule, holds: bool| {
        if holds {
            out.push(rule);
        }
    };
    match p {
        Program::Atom(Atomic::Assign { expr, .. }) => {
            check(Rule::Asg, eval_expr(env, expr).is_ok());
            check(Rule::AsgErr, eval_expr(env, expr).is_err());
        }
        Program::Atom(Atomic::Diff(diff)) => {
            // Flow defined at `tau`, given the statement's duration.
            let flows = |tau: fn(f64, f64) -> f64| {
                DiffPlan::new(diff, env, mode).and_then(|mut plan| {
                    let d = plan.duration;
                    plan.flow(env, tau(t, d)).map(|_| d)
                })
            };
            check(Rule::DiffStop, matches!(flows(|t, _| t), Ok(d) if t < d));
            check(Rule::DiffSkip, matches!(flows(|_, d| d), Ok(d) if d <= t));
            check(Rule::DiffErr, flows(f64::min).is_err());
        }
        Program::If(b, ..) | Program::While(b, _) => {
            let (yes, no, err) = if matches!(p, Program::If(..)) {
                (Rule::IfTrue, Rule::IfFalse, Rule::IfErr)
            } else {
                (Rule::WhTrue, Rule::WhFalse, Rule::WhErr)
            };
            check(yes, eval_bool(env, b) == Ok(true));
            check(no, eval_bool(env, b) == Ok(false));
            check(err, eval_bool(env, b).is_err());
        }
        Program::Seq(first, _) => {
            return guards(first, env, t, mode).into_iter().map(Rule::lift_to_seq).collect();
        }
    }
    out
}

/// Runs the machine until it reaches a terminal, calling `observe` with each
/// configuration and the transition taken from it.
pub(crate) fn drive(
    c: Config,
    mode: SolverMode,
    limits: &Limits,
    mut observe: impl FnMut(&Config, &mut Transition),
) -> Outcome {
    let start = c.time;
    let mut cur = c;
    let mut iterations = 0usize;
    loop {
        let mut tr = small_step(&cur, mode);
        if tr.leaf == Rule::WhTrue {
            iterations += 1;
            if iterations > limits.max_iterations {
                return Outcome::BoundReached {
                    kind: BoundKind::MaxIterations,
                    elapsed: start - cur.time,
                    partial: cur.env,
                };
            }
        }
        observe(&cur, &mut tr);
        match tr.step {
            Step::Next(next) => cur = next,
            Step::Skip { env, residual: 0.0 } => return Outcome::Skip(env),
            Step::Skip { env, residual } => {
                return Outcome::TerminatedEarly {
                    env,
                    elapsed: start - residual,
                }
            }
            Step::Stop { env } => return Outcome::Stop(env),
            Step::Err(info) => return Outcome::Err(info),
        }
    }
}

/// Iterates [`small_step`] to a terminal. The loop budget counts
/// unfoldings of while-loops.
pub fn run_to_terminal(c: Config, mode: SolverMode, limits: &Limits) -> Outcome {
    drive(c, mode, limits, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::ErrorKind;
    use crate::syntax::{desugar, parse};

    fn config(src: &str, env: &[(&str, f64)], t: f64) -> Config {
        Config::new(
            desugar(&parse(src).unwrap()).body,
            Env::from_pairs(env.iter().copied()),
            t,
        )
    }

    #[test]
    fn assignment_is_a_terminal_skip() {
        let tr = small_step(&config("x := 2", &[], 0.0), SolverMode::Exact);
        assert_eq!(tr.rule, Rule::Asg);
        assert_eq!(
            tr.step,
            Step::Skip {
                env: Env::from_pairs([("x", 2.0)]),
                residual: 0.0
            }
        );
    }

    #[test]
    fn flow_interrupted_by_the_budget() {
        let tr = small_step(&config("x' = -1 for 1", &[("x", 1.0)], 0.3), SolverMode::Exact);
        assert_eq!(tr.rule, Rule::DiffStop);
        let Step::Stop { env } = tr.step else { panic!() };
        assert!((env.get("x").unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn flow_completed_moves_to_the_endpoint() {
        let tr = small_step(&config("x' = -1 for 0.25", &[("x", 1.0)], 1.0), SolverMode::Exact);
        assert_eq!(tr.rule, Rule::DiffSkip);
        let Step::Skip { env, residual } = tr.step else {
            panic!()
        };
        assert_eq!((env.get("x").unwrap(), residual), (0.75, 0.75));
    }

    #[test]
    fn undefined_guard_fails() {
        let c = config("while 1/x <= 1 do { x := 1 }", &[("x", 0.0)], 0.0);
        let tr = small_step(&c, SolverMode::Exact);
        assert_eq!(tr.rule, Rule::WhErr);
        let Step::Err(info) = tr.step else { panic!() };
        assert_eq!(info.kind, ErrorKind::DivisionByZero);
    }

    #[test]
    fn sequence_rules_and_leaves() {
        let c = config("while tt do { x := 1 }; y := 2", &[], 0.0);
        let tr = small_step(&c, SolverMode::Exact);
        assert_eq!((tr.rule, tr.leaf), (Rule::Seq, Rule::WhTrue));
        assert_eq!(applicable_rules(&c, SolverMode::Exact), [Rule::Seq]);
    }

    #[test]
    fn zero_budget_stops_true_loops() {
        let limits = Limits {
            max_iterations: 0,
            ..Limits::default()
        };
        let out = run_to_terminal(config("while tt do { x := 1 }", &[], 1.0), SolverMode::Exact, &limits);
        assert!(matches!(out, Outcome::BoundReached { .. }));
    }

    #[test]
    fn runs_eq1_to_the_end() {
        let c = config(
            "p' = v, v' = 2 for 1 ; p' = v, v' = -2 for 1",
            &[("p", 0.0), ("v", 0.0)],
            2.0,
        );
        let Outcome::Skip(env) = run_to_terminal(c, SolverMode::Exact, &Limits::default()) else {
            panic!()
        };
        assert!((env.get("p").unwrap() - 2.0).abs() < 1e-12);
    }
}
