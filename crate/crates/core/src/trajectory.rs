//! Whole simulations: initial-condition grids, piecewise segments and
//! sampled values over time.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::odesolve::{Solution, SolverMode};
use crate::semantics::small_step::drive;
use crate::semantics::{big_step, eval_expr, Config, Env, ErrorInfo, Event, Limits, Outcome, Step};
use crate::syntax::{desugar, fmt_number, Decl, Program, SourceUnit};

/// Default bound on the number of initial-condition combinations.
pub const DEFAULT_MAX_PRODUCT: usize = 64;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("{size} combinations of initial values exceed the limit of {cap}")]
    VariabilityCapExceeded { size: u128, cap: usize },
    #[error("{0}")]
    Declaration(ErrorInfo),
}

/// Listed initial values, in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct VarGrid(pub Vec<(String, Vec<f64>)>);

impl VarGrid {
    pub fn of(unit: &SourceUnit) -> Self {
        VarGrid(
            unit.decls
                .iter()
                .filter_map(|d| match d {
                    Decl::VarList { var, values, .. } => Some((var.clone(), values.clone())),
                    Decl::Assign { .. } => None,
                })
                .collect(),
        )
    }

    /// Number of combinations; an empty grid has exactly one.
    pub fn size(&self) -> u128 {
        self.0
            .iter()
            .fold(1u128, |acc, (_, vals)| acc.saturating_mul(vals.len() as u128))
    }
}

/// One starting point of a simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialCondition {
    pub env: Env,
    /// `x=0, vx=4`, or `default` when nothing is listed.
    pub label: String,
}

/// One environment per combination of listed values, first listing varying
/// slowest. Scalar declarations are evaluated in order for each combination.
pub fn expand_variability(unit: &SourceUnit, cap: usize) -> Result<Vec<InitialCondition>, TrajectoryError> {
    let grid = VarGrid::of(unit);
    let size = grid.size();
    if size > cap as u128 {
        return Err(TrajectoryError::VariabilityCapExceeded { size, cap });
    }
    let unit = desugar(unit);
    let mut out = Vec::with_capacity(size as usize);
    let mut choice = alloc::vec![0usize; grid.0.len()];
    for _ in 0..size {
        let mut env = Env::new();
        let mut label = Vec::new();
        let mut listed = 0;
        for d in &unit.decls {
            match d {
                Decl::VarList { var, values, .. } => {
                    let v = values[choice[listed]];
                    listed += 1;
                    env.set(var, v);
                    label.push(format!("{var}={}", fmt_number(v)));
                }
                Decl::Assign { var, expr, .. } => {
                    let v = eval_expr(&env, expr).map_err(|e| TrajectoryError::Declaration(ErrorInfo::new(e, &env)))?;
                    env.set(var, v);
                }
            }
        }
        out.push(InitialCondition {
            env,
            label: if label.is_empty() {
                "default".into()
            } else {
                label.join(", ")
            },
        });
        // Odometer increment, last listing fastest.
        for i in (0..choice.len()).rev() {
            choice[i] += 1;
            if choice[i] < grid.0[i].1.len() {
                break;
            }
            choice[i] = 0;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum SegmentKind {
    /// A differential statement; local time 0 of the solution is `start`.
    Continuous(Solution),
    Discrete {
        var: String,
        old: Option<f64>,
        new: f64,
    },
    /// The end of the run. After a completed program the final values are
    /// held up to the horizon.
    Terminal(Outcome),
}

#[derive(Clone, Debug)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub kind: SegmentKind,
    pub env_at_start: Env,
}

impl Segment {
    /// Environment at absolute time `t`, which must lie in the segment.
    pub fn value_at(&self, t: f64) -> Option<Env> {
        match &self.kind {
            SegmentKind::Continuous(sol) => {
                let x = sol.clone().at(t - self.start).ok()?;
                let mut env = self.env_at_start.clone();
                for (v, x) in sol.system().vars.iter().zip(x) {
                    env.set(v, x);
                }
                Some(env)
            }
            SegmentKind::Discrete { var, new, .. } => {
                let mut env = self.env_at_start.clone();
                env.set(var, *new);
                Some(env)
            }
            SegmentKind::Terminal(outcome) => Some(outcome.env().clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub env: Env,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub label: String,
    pub initial: Env,
    pub segments: Vec<Segment>,
    pub samples: Vec<Sample>,
    pub outcome: Outcome,
}

impl Trajectory {
    /// Last time covered by the segments.
    pub fn horizon(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    /// Environment at time `t` read off the segment table: the last segment
    /// whose span contains `t`.
    pub fn value_at(&self, t: f64) -> Option<Env> {
        self.segments
            .iter()
            .rev()
            .find(|s| s.start <= t && t <= s.end)
            .and_then(|s| s.value_at(t))
    }
}

fn push_sample(samples: &mut Vec<Sample>, time: f64, env: Env) {
    match samples.last_mut() {
        Some(last) if time <= last.time => last.env = env,
        _ => samples.push(Sample { time, env }),
    }
}

/// Runs the machine once from `init` with the whole horizon as budget and
/// records every statement as a segment. Continuous segments are sampled
/// every `dt` from their start, plus at their end.
pub fn simulate_one(body: &Program, init: &InitialCondition, mode: SolverMode, limits: &Limits, dt: f64) -> Trajectory {
    assert!(dt > 0.0, "sampling interval must be positive");
    let horizon = limits.max_time;
    let mut cursor = 0.0f64;
    let mut segments = Vec::new();
    let mut samples = Vec::new();
    push_sample(&mut samples, 0.0, init.env.clone());
    let config = Config::new(body.clone(), init.env.clone(), horizon);
    let outcome = drive(config, mode, limits, |cfg, tr| {
        let after = match &tr.step {
            Step::Next(c) => &c.env,
            Step::Skip { env, .. } | Step::Stop { env } => env,
            Step::Err(_) => return,
        };
        match tr.event.take() {
            Some(Event::Assigned { var, old, new }) => {
                segments.push(Segment {
                    start: cursor,
                    end: cursor,
                    kind: SegmentKind::Discrete { var, old, new },
                    env_at_start: cfg.env.clone(),
                });
                push_sample(&mut samples, cursor, after.clone());
            }
            Some(Event::Flowed { mut plan, elapsed }) => {
                let mut k = 0u64;
                loop {
                    let local = k as f64 * dt;
                    if local >= elapsed {
                        break;
                    }
                    if let Ok(env) = plan.flow(&cfg.env, local) {
                        push_sample(&mut samples, cursor + local, env);
                    }
                    k += 1;
                }
                let end = (cursor + elapsed).min(horizon);
                push_sample(&mut samples, end, after.clone());
                segments.push(Segment {
                    start: cursor,
                    end,
                    kind: SegmentKind::Continuous(plan.solution),
                    env_at_start: cfg.env.clone(),
                });
                cursor = end;
            }
            None => {}
        }
    });
    let hold_until = match outcome {
        Outcome::Skip(_) | Outcome::TerminatedEarly { .. } => horizon.max(cursor),
        _ => cursor,
    };
    let final_env = outcome.env().clone();
    let mut k = 1u64;
    while cursor + (k as f64) * dt < hold_until {
        push_sample(&mut samples, cursor + k as f64 * dt, final_env.clone());
        k += 1;
    }
    if hold_until > cursor {
        push_sample(&mut samples, hold_until, final_env.clone());
    }
    segments.push(Segment {
        start: cursor,
        end: hold_until,
        kind: SegmentKind::Terminal(outcome.clone()),
        env_at_start: final_env,
    });
    Trajectory {
        label: init.label.clone(),
        initial: init.env.clone(),
        segments,
        samples,
        outcome,
    }
}

/// Simulates every initial condition of `unit`, in grid order.
pub fn simulate(
    unit: &SourceUnit,
    mode: SolverMode,
    limits: &Limits,
    dt: f64,
    cap: usize,
) -> Result<Vec<Trajectory>, TrajectoryError> {
    let inits = expand_variability(unit, cap)?;
    let body = desugar(unit).body;
    Ok(inits
        .iter()
        .map(|init| simulate_one(&body, init, mode, limits, dt))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub checked: usize,
    pub mismatches: usize,
    /// Largest per-variable deviation seen (infinite for a variant mismatch).
    pub worst: f64,
    pub tolerance: f64,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Tolerance used when comparing against direct evaluation.
pub fn tolerance(mode: SolverMode) -> f64 {
    match mode {
        SolverMode::Exact => 1e-9,
        SolverMode::Rk4 { .. } => 1e-6,
    }
}

/// Compares a trajectory's segment table with [`big_step`] at `k` times
/// drawn uniformly from `[0, horizon)`.
pub fn check_trajectory(
    traj: &Trajectory,
    body: &Program,
    mode: SolverMode,
    limits: &Limits,
    k: usize,
    rng: &mut impl Rng,
) -> ConsistencyReport {
    let tol = tolerance(mode);
    let mut report = ConsistencyReport {
        checked: 0,
        mismatches: 0,
        worst: 0.0,
        tolerance: tol,
    };
    let horizon = traj.horizon();
    for _ in 0..k {
        let t = if horizon > 0.0 {
            rng.gen_range(0.0..horizon)
        } else {
            0.0
        };
        let direct = big_step(body, &traj.initial, t, mode, limits);
        let deviation = match &direct {
            // Only consistent if the run itself ended this way by time `t`.
            Outcome::Err(_) | Outcome::BoundReached { .. } => {
                let same_end = direct.variant() == traj.outcome.variant()
                    && direct.error().map(|e| e.kind) == traj.outcome.error().map(|e| e.kind);
                if same_end && t >= horizon {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            out => traj
                .value_at(t)
                .map_or(f64::INFINITY, |env| out.env().max_deviation(&env)),
        };
        report.checked += 1;
        report.worst = report.worst.max(deviation);
        if deviation > tol {
            report.mismatches += 1;
        }
    }
    report
}

/// Simulates `unit` and checks every trajectory against direct evaluation.
pub fn consistency_check(
    unit: &SourceUnit,
    mode: SolverMode,
    limits: &Limits,
    dt: f64,
    k: usize,
    seed: u64,
) -> Result<ConsistencyReport, TrajectoryError> {
    let body = desugar(unit).body;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = ConsistencyReport {
        checked: 0,
        mismatches: 0,
        worst: 0.0,
        tolerance: tolerance(mode),
    };
    for traj in simulate(unit, mode, limits, dt, usize::MAX)? {
        let r = check_trajectory(&traj, &body, mode, limits, k, &mut rng);
        total.checked += r.checked;
        total.mismatches += r.mismatches;
        total.worst = total.worst.max(r.worst);
    }
    Ok(total)
}
