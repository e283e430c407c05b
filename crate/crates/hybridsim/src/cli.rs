//! Argument handling and the four subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use hybridsim_core::linearize::{check_linear, fold_constants};
use hybridsim_core::odesolve::SolverMode;
use hybridsim_core::semantics::{big_step, eval_expr, BoundKind, Env, ErrorInfo, Limits, Outcome};
use hybridsim_core::syntax::{desugar, fmt_number, parse, Atomic, ParseError, Program, SourceUnit};
use hybridsim_core::trajectory::{expand_variability, InitialCondition, TrajectoryError};

use crate::axes::{parse_axes, AxisError, GraphType, PlotSpec};
use crate::export::Artifacts;
use crate::{selftest, sim};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROGRAM_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BOUND: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "hybridsim",
    version,
    about = "Simulate hybrid programs and export their trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a program and check its differential statements for linearity.
    Check { file: PathBuf },
    /// Print the state of a program at one point in time.
    Run {
        file: PathBuf,
        #[arg(long)]
        time: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Simulate every initial condition and write plot data.
    Simulate {
        file: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Sampling interval [default: max-time / 500]
        #[arg(long)]
        dt: Option<f64>,
        /// Axis groups, e.g. "[x,v]", "[(x,y),(x1,y1)]" or "[(x,y,z)]"
        #[arg(long)]
        axes: Option<String>,
        #[arg(long, value_enum, default_value_t = GraphType::Scatter)]
        graph: GraphType,
        /// Output formats; repeat for several [default: all]
        #[arg(long, value_enum)]
        format: Vec<Format>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compare direct evaluation, the step machine and sampled trajectories
    /// on random programs.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        #[arg(long, default_value_t = 5)]
        times: usize,
    },
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long, default_value_t = 150.0)]
    max_time: f64,
    #[arg(long = "max-iter", default_value_t = 1000)]
    max_iterations: usize,
    #[arg(long, value_enum, default_value_t = Solver::Exact)]
    solver: Solver,
    /// Fixed RK4 step [default: min(1e-3, duration / 16)]
    #[arg(long)]
    rk4_step: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Solver {
    Exact,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Plot,
}

impl SimArgs {
    fn limits(&self) -> Result<Limits, CliError> {
        if !(self.max_time.is_finite() && self.max_time >= 0.0) {
            return Err(CliError::Usage("--max-time must be a non-negative number".into()));
        }
        Ok(Limits {
            max_time: self.max_time,
            max_iterations: self.max_iterations,
        })
    }

    fn mode(&self) -> Result<SolverMode, CliError> {
        match (self.solver, self.rk4_step) {
            (Solver::Exact, None) => Ok(SolverMode::Exact),
            (Solver::Exact, Some(_)) => Err(CliError::Usage("--rk4-step needs --solver rk4".into())),
            (Solver::Rk4, Some(h)) if !(h.is_finite() && h > 0.0) => {
                Err(CliError::Usage("--rk4-step must be a positive number".into()))
            }
            (Solver::Rk4, step) => Ok(SolverMode::Rk4 { step }),
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("Error: cannot read '{}': {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("Error: cannot write '{}': {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("Error: {0}")]
    Usage(String),
    #[error("Error: {0}")]
    Axes(#[from] AxisError),
    #[error("Error: {0}")]
    Cap(TrajectoryError),
    #[error("{0}")]
    Program(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Parse(_) | CliError::Usage(_) | CliError::Axes(_) | CliError::Cap(_) => {
                EXIT_USAGE
            }
            CliError::Write { .. } | CliError::Program(_) => EXIT_PROGRAM_ERROR,
        }
    }
}

/// Exit code for one outcome.
pub fn outcome_code(o: &Outcome) -> i32 {
    match o {
        Outcome::Err(_) => EXIT_PROGRAM_ERROR,
        Outcome::BoundReached { .. } => EXIT_BOUND,
        Outcome::Skip(_) | Outcome::Stop(_) | Outcome::TerminatedEarly { .. } => EXIT_OK,
    }
}

/// An error beats a bound, which beats success.
fn combine(codes: impl IntoIterator<Item = i32>) -> i32 {
    codes.into_iter().fold(EXIT_OK, |acc, c| match (acc, c) {
        (EXIT_PROGRAM_ERROR, _) | (_, EXIT_PROGRAM_ERROR) => EXIT_PROGRAM_ERROR,
        (EXIT_BOUND, _) | (_, EXIT_BOUND) => EXIT_BOUND,
        _ => EXIT_OK,
    })
}

/// Runs the command line `args` (including the program name) and returns
/// the exit code.
pub fn main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check { file } => check(&file, out, err),
        Command::Run { file, time, sim } => run(&file, time, &sim, out, err),
        Command::Simulate {
            file,
            sim,
            dt,
            axes,
            graph,
            format,
            out: dir,
        } => simulate(&file, &sim, dt, axes.as_deref(), graph, &format, &dir, out, err),
        Command::Selftest { seed, cases, times } => Ok(self_test(seed, cases, times, out)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.code()
        }
    }
}

struct Loaded {
    source: String,
    unit: SourceUnit,
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let source = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })?;
    let unit = parse(&source).map_err(|e| CliError::Parse(render_parse_error(&e, &source)))?;
    Ok(Loaded { source, unit })
}

pub fn render_parse_error(e: &ParseError, source: &str) -> String {
    match e.span.line_col(source) {
        Some((line, col)) => format!("Error: {} at {line}:{col}", e.message()),
        None => format!("Error: {}", e.message()),
    }
}

fn initial_conditions(loaded: &Loaded) -> Result<Vec<InitialCondition>, CliError> {
    let cap = sim::max_product().map_err(CliError::Usage)?;
    expand_variability(&loaded.unit, cap).map_err(|e| match e {
        TrajectoryError::Declaration(info) => CliError::Program(info.render(Some(&loaded.source))),
        cap => CliError::Cap(cap),
    })
}

/// `p=2 v=0`: variables in declaration order, then any others, with twelve
/// significant digits.
fn format_env(env: &Env, order: &[String]) -> String {
    let mut names: Vec<&str> = order.iter().map(String::as_str).filter(|v| env.contains(v)).collect();
    names.extend(env.iter().map(|(k, _)| k).filter(|k| !order.iter().any(|v| v == k)));
    names
        .iter()
        .map(|k| format!("{k}={}", format_value(env.get(k).unwrap_or(f64::NAN))))
        .collect::<Vec<_>>()
        .join(" ")
}

fn format_value(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    fmt_number(if rounded == 0.0 { 0.0 } else { rounded })
}

fn check(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = load(path)?;
    let body = desugar(&loaded.unit).body;
    let mut problems: Vec<String> = Vec::new();
    let mut report = |info: ErrorInfo| {
        let line = info.render(Some(&loaded.source));
        if !problems.contains(&line) {
            problems.push(line);
        }
    };
    let mut diffs = 0;
    body.for_each_atom(&mut |a| {
        if let Atomic::Diff(d) = a {
            diffs += 1;
            if let Err(e) = check_linear(d) {
                report(ErrorInfo::new(e, &Env::new()));
            }
        }
    });
    for init in initial_conditions(&loaded)? {
        let mut env = init.env;
        check_against(&body, &mut env, &mut report);
    }
    for p in &problems {
        let _ = writeln!(err, "{p}");
    }
    if !problems.is_empty() {
        return Ok(EXIT_PROGRAM_ERROR);
    }
    let _ = writeln!(out, "ok: {diffs} differential statement(s), all linear");
    Ok(EXIT_OK)
}

/// Linearises each differential statement against what is known of the
/// environment at that point. Values that may change along the way (loop
/// bodies, branches, evolved variables) are forgotten, and statements that
/// need a forgotten value are skipped.
fn check_against(p: &Program, env: &mut Env, report: &mut impl FnMut(ErrorInfo)) {
    match p {
        Program::Atom(Atomic::Assign { var, expr, .. }) => match eval_expr(env, expr) {
            Ok(v) => {
                env.set(var, v);
            }
            Err(_) => forget(env, p),
        },
        Program::Atom(Atomic::Diff(d)) => {
            // Unknown values stay symbolic; linearity was checked separately.
            let known = |name: &str| !d.binds(name) && env.contains(name);
            for (_, rhs) in &d.eqs {
                if let Err(e) = fold_constants(rhs, env, &known) {
                    report(ErrorInfo::new(e, env));
                }
            }
            forget(env, p);
        }
        Program::Seq(a, b) => {
            check_against(a, env, report);
            check_against(b, env, report);
        }
        Program::If(_, a, b) => {
            forget(env, p);
            check_against(a, &mut env.clone(), report);
            check_against(b, &mut env.clone(), report);
        }
        Program::While(_, body) => {
            forget(env, p);
            check_against(body, &mut env.clone(), report);
        }
    }
}

/// Drops every variable that `p` may write.
fn forget(env: &mut Env, p: &Program) {
    let mut written = Vec::new();
    p.for_each_atom(&mut |a| match a {
        Atomic::Assign { var, .. } => written.push(var.as_str()),
        Atomic::Diff(d) => written.extend(d.vars()),
    });
    let mut kept = Env::new();
    for (k, v) in env.iter().filter(|(k, _)| !written.contains(k)) {
        kept.set(k, v);
    }
    *env = kept;
}

fn run(path: &Path, time: f64, args: &SimArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    if !(time.is_finite() && time >= 0.0) {
        return Err(CliError::Usage("--time must be a non-negative number".into()));
    }
    let limits = args.limits()?;
    let mode = args.mode()?;
    let loaded = load(path)?;
    let body = desugar(&loaded.unit).body;
    let order = loaded.unit.variables();
    let inits = initial_conditions(&loaded)?;
    let many = inits.len() > 1;
    let mut codes = Vec::new();
    for init in &inits {
        let prefix = if many {
            format!("[{}] ", init.label)
        } else {
            String::new()
        };
        let outcome = if time > limits.max_time {
            match big_step(&body, &init.env, limits.max_time, mode, &limits) {
                o @ (Outcome::Err(_) | Outcome::BoundReached { .. }) => o,
                o => Outcome::BoundReached {
                    kind: BoundKind::MaxTime,
                    partial: o.env().clone(),
                    elapsed: limits.max_time,
                },
            }
        } else {
            big_step(&body, &init.env, time, mode, &limits)
        };
        match &outcome {
            Outcome::Err(info) => {
                let _ = writeln!(err, "{prefix}{}", info.render(Some(&loaded.source)));
            }
            Outcome::BoundReached { kind, partial, elapsed } => {
                let why = match kind {
                    BoundKind::MaxIterations => format!("the limit of {} loop iterations", limits.max_iterations),
                    BoundKind::MaxTime => format!("the maximum time {}", fmt_number(limits.max_time)),
                };
                let _ = writeln!(
                    err,
                    "{prefix}Bound: stopped at t={} after reaching {why}",
                    format_value(*elapsed)
                );
                let _ = writeln!(out, "{prefix}{}", format_env(partial, &order));
            }
            Outcome::TerminatedEarly { env, elapsed } => {
                let _ = writeln!(
                    err,
                    "{prefix}note: the program finished at t={}",
                    format_value(*elapsed)
                );
                let _ = writeln!(out, "{prefix}{}", format_env(env, &order));
            }
            Outcome::Skip(env) | Outcome::Stop(env) => {
                let _ = writeln!(out, "{prefix}{}", format_env(env, &order));
            }
        }
        codes.push(outcome_code(&outcome));
    }
    Ok(combine(codes))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    path: &Path,
    args: &SimArgs,
    dt: Option<f64>,
    axes: Option<&str>,
    graph: GraphType,
    formats: &[Format],
    dir: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let limits = args.limits()?;
    let mode = args.mode()?;
    let dt = match dt {
        Some(dt) if dt.is_finite() && dt > 0.0 => dt,
        Some(_) => return Err(CliError::Usage("--dt must be a positive number".into())),
        None if limits.max_time > 0.0 => limits.max_time / 500.0,
        None => 1.0,
    };
    let loaded = load(path)?;
    let variables = loaded.unit.variables();
    let spec = match axes {
        Some(text) => PlotSpec::new(parse_axes(text)?, graph, limits, &variables)?,
        None => PlotSpec::default_for(graph, limits, &variables)?,
    };
    // Surface declaration errors and the cap before simulating.
    initial_conditions(&loaded)?;
    let cap = sim::max_product().map_err(CliError::Usage)?;
    let trajectories = sim::simulate_all(&loaded.unit, mode, &limits, dt, cap).map_err(CliError::Cap)?;

    for t in &trajectories {
        let ended = match t.outcome {
            Outcome::TerminatedEarly { elapsed, .. } | Outcome::BoundReached { elapsed, .. } => elapsed,
            _ => t.horizon(),
        };
        let _ = writeln!(
            out,
            "{}: {} at t={} ({} samples)",
            t.label,
            t.outcome.variant(),
            format_value(ended),
            t.samples.len()
        );
        if let Some(info) = t.outcome.error() {
            let _ = writeln!(err, "[{}] {}", t.label, info.render(Some(&loaded.source)));
        }
    }

    let artifacts = Artifacts {
        trajectories: &trajectories,
        variables: &variables,
        spec: &spec,
        mode,
        source: Some(&loaded.source),
    };
    let formats = if formats.is_empty() {
        &[Format::Csv, Format::Json, Format::Plot][..]
    } else {
        formats
    };
    let stem = path
        .file_stem()
        .map_or("trajectory".into(), |s| s.to_string_lossy().into_owned());
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.into(),
        source,
    })?;
    let mut written = Vec::new();
    for format in formats {
        let (ext, bytes) = match format {
            Format::Csv => ("csv", artifacts.csv()),
            Format::Json => ("json", artifacts.json()),
            Format::Plot => ("gp", artifacts.plot_script().into_bytes()),
        };
        let file = dir.join(format!("{stem}.{ext}"));
        if written.contains(&file) {
            continue;
        }
        std::fs::write(&file, bytes).map_err(|source| CliError::Write {
            path: file.clone(),
            source,
        })?;
        let _ = writeln!(out, "wrote {}", file.display());
        written.push(file);
    }
    Ok(combine(trajectories.iter().map(|t| outcome_code(&t.outcome))))
}

fn self_test(seed: u64, cases: usize, times: usize, out: &mut dyn Write) -> i32 {
    let r = selftest::run(seed, cases, times);
    let _ = writeln!(
        out,
        "{} programs, {} queries: {} disagreements, {} of {} configurations ambiguous, {} segment mismatches",
        r.programs, r.queries, r.disagreements, r.ambiguous, r.configurations, r.segment_mismatches
    );
    if let Some(f) = &r.first_failure {
        let _ = writeln!(out, "first failure: {f}");
    }
    if r.passed() {
        EXIT_OK
    } else {
        EXIT_PROGRAM_ERROR
    }
}
