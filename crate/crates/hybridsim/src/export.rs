//! CSV, JSON and gnuplot output for simulated trajectories.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use hybridsim_core::odesolve::SolverMode;
use hybridsim_core::semantics::{BoundKind, Env, Outcome};
use hybridsim_core::trajectory::{SegmentKind, Trajectory};

use crate::axes::{AxisGroup, PlotSpec};

/// Schema version written into JSON documents.
pub const SCHEMA_VERSION: &str = "1";

/// Seventeen significant digits, enough to read back the same `f64`.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Everything an export needs besides the trajectories themselves.
#[derive(Clone, Copy, Debug)]
pub struct Artifacts<'a> {
    pub trajectories: &'a [Trajectory],
    /// Column order, normally first-declaration order.
    pub variables: &'a [String],
    pub spec: &'a PlotSpec,
    pub mode: SolverMode,
    /// Program text, used to quote and locate errors.
    pub source: Option<&'a str>,
}

impl Artifacts<'_> {
    /// `label,time,<variables>` and one row per sample. A variable without a
    /// value at that point is an empty cell.
    pub fn csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["label", "time"];
        header.extend(self.variables.iter().map(String::as_str));
        w.write_record(&header).expect("in-memory write");
        for traj in self.trajectories {
            for s in &traj.samples {
                let mut row = vec![traj.label.clone(), fmt_value(s.time)];
                row.extend(
                    self.variables
                        .iter()
                        .map(|v| s.env.get(v).map(fmt_value).unwrap_or_default()),
                );
                w.write_record(&row).expect("in-memory write");
            }
        }
        w.into_inner().expect("in-memory write")
    }

    pub fn json(&self) -> Vec<u8> {
        let doc = Document {
            schema_version: SCHEMA_VERSION,
            solver: match self.mode {
                SolverMode::Exact => SolverDto {
                    mode: "exact",
                    step: None,
                },
                SolverMode::Rk4 { step } => SolverDto { mode: "rk4", step },
            },
            limits: LimitsDto {
                max_time: self.spec.limits.max_time,
                max_iterations: self.spec.limits.max_iterations,
            },
            plot: PlotDto {
                graph: self.spec.graph.name(),
                axes: self
                    .spec
                    .axes
                    .iter()
                    .map(|g| AxisDto {
                        kind: g.kind(),
                        vars: g.vars(),
                    })
                    .collect(),
            },
            variables: self.variables,
            trajectories: self.trajectories.iter().map(|t| self.trajectory_dto(t)).collect(),
        };
        let mut out = serde_json::to_vec_pretty(&doc).expect("serializable document");
        out.push(b'\n');
        out
    }

    fn trajectory_dto<'t>(&self, t: &'t Trajectory) -> TrajectoryDto<'t> {
        TrajectoryDto {
            label: &t.label,
            initial: env_map(&t.initial),
            outcome: self.outcome_dto(&t.outcome),
            segments: t
                .segments
                .iter()
                .map(|s| match &s.kind {
                    SegmentKind::Continuous(sol) => SegmentDto::Continuous {
                        start: s.start,
                        end: s.end,
                        vars: sol.system().vars.iter().map(String::as_str).collect(),
                    },
                    SegmentKind::Discrete { var, old, new } => SegmentDto::Discrete {
                        start: s.start,
                        end: s.end,
                        var,
                        old: *old,
                        new: *new,
                    },
                    SegmentKind::Terminal(o) => SegmentDto::Terminal {
                        start: s.start,
                        end: s.end,
                        outcome: o.variant(),
                    },
                })
                .collect(),
            samples: t
                .samples
                .iter()
                .map(|s| SampleDto {
                    time: s.time,
                    values: env_map(&s.env),
                })
                .collect(),
        }
    }

    fn outcome_dto<'t>(&self, o: &'t Outcome) -> OutcomeDto<'t> {
        let mut dto = OutcomeDto {
            variant: o.variant(),
            env: env_map(o.env()),
            elapsed: None,
            bound: None,
            error: None,
        };
        match o {
            Outcome::BoundReached { kind, elapsed, .. } => {
                dto.elapsed = Some(*elapsed);
                dto.bound = Some(match kind {
                    BoundKind::MaxIterations => "max-iterations",
                    BoundKind::MaxTime => "max-time",
                });
            }
            Outcome::TerminatedEarly { elapsed, .. } => dto.elapsed = Some(*elapsed),
            Outcome::Err(info) => {
                let at = self.source.and_then(|s| info.span.line_col(s));
                dto.error = Some(ErrorDto {
                    kind: info.kind.name(),
                    message: info.message(self.source),
                    text: self
                        .source
                        .and_then(|s| info.span.text(s))
                        .unwrap_or(&info.text)
                        .to_owned(),
                    line: at.map(|(l, _)| l),
                    column: at.map(|(_, c)| c),
                });
            }
            Outcome::Skip(_) | Outcome::Stop(_) => {}
        }
        dto
    }

    /// A gnuplot script with inline data: one graph per axis group, every
    /// trajectory overlaid, start points circled and end points boxed.
    pub fn plot_script(&self) -> String {
        let mut out = String::new();
        let cols: BTreeMap<&str, usize> = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i + 2))
            .collect();
        let _ = writeln!(out, "# gnuplot script; columns: time {}", self.variables.join(" "));
        out.push_str("set datafile missing '?'\n");
        for (i, t) in self.trajectories.iter().enumerate() {
            let _ = writeln!(out, "# {}", t.label);
            let _ = writeln!(out, "$data{i} << EOD");
            for s in &t.samples {
                out.push_str(&self.data_row(s.time, &s.env));
            }
            out.push_str("EOD\n");
            let _ = writeln!(out, "$ends{i} << EOD");
            if let (Some(first), Some(last)) = (t.samples.first(), t.samples.last()) {
                out.push_str(&self.data_row(first.time, &first.env));
                out.push_str(&self.data_row(last.time, &last.env));
            }
            out.push_str("EOD\n");
        }
        let _ = writeln!(out, "set multiplot layout {},1", self.spec.axes.len().max(1));
        for group in &self.spec.axes {
            let Some(using) = group
                .vars()
                .iter()
                .map(|v| cols.get(v).map(usize::to_string))
                .collect::<Option<Vec<_>>>()
            else {
                let _ = writeln!(out, "# {group}: not among the exported variables");
                continue;
            };
            let using = match group {
                AxisGroup::Time(_) => format!("1:{}", using[0]),
                _ => using.join(":"),
            };
            let command = if matches!(group, AxisGroup::Triple(..)) {
                "splot"
            } else {
                "plot"
            };
            let mut labels = group.vars();
            if matches!(group, AxisGroup::Time(_)) {
                labels.insert(0, "time");
            }
            let _ = writeln!(out, "set title {}", quote(&group.to_string()));
            for (axis, label) in ["xlabel", "ylabel", "zlabel"].iter().zip(&labels) {
                let _ = writeln!(out, "set {axis} {}", quote(label));
            }
            if self.trajectories.is_empty() {
                out.push_str("# no trajectories\n");
                continue;
            }
            let mut items = Vec::new();
            for (i, t) in self.trajectories.iter().enumerate() {
                let lc = i + 1;
                items.push(format!(
                    "$data{i} using {using} with points pt 7 ps 0.5 lc {lc} title {}",
                    quote(&t.label)
                ));
                items.push(format!(
                    "$ends{i} every ::0::0 using {using} with points pt 6 ps 3 lc {lc} notitle"
                ));
                items.push(format!(
                    "$ends{i} every ::1::1 using {using} with points pt 4 ps 3 lc {lc} notitle"
                ));
            }
            let _ = writeln!(out, "{command} {}", items.join(", \\\n    "));
        }
        out.push_str("unset multiplot\n");
        out
    }

    fn data_row(&self, time: f64, env: &Env) -> String {
        let mut row = fmt_value(time);
        for v in self.variables {
            row.push(' ');
            match env.get(v) {
                Some(x) => row.push_str(&fmt_value(x)),
                None => row.push('?'),
            }
        }
        row.push('\n');
        row
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn env_map(env: &Env) -> BTreeMap<&str, f64> {
    env.iter().collect()
}

#[derive(Serialize)]
struct Document<'a> {
    schema_version: &'static str,
    solver: SolverDto,
    limits: LimitsDto,
    plot: PlotDto<'a>,
    variables: &'a [String],
    trajectories: Vec<TrajectoryDto<'a>>,
}

#[derive(Serialize)]
struct SolverDto {
    mode: &'static str,
    /// `null` means the default step for each statement.
    step: Option<f64>,
}

#[derive(Serialize)]
struct LimitsDto {
    max_time: f64,
    max_iterations: usize,
}

#[derive(Serialize)]
struct PlotDto<'a> {
    graph: &'static str,
    axes: Vec<AxisDto<'a>>,
}

#[derive(Serialize)]
struct AxisDto<'a> {
    kind: &'static str,
    vars: Vec<&'a str>,
}

#[derive(Serialize)]
struct TrajectoryDto<'a> {
    label: &'a str,
    initial: BTreeMap<&'a str, f64>,
    outcome: OutcomeDto<'a>,
    segments: Vec<SegmentDto<'a>>,
    samples: Vec<SampleDto<'a>>,
}

#[derive(Serialize)]
struct OutcomeDto<'a> {
    variant: &'static str,
    env: BTreeMap<&'a str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorDto>,
}

#[derive(Serialize)]
struct ErrorDto {
    kind: &'static str,
    message: String,
    text: String,
    line: Option<usize>,
    column: Option<usize>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SegmentDto<'a> {
    Continuous {
        start: f64,
        end: f64,
        vars: Vec<&'a str>,
    },
    /// `old` is null when the variable had no value before.
    Discrete {
        start: f64,
        end: f64,
        var: &'a str,
        old: Option<f64>,
        new: f64,
    },
    Terminal {
        start: f64,
        end: f64,
        outcome: &'static str,
    },
}

#[derive(Serialize)]
struct SampleDto<'a> {
    time: f64,
    values: BTreeMap<&'a str, f64>,
}
