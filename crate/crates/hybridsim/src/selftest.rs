//! Differential testing of the simulator against itself on random
//! programs: direct evaluation, the step machine and the segment table must
//! all agree.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use hybridsim_core::gen::{Case, CaseGen, GenConfig};
use hybridsim_core::odesolve::SolverMode;
use hybridsim_core::semantics::{
    applicable_rules, big_step, run_to_terminal, small_step, Config, Limits, Outcome, Step,
};
use hybridsim_core::trajectory::{check_trajectory, simulate_one, InitialCondition};

/// Upper bound on machine steps when walking one configuration.
const MAX_STEPS: usize = 100_000;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub programs: usize,
    pub queries: usize,
    /// Queries where direct evaluation and the machine disagree.
    pub disagreements: usize,
    pub configurations: usize,
    /// Configurations with more than one applicable rule.
    pub ambiguous: usize,
    /// Sampled times where the segment table disagrees with direct evaluation.
    pub segment_mismatches: usize,
    /// Hash of every outcome's variant and value bits, for run-to-run
    /// comparison.
    pub digest: u64,
    pub first_failure: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.disagreements == 0 && self.ambiguous == 0 && self.segment_mismatches == 0
    }

    fn merge(mut self, other: Report) -> Report {
        self.programs += other.programs;
        self.queries += other.queries;
        self.disagreements += other.disagreements;
        self.configurations += other.configurations;
        self.ambiguous += other.ambiguous;
        self.segment_mismatches += other.segment_mismatches;
        let mut h = DefaultHasher::new();
        (self.digest, other.digest).hash(&mut h);
        self.digest = h.finish();
        self.first_failure = self.first_failure.or(other.first_failure);
        self
    }
}

/// Program `i` of a run seeded with `seed`.
pub fn case(seed: u64, i: u64, n_times: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i));
    CaseGen::new(&mut rng, GenConfig::default()).case(n_times)
}

/// Checks `cases` generated programs at `n_times` query times each.
pub fn run(seed: u64, cases: usize, n_times: usize) -> Report {
    let parts: Vec<Report> = (0..cases as u64)
        .into_par_iter()
        .map(|i| check_case(seed, i, &case(seed, i, n_times)))
        .collect();
    parts.into_iter().fold(Report::default(), Report::merge)
}

fn check_case(seed: u64, i: u64, case: &Case) -> Report {
    let mode = SolverMode::Exact;
    let limits = Limits::default();
    let mut r = Report {
        programs: 1,
        ..Report::default()
    };
    let mut h = DefaultHasher::new();
    let fail = |r: &mut Report, what: &str, t: f64| {
        r.first_failure
            .get_or_insert_with(|| format!("seed {seed} case {i} t={t}: {what}\n{}", case.program));
    };

    for &t in &case.times {
        r.queries += 1;
        let big = big_step(&case.program, &case.env, t, mode, &limits);
        let small = run_to_terminal(Config::new(case.program.clone(), case.env.clone(), t), mode, &limits);
        hash_outcome(&big, &mut h);
        if !big.agrees_with(&small, 1e-9) {
            r.disagreements += 1;
            fail(&mut r, &format!("{big:?} vs {small:?}"), t);
        }

        let mut cfg = Config::new(case.program.clone(), case.env.clone(), t);
        for _ in 0..MAX_STEPS {
            r.configurations += 1;
            if applicable_rules(&cfg, mode).len() > 1 {
                r.ambiguous += 1;
                fail(&mut r, "two applicable rules", t);
            }
            match small_step(&cfg, mode).step {
                Step::Next(next) => cfg = next,
                _ => break,
            }
        }
    }

    let init = InitialCondition {
        env: case.env.clone(),
        label: "case".into(),
    };
    let limits = Limits {
        max_time: 4.0,
        ..limits
    };
    let traj = simulate_one(&case.program, &init, mode, &limits, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(i);
    let consistency = check_trajectory(&traj, &case.program, mode, &limits, case.times.len(), &mut rng);
    if !consistency.passed() {
        r.segment_mismatches += consistency.mismatches;
        fail(&mut r, &format!("segment table off by {}", consistency.worst), f64::NAN);
    }
    r.digest = h.finish();
    r
}

fn hash_outcome(o: &Outcome, h: &mut impl Hasher) {
    o.variant().hash(h);
    for (k, v) in o.env().iter() {
        k.hash(h);
        v.to_bits().hash(h);
    }
    if let Some(e) = o.error() {
        e.kind.name().hash(h);
    }
}
