//! Solutions of affine systems `x' = A x + b`: exact via the matrix
//! exponential, or numerical via classic fixed-step RK4.

use alloc::vec::Vec;

use crate::linearize::AffineSystem;
use crate::matrix::{expm, Matrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolverMode {
    Exact,
    /// Fixed-step RK4. Without an explicit step each segment of duration `d`
    /// uses `min(1e-3, d / 16)`.
    Rk4 {
        step: Option<f64>,
    },
}

impl SolverMode {
    pub const RK4: SolverMode = SolverMode::Rk4 { step: None };

    /// RK4 step used for a segment of the given duration.
    pub fn rk4_step(&self, duration: f64) -> f64 {
        match self {
            SolverMode::Rk4 { step: Some(h) } => *h,
            _ if duration > 0.0 => (duration / 16.0).min(1e-3),
            _ => 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("the solution is not finite at local time {0}")]
    NumericalOverflow(f64),
}

fn finite_or(x: Vec<f64>, t: f64) -> Result<Vec<f64>, SolverError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(SolverError::NumericalOverflow(t))
    }
}

/// `x(t)` by exponentiating the augmented matrix `[[A t, b t], [0, 0]]`.
pub fn solve_exact(sys: &AffineSystem, x0: &[f64], t: f64) -> Result<Vec<f64>, SolverError> {
    let n = sys.dim();
    assert_eq!(x0.len(), n, "initial state has the wrong dimension");
    if t == 0.0 {
        return Ok(x0.to_vec());
    }
    let aug = Matrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => sys.a[(i, j)] * t,
        (true, false) => sys.b[i] * t,
        _ => 0.0,
    });
    let e = expm(&aug).ok_or(SolverError::NumericalOverflow(t))?;
    let x = (0..n)
        .map(|i| {
            let row = e.row(i);
            row[..n].iter().zip(x0).map(|(a, x)| a * x).sum::<f64>() + row[n]
        })
        .collect();
    finite_or(x, t)
}

fn rk4_step(sys: &AffineSystem, x: &[f64], h: f64) -> Vec<f64> {
    let shifted = |k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + s * k).collect() };
    let k1 = sys.rhs(x);
    let k2 = sys.rhs(&shifted(&k1, h / 2.0));
    let k3 = sys.rhs(&shifted(&k2, h / 2.0));
    let k4 = sys.rhs(&shifted(&k3, h));
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Number of whole steps of size `h` that fit in `[0, t]`.
fn whole_steps(t: f64, h: f64) -> u64 {
    let mut k = libm::floor(t / h) as u64;
    while (k + 1) as f64 * h <= t {
        k += 1;
    }
    while k > 0 && k as f64 * h > t {
        k -= 1;
    }
    k
}

/// Classic RK4 on the grid `0, h, 2h, ...`, with a shortened last step
/// landing exactly on `t`.
pub fn solve_rk4(sys: &AffineSystem, x0: &[f64], t: f64, h: f64) -> Result<Vec<f64>, SolverError> {
    assert!(h > 0.0, "RK4 step must be positive");
    let mut cache = None;
    rk4_from(sys, x0, t, h, &mut cache)
}

fn rk4_from(
    sys: &AffineSystem,
    x0: &[f64],
    t: f64,
    h: f64,
    cache: &mut Option<(u64, Vec<f64>)>,
) -> Result<Vec<f64>, SolverError> {
    assert_eq!(x0.len(), sys.dim(), "initial state has the wrong dimension");
    let target = whole_steps(t, h);
    let (mut k, mut x) = match cache.take() {
        Some((k, x)) if k <= target => (k, x),
        _ => (0, x0.to_vec()),
    };
    while k < target {
        x = finite_or(rk4_step(sys, &x, h), (k + 1) as f64 * h)?;
        k += 1;
    }
    let rest = t - k as f64 * h;
    let out = if rest > 0.0 {
        finite_or(rk4_step(sys, &x, rest), t)?
    } else {
        x.clone()
    };
    *cache = Some((k, x));
    Ok(out)
}

/// The flow of one differential statement from its entry state.
///
/// In RK4 mode the last whole-step state is cached, so querying increasing
/// times costs one pass over the segment in total and gives bitwise the same
/// values as independent queries.
#[derive(Clone, Debug)]
pub struct Solution {
    system: AffineSystem,
    x0: Vec<f64>,
    mode: SolverMode,
    step: f64,
    cache: Option<(u64, Vec<f64>)>,
}

impl Solution {
    /// `duration` is the length of the segment; it fixes the default RK4 step.
    pub fn new(system: AffineSystem, x0: Vec<f64>, mode: SolverMode, duration: f64) -> Self {
        assert_eq!(x0.len(), system.dim(), "initial state has the wrong dimension");
        let step = mode.rk4_step(duration);
        Solution {
            system,
            x0,
            mode,
            step,
            cache: None,
        }
    }

    pub fn system(&self) -> &AffineSystem {
        &self.system
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn mode(&self) -> SolverMode {
        self.mode
    }

    /// State at local time `t`.
    pub fn at(&mut self, t: f64) -> Result<Vec<f64>, SolverError> {
        match self.mode {
            SolverMode::Exact => solve_exact(&self.system, &self.x0, t),
            SolverMode::Rk4 { .. } => rk4_from(&self.system, &self.x0, t, self.step, &mut self.cache),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use alloc::vec;
    use core::f64::consts::PI;

    fn system(a: &[&[f64]], b: &[f64]) -> AffineSystem {
        let vars = (0..b.len()).map(|i| alloc::format!("x{i}")).collect::<Vec<String>>();
        AffineSystem::new(vars, Matrix::from_rows(a), b.to_vec())
    }

    fn decay() -> AffineSystem {
        system(&[&[-1.0]], &[0.0])
    }

    fn oscillator() -> AffineSystem {
        system(&[&[0.0, 1.0], &[-1.0, 0.0]], &[0.0, 0.0])
    }

    #[test]
    fn exact_decay() {
        let x = solve_exact(&decay(), &[1.0], 1.0).unwrap();
        assert!((x[0] - 0.36787944117144233).abs() < 1e-15);
    }

    #[test]
    fn exact_constant_acceleration() {
        let sys = system(&[&[0.0, 1.0], &[0.0, 0.0]], &[0.0, 2.0]);
        let x = solve_exact(&sys, &[0.0, 0.0], 1.0).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14, "{x:?}");
    }

    #[test]
    fn exact_half_period() {
        let x = solve_exact(&oscillator(), &[1.0, 0.0], PI).unwrap();
        assert!((x[0] + 1.0).abs() < 1e-9 && x[1].abs() < 1e-9, "{x:?}");
    }

    #[test]
    fn rk4_decay_and_zero_time() {
        let x = solve_rk4(&decay(), &[1.0], 1.0, 0.1).unwrap();
        assert!((x[0] - 0.367879).abs() < 1e-6);
        assert_eq!(solve_rk4(&decay(), &[1.0], 0.0, 0.1).unwrap(), vec![1.0]);
    }

    #[test]
    fn rk4_fourth_order() {
        let exact = solve_exact(&oscillator(), &[1.0, 0.0], PI).unwrap();
        let err = |h: f64| {
            let x = solve_rk4(&oscillator(), &[1.0, 0.0], PI, h).unwrap();
            libm::hypot(x[0] - exact[0], x[1] - exact[1])
        };
        let ratio = err(0.05) / err(0.1);
        assert!((ratio - 1.0 / 16.0).abs() < 0.3 / 16.0, "{ratio}");
    }

    #[test]
    fn monotone_queries_match_one_shot() {
        let mode = SolverMode::Rk4 { step: Some(0.013) };
        let mut sol = Solution::new(oscillator(), vec![1.0, 0.5], mode, 1.0);
        let a = sol.at(0.1).unwrap();
        let b = sol.at(0.2).unwrap();
        assert_eq!(a, solve_rk4(&oscillator(), &[1.0, 0.5], 0.1, 0.013).unwrap());
        assert_eq!(b, solve_rk4(&oscillator(), &[1.0, 0.5], 0.2, 0.013).unwrap());
        // Going back in time restarts the integration.
        assert_eq!(
            sol.at(0.05).unwrap(),
            solve_rk4(&oscillator(), &[1.0, 0.5], 0.05, 0.013).unwrap()
        );
    }

    #[test]
    fn default_step() {
        assert_eq!(SolverMode::RK4.rk4_step(0.01), 0.01 / 16.0);
        assert_eq!(SolverMode::RK4.rk4_step(5.0), 1e-3);
    }

    #[test]
    fn overflow_is_reported() {
        let sys = system(&[&[800.0]], &[0.0]);
        assert!(solve_exact(&sys, &[1.0], 1.0).is_err());
        assert!(solve_rk4(&sys, &[1.0], 1.0, 1e-3).is_err());
    }
}
