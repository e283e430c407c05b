//! Parallel fan-out over initial conditions.

use rayon::prelude::*;

use hybridsim_core::odesolve::SolverMode;
use hybridsim_core::semantics::Limits;
use hybridsim_core::syntax::{desugar, SourceUnit};
use hybridsim_core::trajectory::{expand_variability, simulate_one, Trajectory, TrajectoryError, DEFAULT_MAX_PRODUCT};

/// Overrides the limit on the number of initial-condition combinations.
pub const MAX_PRODUCT_VAR: &str = "HYBRIDSIM_MAX_PRODUCT";

/// The combination limit from the environment, or the default when unset.
/// An unparsable value is returned as an error message.
pub fn max_product() -> Result<usize, String> {
    match std::env::var(MAX_PRODUCT_VAR) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| format!("{MAX_PRODUCT_VAR} must be a non-negative integer, got '{text}'")),
        Err(_) => Ok(DEFAULT_MAX_PRODUCT),
    }
}

/// One trajectory per initial condition, computed in parallel and returned
/// in grid order.
pub fn simulate_all(
    unit: &SourceUnit,
    mode: SolverMode,
    limits: &Limits,
    dt: f64,
    cap: usize,
) -> Result<Vec<Trajectory>, TrajectoryError> {
    let inits = expand_variability(unit, cap)?;
    let body = desugar(unit).body;
    Ok(inits
        .par_iter()
        .map(|init| simulate_one(&body, init, mode, limits, dt))
        .collect())
}
