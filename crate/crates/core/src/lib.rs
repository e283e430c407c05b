//! Simulation core for hybrid programs: while-programs whose atomic
//! statements include systems of linear differential equations run for a
//! given duration.
//!
//! The crate is `no_std` and only needs `alloc`. It covers parsing, the
//! failure-aware big-step and small-step semantics, an exact
//! (matrix-exponential) and an RK4 solver for affine systems, and piecewise
//! trajectory sampling. File formats and the command line live in the
//! `hybridsim` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod gen;
pub mod linearize;
pub mod matrix;
pub mod odesolve;
pub mod semantics;
pub mod syntax;
pub mod trajectory;
