//! Command-line front end for `hybridsim-core`: checking, running and
//! simulating `.lince` programs, and exporting trajectories as CSV, JSON
//! and gnuplot scripts.

pub mod axes;
pub mod cli;
pub mod export;
pub mod selftest;
pub mod sim;

pub use axes::{parse_axes, AxisError, AxisGroup, GraphType, PlotSpec};
pub use export::Artifacts;
pub use sim::simulate_all;
