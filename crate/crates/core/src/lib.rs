//! Numerical laboratory for one-dimensional diffusion across a sharp
//! interface.
//!
//! The physical diffusion is built as `Y = s(B^alpha)` from a skew Brownian
//! motion `B^alpha` and a piecewise-linear scaling map `s`. This crate
//! simulates it exactly in law on a time grid, estimates first-passage and
//! occupation-time functionals, solves the backward interface PDE with
//! Crank–Nicolson, and runs statistical experiments that cross-check the two
//! routes against each other.

pub mod banded;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod medium;
pub mod parallel;
pub mod pde;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod sbm;
pub mod stats;

pub use error::{Error, Result};
pub use experiments::Experiment;
pub use medium::{flux_continuity_lambda, TwoSidedMedium};
pub use report::ExperimentReport;
pub use rng::RngStream;
