//! Numerical toolkit for threshold saturation in coupled scalar recursions.
//!
//! The library models density-evolution style recursions x <- f(g(x); eps)
//! through a scalar admissible system contract, computes their potential
//! functions, thresholds and energy gaps, simulates spatially-coupled
//! versions (basic and one-sided), and numerically verifies the supporting
//! shift/Hessian identities and the saturation theorem itself.
//!
//! Data-parallel inner loops (grid audits, eps sweeps, trial batches) run on
//! rayon under the default `parallel` feature and fall back to sequential
//! loops without it; results are identical either way.

pub mod coupled;
pub mod error;
pub mod exec;
pub mod models;
pub mod numerics;
pub mod single;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{Bracket, Tolerances};
pub use system::{check_admissible, iterate_to_fixed_point, recursion_step, ScalarSystem};
