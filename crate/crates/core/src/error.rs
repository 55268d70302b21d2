//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Root bracketing failed: the function has the same sign at both ends.
    #[error("no bracket: same sign at lo={lo} and hi={hi}")]
    NoBracket { lo: f64, hi: f64 },

    /// Iteration budget exhausted; `best` is the estimate at the last step.
    #[error("max iterations exceeded (best estimate {best})")]
    MaxIterExceeded { best: f64 },

    #[error("empty interval: lo={lo} > hi={hi}")]
    EmptyInterval { lo: f64, hi: f64 },

    /// A sampled function value was NaN or infinite.
    #[error("non-finite sample at x={x}: {value}")]
    NonFiniteSample { x: f64, value: f64 },

    /// An argument left the unit interval.
    #[error("{name}={value} outside [0, 1]")]
    Domain { name: &'static str, value: f64 },

    /// No epsilon satisfies x = f(g(x); eps) because f(g(x); 1) < x.
    #[error("no epsilon-root at x={x}: f(g(x);1)={fg1} < x")]
    NoEpsilonRoot { x: f64, fg1: f64 },

    /// The energy gap is not positive, so Theorem-style width bounds are void.
    #[error("no positive energy gap at eps={eps} (gap={gap})")]
    NoPositiveGap { eps: f64, gap: f64 },

    #[error("dimension mismatch: state length {state}, expected {expected}")]
    DimensionMismatch { state: usize, expected: usize },

    /// The state does not have the structure required by the shift identity.
    #[error("shift identity precondition: {0}")]
    ShiftPrecondition(String),

    #[error("not admissible: {0}")]
    NotAdmissible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The trial entropy has no positive root.
    #[error("no positive trial-entropy root")]
    NoTrialEntropyRoot,
}

pub type Result<T> = std::result::Result<T, Error>;
