use thiserror::Error;

use crate::radial::Outcome;

/// Failures raised by the solver, the observables and the correlation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the admissible domain (frequency interval, positivity, unit vectors).
    #[error("domain error: {0}")]
    Domain(String),

    /// The integrator could not advance, typically near a blow-up.
    #[error("integration failed at x = {x}: {reason}")]
    Integration { x: f64, reason: String },

    /// Both bracket endpoints share one classification.
    #[error("bracket [{lo}, {hi}] does not straddle the ground state (both ends {outcome:?})")]
    Bracket { lo: f64, hi: f64, outcome: Outcome },

    #[error("bisection did not converge after {iterations} iterations (bracket width {width:e})")]
    Convergence { iterations: usize, width: f64 },

    /// The fitted decay exponent disagrees with the analytic one.
    #[error("tail fit nu = {nu_fit} deviates from expected {expected} by {rel_error:.3e}")]
    Tail {
        nu_fit: f64,
        expected: f64,
        rel_error: f64,
    },

    #[error("quadrature of {integral} unstable under mesh halving: relative change {rel_change:e}")]
    Quadrature { integral: &'static str, rel_change: f64 },

    /// A 3-D grid check exceeded its tolerance even after refinement.
    #[error("grid check '{check}' failed: residual {residual:e} > {tol:e}")]
    Grid {
        check: String,
        residual: f64,
        tol: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
