//! Numerical laboratory for the stationary soliton of a nonlinear spinor
//! field model: radial shooting solver, integral identities, and the EPR
//! spin correlation of the entangled two-soliton singlet, both exact and by
//! Monte-Carlo phase averaging.

// `!(x > 0.0)` is used on purpose so that NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod observables;
pub mod params;
pub mod radial;

pub use error::{Error, Result};
