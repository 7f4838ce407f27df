//! Physical and dimensionless model parameters.
//!
//! Lengths are measured in units of `ell0` and the spinor amplitudes in units
//! of `kappa = sqrt(4π/(λ ℓ₀))`, which removes every constant except the
//! dimensionless frequency `Ω = ω ℓ₀ / c` from the radial equations. The
//! coupling λ can therefore be fixed after solving, from the norm of the
//! dimensionless profile.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Dimensionful parameters of the nonlinear spinor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub c: f64,
    pub ell0: f64,
    pub omega: f64,
    /// Self-coupling; `None` until fixed by [`calibrate_lambda`].
    pub lambda: Option<f64>,
}

impl PhysicalParams {
    /// Unit system ħ = c = ℓ₀ = 1 at dimensionless frequency `omega`.
    pub fn natural(omega: f64) -> Result<Self> {
        make_params(1.0, 1.0, 1.0, omega, None)
    }

    /// Largest admissible frequency, `c / ℓ₀` (excluded).
    pub fn omega_max(&self) -> f64 {
        self.c / self.ell0
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        make_params(self.hbar, self.c, self.ell0, self.omega, Some(lambda))
    }

    /// `ħω`, the energy the soliton is compared against.
    pub fn hbar_omega(&self) -> f64 {
        self.hbar * self.omega
    }
}

/// Parameters of the dimensionless radial problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessParams {
    /// Ω = ω ℓ₀ / c.
    pub omega: f64,
    /// Amplitude scale κ; `None` while λ is uncalibrated.
    pub kappa: Option<f64>,
    /// Decay exponent of the far tail, sqrt(1 − Ω²).
    pub nu: f64,
    /// Tail ratio 1 + Ω relating G to −F′.
    pub b: f64,
}

impl DimensionlessParams {
    /// Builds the record for a dimensionless frequency in (0, 1).
    pub fn from_omega(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(domain(format!(
                "dimensionless frequency {omega} outside the admissible interval 0 < Ω < 1"
            )));
        }
        Ok(Self {
            omega,
            kappa: None,
            nu: (1.0 - omega * omega).sqrt(),
            b: 1.0 + omega,
        })
    }

    /// Inverse of [`to_dimensionless`] for a chosen unit system.
    pub fn to_physical(&self, hbar: f64, c: f64, ell0: f64) -> Result<PhysicalParams> {
        let lambda = self.kappa.map(|k| 4.0 * PI / (k * k * ell0));
        make_params(hbar, c, ell0, self.omega * c / ell0, lambda)
    }
}

/// Validates a parameter record. ω must lie in `[0, c/ℓ₀)`.
pub fn make_params(
    hbar: f64,
    c: f64,
    ell0: f64,
    omega: f64,
    lambda: Option<f64>,
) -> Result<PhysicalParams> {
    for (name, v) in [("hbar", hbar), ("c", c), ("ell0", ell0), ("omega", omega)] {
        if !v.is_finite() {
            return Err(domain(format!("{name} = {v} is not finite")));
        }
    }
    for (name, v) in [("hbar", hbar), ("c", c), ("ell0", ell0)] {
        if v <= 0.0 {
            return Err(domain(format!("{name} = {v} must be strictly positive")));
        }
    }
    if let Some(l) = lambda {
        if !(l.is_finite() && l > 0.0) {
            return Err(domain(format!("lambda = {l} must be finite and positive")));
        }
    }
    let omega_max = c / ell0;
    if !(0.0..omega_max).contains(&omega) {
        return Err(domain(format!(
            "omega = {omega} outside the admissible interval 0 < omega < c/ell0 = {omega_max}; \
             no localized solution exists there"
        )));
    }
    Ok(PhysicalParams {
        hbar,
        c,
        ell0,
        omega,
        lambda,
    })
}

pub fn to_dimensionless(params: &PhysicalParams) -> Result<DimensionlessParams> {
    let mut dp = DimensionlessParams::from_omega(params.omega * params.ell0 / params.c)?;
    dp.kappa = params.lambda.map(|l| (4.0 * PI / (l * params.ell0)).sqrt());
    Ok(dp)
}

/// Coupling that makes the dimensionful norm ∫ r²(f² + g²) dr equal ħ,
/// given the dimensionless norm ∫ x²(F² + G²) dx.
pub fn calibrate_lambda(norm_tilde: f64, ell0: f64, hbar: f64) -> Result<f64> {
    if !(norm_tilde.is_finite() && norm_tilde > 0.0) {
        return Err(domain(format!(
            "dimensionless norm {norm_tilde} must be finite and positive"
        )));
    }
    if !(ell0 > 0.0 && hbar > 0.0) {
        return Err(domain("ell0 and hbar must be positive"));
    }
    Ok(4.0 * PI * ell0 * ell0 * norm_tilde / hbar)
}
