//! Radial reduction of the stationary spinor soliton.
//!
//! With the spherical ansatz the 4-spinor reduces to two real radial
//! amplitudes F(x) (upper) and G(x) (lower) obeying, in dimensionless units,
//!
//! ```text
//!   G' + 2G/x = (Ω − 1) F + (F² − G²) F
//!  −F'        = (Ω + 1) G ∓ (F² − G²) G
//! ```
//!
//! The lower sign ([`RadialSystem::Dirac`]) is what the field equation
//! reduces to; the effective mass `1 − (F² − G²)` enters both equations.
//! The upper sign ([`RadialSystem::Printed`]) is kept for comparison: it has
//! no localized solutions, every trajectory is captured by the fixed point
//! `F = sqrt(1 − Ω), G = 0`.

pub mod integrator;
mod profile;
mod shooting;
mod solve;

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
pub use integrator::{Halt, StepControl};
pub(crate) use profile::hermite;
pub use profile::{RadialProfile, TailFit};
pub use shooting::{coarse_scan, shoot, trial, ShootSettings, ShootingResult};
pub use solve::{solve_ground, Diagnostics, Provenance, SolitonSolution, SolveOptions};

/// Default start offset for the small-x series.
pub const DEFAULT_X0: f64 = 1e-4;

/// Which sign of the cubic term enters the lower-component equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialSystem {
    /// `−F' = (Ω + 1) G − (F² − G²) G`.
    #[default]
    Dirac,
    /// `−F' = (Ω + 1) G + (F² − G²) G`.
    Printed,
}

impl RadialSystem {
    fn cubic_sign(self) -> f64 {
        match self {
            RadialSystem::Dirac => -1.0,
            RadialSystem::Printed => 1.0,
        }
    }

    /// Right-hand side `(dF/dx, dG/dx)`; requires `x > 0`.
    #[inline]
    pub fn rhs(self, x: f64, f: f64, g: f64, omega: f64) -> (f64, f64) {
        let n = f * f - g * g;
        let df = -((omega + 1.0) * g + self.cubic_sign() * n * g);
        let dg = -2.0 * g / x + (omega - 1.0) * f + n * f;
        (df, dg)
    }

    /// Second-order regular series at `x0`: `G ≈ c₁x`, `F ≈ F0 + F''(0) x²/2`.
    pub fn series_start(self, f0: f64, omega: f64, x0: f64) -> Result<RadialState> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(domain(format!("series offset x0 = {x0} must be positive")));
        }
        if !f0.is_finite() {
            return Err(domain(format!("F0 = {f0} is not finite")));
        }
        let c1 = series_slope(f0, omega);
        // F'(x) = −(1 + Ω ± F0²) c₁ x to leading order
        let mass = 1.0 + omega + self.cubic_sign() * f0 * f0;
        Ok(RadialState {
            x: x0,
            f: f0 - mass * c1 * x0 * x0 / 2.0,
            g: c1 * x0,
        })
    }

    /// Exact first integrals of the system for a decaying solution, as
    /// `(kinetic identity residual, scalar identity residual)` in terms of
    /// the radial integrals. Both vanish for a localized solution.
    ///
    /// Multiplying the two equations by `x²F` and `x²G` and adding gives the
    /// kinetic identity; subtracting gives a total derivative `(x²FG)'`.
    pub fn direct_identities(
        self,
        omega: f64,
        q: f64,
        qs: f64,
        i4: f64,
        j4: f64,
        t: f64,
    ) -> (f64, f64) {
        match self {
            RadialSystem::Dirac => (t - (omega * q - qs + i4), omega * qs - q + j4),
            RadialSystem::Printed => (t - (omega * q - qs + j4), omega * qs - q + i4),
        }
    }
}

impl std::fmt::Display for RadialSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadialSystem::Dirac => f.write_str("dirac"),
            RadialSystem::Printed => f.write_str("printed"),
        }
    }
}

impl std::str::FromStr for RadialSystem {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirac" => Ok(RadialSystem::Dirac),
            "printed" => Ok(RadialSystem::Printed),
            other => Err(domain(format!("unknown radial system '{other}'"))),
        }
    }
}

/// Slope c₁ of G at the origin: matching `G' + 2G/x = 3c₁` to the
/// right-hand side at x = 0.
pub fn series_slope(f0: f64, omega: f64) -> f64 {
    ((omega - 1.0) * f0 + f0 * f0 * f0) / 3.0
}

/// A point of the radial trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialState {
    pub x: f64,
    pub f: f64,
    pub g: f64,
}

/// Right-hand side of the default ([`RadialSystem::Dirac`]) system.
pub fn rhs(state: RadialState, omega: f64) -> (f64, f64) {
    RadialSystem::Dirac.rhs(state.x, state.f, state.g, omega)
}

/// Series start for the default system.
pub fn series_start(f0: f64, omega: f64, x0: f64) -> Result<RadialState> {
    RadialSystem::Dirac.series_start(f0, omega, x0)
}

/// Fate of a shooting trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// F stays positive and turns back up (F reaches a minimum, G < 0).
    DivergedUp,
    /// F crosses zero, or the amplitudes blow up before F ever turned up.
    DivergedDown,
    /// Both amplitudes fell below the decay floor.
    Decayed,
    /// x_max reached with no guard triggered.
    Indeterminate,
}

/// Halting guards of a shooting integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Guards {
    /// Blow-up threshold as a multiple of F0.
    pub blowup_factor: f64,
    pub decay_floor: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Self {
            blowup_factor: 1e3,
            decay_floor: 1e-12,
        }
    }
}

impl Guards {
    /// Label of a single state given the start amplitude `f0`, or
    /// `Indeterminate` if no guard fires.
    pub fn check(&self, f: f64, g: f64, f0: f64) -> Outcome {
        let blowup = self.blowup_factor * f0.abs();
        if f.abs() < self.decay_floor && g.abs() < self.decay_floor {
            Outcome::Decayed
        } else if f.abs() > blowup || g.abs() > blowup {
            // a core blow-up with G > 0 never turned F upward
            if f > 0.0 && g < 0.0 {
                Outcome::DivergedUp
            } else {
                Outcome::DivergedDown
            }
        } else if f < 0.0 {
            Outcome::DivergedDown
        } else if g < 0.0 {
            Outcome::DivergedUp
        } else {
            Outcome::Indeterminate
        }
    }
}

/// Sampled solution of the radial initial-value problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub df: Vec<f64>,
    pub dg: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn push(&mut self, x: f64, y: &[f64; 2], dy: &[f64; 2]) {
        self.x.push(x);
        self.f.push(y[0]);
        self.g.push(y[1]);
        self.df.push(dy[0]);
        self.dg.push(dy[1]);
    }

    pub fn last_state(&self) -> Option<RadialState> {
        let i = self.x.len().checked_sub(1)?;
        Some(RadialState {
            x: self.x[i],
            f: self.f[i],
            g: self.g[i],
        })
    }
}

/// Settings shared by every integration of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSettings {
    pub system: RadialSystem,
    pub step: StepControl,
    pub guards: Guards,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            system: RadialSystem::Dirac,
            step: StepControl::default(),
            guards: Guards::default(),
        }
    }
}

/// Labels a trajectory by its final sample.
pub fn classify(trajectory: &Trajectory, guards: &Guards) -> Outcome {
    match trajectory.last_state() {
        Some(s) => guards.check(s.f, s.g, trajectory.f[0]),
        None => Outcome::Indeterminate,
    }
}

/// Integrates outwards from `start` until a guard fires or `x_max` is hit.
pub fn integrate(
    start: RadialState,
    omega: f64,
    x_max: f64,
    settings: &IntegrationSettings,
) -> Result<(Trajectory, Outcome)> {
    if !(start.x > 0.0) {
        return Err(domain("integration must start at x > 0"));
    }
    if !(1e-14..=1e-6).contains(&settings.step.rtol) {
        return Err(domain(format!(
            "tolerance {} outside [1e-14, 1e-6]",
            settings.step.rtol
        )));
    }
    let system = settings.system;
    let guards = settings.guards;
    let f0 = start.f;
    let mut traj = Trajectory::default();
    let mut outcome = Outcome::Indeterminate;
    integrator::dopri5(
        |x, y: &[f64; 2]| {
            let (df, dg) = system.rhs(x, y[0], y[1], omega);
            [df, dg]
        },
        start.x,
        [start.f, start.g],
        x_max,
        &settings.step,
        |x, y, dy| {
            traj.push(x, y, dy);
            outcome = guards.check(y[0], y[1], f0);
            if outcome == Outcome::Indeterminate {
                ControlFlow::Continue(())
            } else {
                ControlFlow::Break(())
            }
        },
    )?;
    Ok((traj, outcome))
}
