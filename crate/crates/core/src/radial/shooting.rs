use serde::{Deserialize, Serialize};

use super::{integrate, IntegrationSettings, Outcome, RadialSystem, Trajectory};
use crate::error::{domain, Error, Result};

/// Controls one family of shooting integrations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootSettings {
    pub integration: IntegrationSettings,
    pub x0: f64,
    pub x_max: f64,
    /// How many times an `Indeterminate` trial may grow x_max by 1.5×.
    pub max_extensions: usize,
    pub max_iterations: usize,
    pub scan_step: f64,
    pub scan_max: f64,
}

/// Converged shooting parameter F0 = F(0) and the bisection record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub f0: f64,
    /// Final bracket, ordered as (DivergedUp end, DivergedDown end).
    pub bracket: (f64, f64),
    pub n_iterations: usize,
    pub classification_history: Vec<(f64, Outcome)>,
}

impl ShootingResult {
    pub fn width(&self) -> f64 {
        (self.bracket.1 - self.bracket.0).abs()
    }
}

/// Integrates from the series start at `f0` and labels the result,
/// extending x_max while the label is `Indeterminate`.
pub fn trial(f0: f64, omega: f64, settings: &ShootSettings) -> Result<(Outcome, Trajectory)> {
    let system: RadialSystem = settings.integration.system;
    let start = system.series_start(f0, omega, settings.x0)?;
    let mut x_max = settings.x_max;
    let mut extensions = 0;
    loop {
        let (traj, outcome) = integrate(start, omega, x_max, &settings.integration)?;
        if outcome != Outcome::Indeterminate || extensions >= settings.max_extensions {
            return Ok((outcome, traj));
        }
        x_max *= 1.5;
        extensions += 1;
    }
}

fn label(f0: f64, omega: f64, settings: &ShootSettings) -> Result<Outcome> {
    trial(f0, omega, settings).map(|(o, _)| o)
}

fn scan_with_step(omega: f64, settings: &ShootSettings, step: f64) -> Option<(f64, f64)> {
    let n = (settings.scan_max / step).round() as usize;
    let mut prev: Option<(f64, Outcome)> = None;
    for k in 1..=n {
        let f0 = k as f64 * step;
        // a failed integration (blow-up faster than the guard) breaks adjacency
        let here = label(f0, omega, settings).ok().map(|o| (f0, o));
        if let (Some((a, Outcome::DivergedUp)), Some((b, Outcome::DivergedDown))) = (prev, here) {
            return Some((a, b));
        }
        prev = here;
    }
    None
}

/// Scans F0 over `(0, scan_max]` and returns the first adjacent pair
/// classified (DivergedUp, DivergedDown). Retries once with a 10× finer
/// step before giving up.
pub fn coarse_scan(omega: f64, settings: &ShootSettings) -> Result<(f64, f64)> {
    if !(settings.scan_step > 0.0 && settings.scan_max > settings.scan_step) {
        return Err(domain("scan range must satisfy 0 < step < max"));
    }
    scan_with_step(omega, settings, settings.scan_step)
        .or_else(|| scan_with_step(omega, settings, settings.scan_step / 10.0))
        .ok_or_else(|| {
            let outcome = label(settings.scan_step, omega, settings).unwrap_or(Outcome::Indeterminate);
            Error::Bracket {
                lo: settings.scan_step,
                hi: settings.scan_max,
                outcome,
            }
        })
}

/// Bisects F0 inside `bracket0` until the bracket is no wider than
/// `shoot_tol · max(1, F0)` or can no longer be split in floating point.
pub fn shoot(
    omega: f64,
    bracket0: (f64, f64),
    shoot_tol: f64,
    settings: &ShootSettings,
) -> Result<ShootingResult> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(domain(format!("Ω = {omega} outside (0, 1)")));
    }
    let (a, b) = bracket0;
    let la = label(a, omega, settings)?;
    let lb = label(b, omega, settings)?;
    let mut history = vec![(a, la), (b, lb)];
    let (mut up, mut down) = match (la, lb) {
        _ if a == b => {
            return Err(Error::Bracket {
                lo: a,
                hi: b,
                outcome: la,
            })
        }
        (Outcome::DivergedUp, Outcome::DivergedDown) => (a, b),
        (Outcome::DivergedDown, Outcome::DivergedUp) => (b, a),
        _ => {
            return Err(Error::Bracket {
                lo: a,
                hi: b,
                outcome: la,
            })
        }
    };

    for it in 0..settings.max_iterations {
        let mid = up + (down - up) / 2.0;
        let width = (down - up).abs();
        if width <= shoot_tol * mid.abs().max(1.0) || mid == up || mid == down {
            return Ok(ShootingResult {
                f0: mid,
                bracket: (up, down),
                n_iterations: it,
                classification_history: history,
            });
        }
        let outcome = label(mid, omega, settings)?;
        history.push((mid, outcome));
        match outcome {
            Outcome::DivergedUp => up = mid,
            Outcome::DivergedDown => down = mid,
            Outcome::Decayed => {
                return Ok(ShootingResult {
                    f0: mid,
                    bracket: (mid, mid),
                    n_iterations: it + 1,
                    classification_history: history,
                })
            }
            Outcome::Indeterminate => {
                return Err(Error::Convergence {
                    iterations: it + 1,
                    width,
                })
            }
        }
    }
    Err(Error::Convergence {
        iterations: settings.max_iterations,
        width: (down - up).abs(),
    })
}
