use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::integrator::{dopri5, dopri5_on_mesh, StepControl};
use super::profile::hermite;
use super::{
    coarse_scan, shoot, trial, Guards, IntegrationSettings, Outcome, RadialProfile, RadialSystem,
    ShootSettings, ShootingResult, TailFit, Trajectory, DEFAULT_X0,
};
use crate::error::{Error, Result};
use crate::params::DimensionlessParams;

/// Knobs of [`solve_ground`]. Defaults follow the documented solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub system: RadialSystem,
    pub x0: f64,
    /// Outer end of the mesh; `None` means `max(40, 25/ν)`.
    pub x_max: Option<f64>,
    /// Relative tolerance while scanning and coarse bisection.
    pub shoot_rtol: f64,
    /// Relative tolerance of the final bisection and the stored profile.
    pub final_rtol: f64,
    /// Largest step of the stored profile mesh.
    pub h_max: f64,
    /// Bisection stops at width `shoot_tol · max(1, F0)`.
    pub shoot_tol: f64,
    pub scan_step: f64,
    pub scan_max: f64,
    pub max_iterations: usize,
    pub guards: Guards,
    /// Outward and inward integrations are joined where F has decayed to
    /// `match_level · F0`.
    pub match_level: f64,
    /// The decay fit ends where the outward trajectory reaches `fit_level · F0`.
    pub fit_level: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            system: RadialSystem::Dirac,
            x0: DEFAULT_X0,
            x_max: None,
            shoot_rtol: 1e-8,
            final_rtol: 1e-10,
            h_max: 0.02,
            shoot_tol: 1e-14,
            scan_step: 0.1,
            scan_max: 5.0,
            max_iterations: 200,
            guards: Guards::default(),
            match_level: 1e-2,
            fit_level: 1e-4,
        }
    }
}

/// Pass/fail-free numbers describing how good a solution is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest relative ODE residual at the mesh midpoints.
    pub max_midpoint_residual: f64,
    /// |nu_fit − sqrt(1 − Ω²)| / sqrt(1 − Ω²).
    pub nu_rel_error: f64,
    /// |tail_ratio − 1|.
    pub tail_ratio_error: f64,
    /// Relative jump of (F, G) where the two integrations meet.
    pub match_mismatch: f64,
    /// Change of F0 from the bisection midpoint to the matched profile.
    pub f0_match_shift: f64,
    /// F > 0 on the whole mesh.
    pub nodeless: bool,
    /// G keeps one sign on the whole mesh.
    pub g_single_signed: bool,
}

/// Settings and version that produced a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub options: SolveOptions,
    pub x_max: f64,
    pub code_version: String,
}

/// A converged, localized ground-state profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonSolution {
    pub omega: f64,
    pub profile: RadialProfile,
    pub shooting: ShootingResult,
    pub diagnostics: Diagnostics,
    pub provenance: Provenance,
}

impl SolitonSolution {
    pub fn f0(&self) -> f64 {
        self.shooting.f0
    }
}

fn shoot_settings(opts: &SolveOptions, rtol: f64, h_max: f64, x_max: f64) -> ShootSettings {
    ShootSettings {
        integration: IntegrationSettings {
            system: opts.system,
            step: StepControl {
                rtol,
                h_max,
                ..StepControl::default()
            },
            guards: opts.guards,
        },
        x0: opts.x0,
        x_max,
        max_extensions: 4,
        max_iterations: opts.max_iterations,
        scan_step: opts.scan_step,
        scan_max: opts.scan_max,
    }
}

/// Re-establishes an (up, down) bracket around `center` under new settings,
/// widening geometrically from `half_width`.
fn rebracket(
    omega: f64,
    center: f64,
    half_width: f64,
    fallback: (f64, f64),
    settings: &ShootSettings,
) -> Result<(f64, f64)> {
    let mut w = half_width;
    for _ in 0..12 {
        let (lo, hi) = (center - w, center + w);
        if lo > 0.0 {
            let lo_o = trial(lo, omega, settings)?.0;
            let hi_o = trial(hi, omega, settings)?.0;
            if lo_o == Outcome::DivergedUp && hi_o == Outcome::DivergedDown {
                return Ok((lo, hi));
            }
        }
        w *= 10.0;
    }
    Ok(fallback)
}

/// Hermite interpolation of F on a trajectory, `None` outside its range.
fn traj_f_at(t: &Trajectory, x: f64) -> Option<f64> {
    let n = t.x.len();
    if n < 2 || x < t.x[0] || x > t.x[n - 1] {
        return None;
    }
    let i = t.x.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    let h = t.x[i + 1] - t.x[i];
    Some(hermite(t.f[i], t.df[i], t.f[i + 1], t.df[i + 1], h, (x - t.x[i]) / h).0)
}

/// First node of `mid` where F has decayed to `level · F0`, or the last
/// node before the bracket trajectories drift apart by more than
/// `spread · F`, whichever comes first.
fn match_index(
    mid: &Trajectory,
    up: &Trajectory,
    down: &Trajectory,
    level: f64,
    spread: f64,
) -> usize {
    let f0 = mid.f[0];
    let mut last = 0;
    for i in 0..mid.len() {
        let x = mid.x[i];
        let (Some(fu), Some(fd)) = (traj_f_at(up, x), traj_f_at(down, x)) else {
            break;
        };
        let f = mid.f[i];
        if !(f > 0.0 && mid.g[i] > 0.0) || (fu - fd).abs() > spread * f {
            break;
        }
        last = i;
        if f <= level * f0 {
            break;
        }
    }
    last
}

/// Least-squares slope of ln(x F) against x over the last decade of decay
/// ending at node `end`. Returns (slope, window).
fn fit_decay(traj: &Trajectory, end: usize) -> Option<(f64, (f64, f64))> {
    let f_end = traj.f[end];
    let mut start = end;
    while start > 0 && traj.f[start - 1] <= 10.0 * f_end {
        start -= 1;
    }
    if end - start < 4 {
        return None;
    }
    let pts: Vec<(f64, f64)> = (start..=end)
        .map(|i| (traj.x[i], (traj.x[i] * traj.f[i]).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some((sxy / sxx, (traj.x[start], traj.x[end])))
}

/// Integrates inward from `x_far` to `x_match`, starting on the linear
/// far-field solution scaled to amplitude `a` at `x_match`.
fn inward(
    system: RadialSystem,
    omega: f64,
    nu: f64,
    a: f64,
    x_match: f64,
    x_far: f64,
    step: &StepControl,
) -> Result<Trajectory> {
    let b = 1.0 + omega;
    let e = (-nu * (x_far - x_match)).exp();
    let f = a * (x_match / x_far) * e;
    let g = f * (nu + 1.0 / x_far) / b;
    let mut t = Trajectory::default();
    dopri5(
        |x, y: &[f64; 2]| {
            let (df, dg) = system.rhs(x, y[0], y[1], omega);
            [df, dg]
        },
        x_far,
        [f, g],
        x_match,
        step,
        |x, y, dy| {
            t.push(x, y, dy);
            ControlFlow::Continue(())
        },
    )?;
    Ok(t)
}

/// Outward integration from the series start at `f0` to exactly `x_end`,
/// without guards.
fn outward(
    system: RadialSystem,
    omega: f64,
    f0: f64,
    x0: f64,
    x_end: f64,
    step: &StepControl,
) -> Result<Trajectory> {
    let start = system.series_start(f0, omega, x0)?;
    let mut t = Trajectory::default();
    dopri5(
        |x, y: &[f64; 2]| {
            let (df, dg) = system.rhs(x, y[0], y[1], omega);
            [df, dg]
        },
        x0,
        [start.f, start.g],
        x_end,
        step,
        |x, y, dy| {
            t.push(x, y, dy);
            ControlFlow::Continue(())
        },
    )?;
    Ok(t)
}

struct Matched {
    f0: f64,
    out: Trajectory,
    back: Trajectory,
    mismatch: f64,
}

fn on_mesh(system: RadialSystem, omega: f64, mesh: &[f64], y0: [f64; 2]) -> Result<Trajectory> {
    let mut t = Trajectory::default();
    dopri5_on_mesh(
        |x, y: &[f64; 2]| {
            let (df, dg) = system.rhs(x, y[0], y[1], omega);
            [df, dg]
        },
        mesh,
        y0,
        |x, y, dy| t.push(x, y, dy),
    )?;
    Ok(t)
}

/// Newton iteration on (F0, tail amplitude) so that the outward and inward
/// integrations agree in both F and G at `x_m`. Meshes come from one
/// adaptive pass each and are then held fixed.
#[allow(clippy::too_many_arguments)]
fn match_two_sided(
    system: RadialSystem,
    omega: f64,
    nu: f64,
    f0_guess: f64,
    x0: f64,
    x_m: f64,
    x_far: f64,
    step: &StepControl,
) -> Result<Matched> {
    let b = 1.0 + omega;
    let end = |t: &Trajectory| (*t.f.last().unwrap(), *t.g.last().unwrap());
    let out0 = outward(system, omega, f0_guess, x0, x_m, step)?;
    let scale = end(&out0).0.abs();
    let mesh_out = out0.x;
    let back0 = inward(system, omega, nu, scale, x_m, x_far, step)?;
    let mesh_in = back0.x.clone();

    let run = |f0: f64, a: f64| -> Result<([f64; 2], Trajectory, Trajectory)> {
        let st = system.series_start(f0, omega, x0)?;
        let out = on_mesh(system, omega, &mesh_out, [st.f, st.g])?;
        let f = a * (x_m / x_far) * (-nu * (x_far - x_m)).exp();
        let back = on_mesh(system, omega, &mesh_in, [f, f * (nu + 1.0 / x_far) / b])?;
        let (fo, go) = end(&out);
        let (fb, gb) = end(&back);
        Ok(([fo - fb, go - gb], out, back))
    };
    let mut f0 = f0_guess;
    let mut a = scale * scale / end(&back0).0;

    let mut best: Option<Matched> = None;
    for _ in 0..12 {
        let (r, out, back) = run(f0, a)?;
        let mismatch = r[0].abs().max(r[1].abs()) / scale;
        let improved = best.as_ref().is_none_or(|m| mismatch < m.mismatch);
        if improved {
            best = Some(Matched {
                f0,
                out,
                back,
                mismatch,
            });
        }
        if mismatch < 1e-14 || !improved {
            break;
        }
        let (d0, da) = (1e-7 * f0, 1e-7 * a);
        let (r0, _, _) = run(f0 + d0, a)?;
        let (ra, _, _) = run(f0, a + da)?;
        let j = [
            [(r0[0] - r[0]) / d0, (ra[0] - r[0]) / da],
            [(r0[1] - r[1]) / d0, (ra[1] - r[1]) / da],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        f0 -= (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        a -= (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
    }
    Ok(best.expect("at least one Newton evaluation"))
}

fn assemble(
    omega: f64,
    opts: &SolveOptions,
    x_max: f64,
    shooting: ShootingResult,
    final_settings: &ShootSettings,
) -> Result<SolitonSolution> {
    let dp = DimensionlessParams::from_omega(omega)?;
    let (_, up) = trial(shooting.bracket.0, omega, final_settings)?;
    let (_, down) = trial(shooting.bracket.1, omega, final_settings)?;
    let (_, mid) = trial(shooting.f0, omega, final_settings)?;

    // decay fit on the bisected outward trajectory, independent of the tail form
    let k = match_index(&mid, &up, &down, opts.fit_level, 1e-2);
    let (slope, window) = fit_decay(&mid, k).ok_or(Error::Tail {
        nu_fit: f64::NAN,
        expected: dp.nu,
        rel_error: f64::INFINITY,
    })?;
    let nu_fit = -slope;
    let nu_rel_error = (nu_fit - dp.nu).abs() / dp.nu;
    if nu_rel_error > 0.05 {
        return Err(Error::Tail {
            nu_fit,
            expected: dp.nu,
            rel_error: nu_rel_error,
        });
    }
    let tail_ratio = -mid.g[k] * dp.b / mid.df[k];

    // joining where the bracket spread is still tiny keeps F0 well conditioned
    let m = match_index(&mid, &up, &down, opts.match_level, 1e-9);
    let x_m = mid.x[m];
    let step = final_settings.integration.step;
    let matched = match_two_sided(
        opts.system,
        omega,
        dp.nu,
        shooting.f0,
        opts.x0,
        x_m,
        x_max,
        &step,
    )?;
    let out = &matched.out;
    let back = &matched.back;

    let mut x = out.x.clone();
    let mut f = out.f.clone();
    let mut g = out.g.clone();
    let mut df = out.df.clone();
    let mut dg = out.dg.clone();
    // inward run is recorded from x_max down to x_m; skip its copy of x_m
    for i in (0..back.len() - 1).rev() {
        x.push(back.x[i]);
        f.push(back.f[i]);
        g.push(back.g[i]);
        df.push(back.df[i]);
        dg.push(back.dg[i]);
    }

    let n = x.len();
    let amplitude = x[n - 1] * f[n - 1] * (nu_fit * x[n - 1]).exp();
    let profile = RadialProfile {
        system: opts.system,
        omega,
        f0: matched.f0,
        x,
        f,
        g,
        df,
        dg,
        tail: TailFit {
            amplitude,
            nu_fit,
            b: dp.b,
            fit_window: window,
            match_x: x_m,
            tail_ratio,
        },
    };
    let g_sign = profile.g.iter().skip(1).all(|v| *v > 0.0)
        || profile.g.iter().skip(1).all(|v| *v < 0.0);
    let diagnostics = Diagnostics {
        max_midpoint_residual: profile.max_midpoint_residual(),
        nu_rel_error,
        tail_ratio_error: (tail_ratio - 1.0).abs(),
        match_mismatch: matched.mismatch,
        f0_match_shift: (matched.f0 - shooting.f0).abs(),
        nodeless: profile.f.iter().all(|v| *v > 0.0),
        g_single_signed: g_sign,
    };
    Ok(SolitonSolution {
        omega,
        profile,
        shooting,
        diagnostics,
        provenance: Provenance {
            options: *opts,
            x_max,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

fn solve_with_x_max(omega: f64, opts: &SolveOptions, x_max: f64) -> Result<SolitonSolution> {
    let coarse = shoot_settings(opts, opts.shoot_rtol, 0.25, x_max);
    let fine = shoot_settings(opts, opts.final_rtol, opts.h_max, x_max);

    let bracket = coarse_scan(omega, &coarse)?;
    let first = shoot(omega, bracket, opts.shoot_tol.max(1e-9), &coarse)?;
    let bracket = rebracket(
        omega,
        first.f0,
        first.width().max(1e-9),
        bracket,
        &fine,
    )?;
    let mut result = shoot(omega, bracket, opts.shoot_tol, &fine)?;
    let mut history = first.classification_history;
    history.append(&mut result.classification_history);
    result.classification_history = history;
    result.n_iterations += first.n_iterations;

    assemble(omega, opts, x_max, result, &fine)
}

/// Coarse scan, bisection, final tight integration, tail fit and inward
/// continuation to x_max, assembled into a [`SolitonSolution`].
pub fn solve_ground(omega: f64, opts: &SolveOptions) -> Result<SolitonSolution> {
    let dp = DimensionlessParams::from_omega(omega)?;
    let x_max = opts.x_max.unwrap_or((25.0 / dp.nu).max(40.0));
    match solve_with_x_max(omega, opts, x_max) {
        Err(Error::Tail { .. }) => solve_with_x_max(omega, opts, 2.0 * x_max),
        other => other,
    }
}
