//! Radial integrals of a profile and the quantities built from them.
//!
//! With `ψ = (F χ, i G σ·r̂ χ)/sqrt(4π)` every volume integral reduces to a
//! one-dimensional integral in x:
//!
//! ```text
//!   Q  = ∫ x² (F² + G²)            Qs = ∫ x² (F² − G²)
//!   I4 = ∫ x² (F² − G²)²           J4 = ∫ x² (F⁴ − G⁴)
//!   T  = ∫ x² (F G' − G F' + 2FG/x)
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::{self, GridSpec};
use crate::params::PhysicalParams;
use crate::radial::{RadialProfile, RadialSystem, SolitonSolution, TailFit};

/// Largest relative change of an integral under mesh halving.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// The five radial integrals, or any per-integral companion quantity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Integrals {
    pub q: f64,
    pub qs: f64,
    pub i4: f64,
    pub j4: f64,
    pub t: f64,
}

impl Integrals {
    fn add(self, o: Integrals) -> Integrals {
        Integrals {
            q: self.q + o.q,
            qs: self.qs + o.qs,
            i4: self.i4 + o.i4,
            j4: self.j4 + o.j4,
            t: self.t + o.t,
        }
    }

    fn scale(self, s: f64) -> Integrals {
        Integrals {
            q: s * self.q,
            qs: s * self.qs,
            i4: s * self.i4,
            j4: s * self.j4,
            t: s * self.t,
        }
    }

    pub fn as_array(&self) -> [(&'static str, f64); 5] {
        [
            ("Q", self.q),
            ("Qs", self.qs),
            ("I4", self.i4),
            ("J4", self.j4),
            ("T", self.t),
        ]
    }

    /// Integrand densities at one point.
    fn density(x: f64, f: f64, g: f64, df: f64, dg: f64) -> Integrals {
        let (f2, g2) = (f * f, g * g);
        let s = f2 - g2;
        let x2 = x * x;
        Integrals {
            q: x2 * (f2 + g2),
            qs: x2 * s,
            i4: x2 * s * s,
            j4: x2 * (f2 * f2 - g2 * g2),
            t: x2 * (f * dg - g * df) + 2.0 * x * f * g,
        }
    }
}

/// Integrals of a solution with their tail parts and quadrature errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    pub omega: f64,
    pub system: RadialSystem,
    /// Totals over `[0, ∞)`.
    pub integrals: Integrals,
    /// Closed-form contributions beyond the last mesh point, included above.
    pub tail_corrections: Integrals,
    /// |full mesh − every second node| for each integral.
    pub quadrature_error: Integrals,
}

impl ObservableSet {
    pub fn q(&self) -> f64 {
        self.integrals.q
    }
}

// 3-point Gauss–Legendre on [0, 1]
const GL_T: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];
const GL_W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Composite Gauss–Legendre over the Hermite interpolant of the mesh,
/// plus the series segment `[0, x_min]`; no tail, no error check.
pub fn quadrature(p: &RadialProfile) -> Integrals {
    let mut acc = Integrals::default();
    if p.len() < 2 {
        return acc;
    }
    let x0 = p.x[0];
    if x0 > 0.0 {
        // F = F0 + (f[0] − F0)(x/x0)², G = g[0] x/x0
        let a = (p.f[0] - p.f0) / (x0 * x0);
        let c = p.g[0] / x0;
        for (t, w) in GL_T.iter().zip(GL_W) {
            let x = t * x0;
            let d = Integrals::density(x, p.f0 + a * x * x, c * x, 2.0 * a * x, c);
            acc = acc.add(d.scale(w * x0));
        }
    }
    for i in 0..p.len() - 1 {
        let h = p.x[i + 1] - p.x[i];
        let mut seg = Integrals::default();
        for (t, w) in GL_T.iter().zip(GL_W) {
            let x = p.x[i] + t * h;
            let (f, df) =
                crate::radial::hermite(p.f[i], p.df[i], p.f[i + 1], p.df[i + 1], h, *t);
            let (g, dg) =
                crate::radial::hermite(p.g[i], p.dg[i], p.g[i + 1], p.dg[i + 1], h, *t);
            seg = seg.add(Integrals::density(x, f, g, df, dg).scale(w));
        }
        acc = acc.add(seg.scale(h));
    }
    acc
}

/// Generalized exponential integral `E_n(z) = ∫₁^∞ e^{−zt} t^{−n} dt`, z > 0.
pub fn expint(n: u32, z: f64) -> f64 {
    assert!(z > 0.0, "expint requires z > 0");
    let nm1 = n as i64 - 1;
    if n == 0 {
        return (-z).exp() / z;
    }
    if z > 1.0 {
        // modified Lentz continued fraction
        let mut b = z + n as f64;
        let mut c = 1.0 / f64::MIN_POSITIVE;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=500 {
            let a = -(i as f64) * (nm1 as f64 + i as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-z).exp()
    } else {
        // power series
        let euler = 0.577_215_664_901_532_9;
        let mut ans = if nm1 != 0 {
            1.0 / nm1 as f64
        } else {
            -z.ln() - euler
        };
        let mut fact = 1.0;
        for i in 1..=500i64 {
            fact *= -z / i as f64;
            let del = if i != nm1 {
                -fact / (i - nm1) as f64
            } else {
                let psi = -euler + (1..=nm1).map(|k| 1.0 / k as f64).sum::<f64>();
                fact * (-z.ln() + psi)
            };
            ans += del;
            if del.abs() < ans.abs() * 1e-17 {
                break;
            }
        }
        ans
    }
}

/// `∫_X^∞ x^{−k} e^{−a x} dx = X^{1−k} E_k(a X)`.
fn power_exp_tail(k: u32, a: f64, x: f64) -> f64 {
    x.powi(1 - k as i32) * expint(k, a * x)
}

/// Exact integrals of the tail form `F = A e^{−νx}/x`, `G = −F'/B` from `x`
/// to infinity. In that form the kinetic density reduces to
/// `x²[(Ω − 1)F² + B G²]`.
fn tail_integrals(tail: &TailFit, omega: f64, x: f64) -> Integrals {
    let (a, nu, b) = (tail.amplitude, tail.nu_fit, tail.b);
    if a == 0.0 || !(nu > 0.0) {
        return Integrals::default();
    }
    // x²F² = A² e^{−2νx};  x²G² = (A/B)² (ν + 1/x)² e^{−2νx}
    let e2 = |k: u32| power_exp_tail(k, 2.0 * nu, x);
    let ff = a * a * e2(0);
    let gg = (a / b).powi(2) * (nu * nu * e2(0) + 2.0 * nu * e2(1) + e2(2));
    // quartic terms carry e^{−4νx}/x²
    let e4 = |k: u32| power_exp_tail(k, 4.0 * nu, x);
    let a4 = a.powi(4);
    let f4 = a4 * e4(2);
    // (ν + 1/x)^m / x² expanded in powers of 1/x
    let poly = |m: u32| -> f64 {
        (0..=m)
            .map(|j| binom(m, j) * nu.powi((m - j) as i32) * e4(j + 2))
            .sum::<f64>()
    };
    let f2g2 = a4 / (b * b) * poly(2);
    let g4 = a4 / b.powi(4) * poly(4);
    Integrals {
        q: ff + gg,
        qs: ff - gg,
        i4: f4 - 2.0 * f2g2 + g4,
        j4: f4 - g4,
        t: (omega - 1.0) * ff + b * gg,
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * (n + 1 - i) as f64 / i as f64)
}

/// Integrals of a profile on `[0, ∞)` with the error estimate from one
/// mesh-halving step.
pub fn profile_integrals(p: &RadialProfile) -> Result<ObservableSet> {
    let full = quadrature(p);
    let half = quadrature(&p.coarsened(2));
    let tail = if p.is_empty() {
        Integrals::default()
    } else {
        tail_integrals(&p.tail, p.omega, p.x_max())
    };
    let err = Integrals {
        q: (full.q - half.q).abs(),
        qs: (full.qs - half.qs).abs(),
        i4: (full.i4 - half.i4).abs(),
        j4: (full.j4 - half.j4).abs(),
        t: (full.t - half.t).abs(),
    };
    let total = full.add(tail);
    // changes are measured against the norm, the natural scale of all five
    let scale = total.q.abs();
    for ((name, e), _) in err.as_array().into_iter().zip(total.as_array()) {
        let rel = if scale > 0.0 { e / scale } else { e };
        if !(rel <= QUADRATURE_TOL) {
            return Err(Error::Quadrature {
                integral: name,
                rel_change: rel,
            });
        }
    }
    Ok(ObservableSet {
        omega: p.omega,
        system: p.system,
        integrals: total,
        tail_corrections: tail,
        quadrature_error: err,
    })
}

/// Integrals of a converged solution.
pub fn compute_integrals(solution: &SolitonSolution) -> Result<ObservableSet> {
    profile_integrals(&solution.profile)
}

/// Residuals of the exact and the quoted integral identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// Kinetic identity obtained from the radial equations, relative to Q.
    pub d1_residual: f64,
    /// Scalar identity obtained from the radial equations, relative to Q.
    pub d2_residual: f64,
    /// |−(2/3)T + ΩQ − Qs + I4/2| / Q.
    pub v13: f64,
    /// |−T + ΩQ − Qs + I4| / Q.
    pub v14: f64,
    /// |T/3 − I4/2| / Q.
    pub v15: f64,
    /// |Qs + I4/2 − ΩQ| / Q.
    pub v16: f64,
    /// E/(ħω) = (T + Qs − I4/2)/(ΩQ).
    pub energy_ratio: f64,
}

pub fn identity_report(obs: &ObservableSet, omega: f64) -> IdentityReport {
    let Integrals { q, qs, i4, j4, t } = obs.integrals;
    let (d1, d2) = obs.system.direct_identities(omega, q, qs, i4, j4, t);
    let rel = |v: f64| if q > 0.0 { v.abs() / q } else { v.abs() };
    IdentityReport {
        d1_residual: rel(d1),
        d2_residual: rel(d2),
        v13: rel(-2.0 / 3.0 * t + omega * q - qs + i4 / 2.0),
        v14: rel(-t + omega * q - qs + i4),
        v15: rel(t / 3.0 - i4 / 2.0),
        v16: rel(qs + i4 / 2.0 - omega * q),
        energy_ratio: (t + qs - i4 / 2.0) / (omega * q),
    }
}

/// Energy of the soliton in the units of `params`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub hbar_omega: f64,
    pub ratio: f64,
    /// The three terms of `E` in the same units: kinetic, scalar, quartic.
    pub kinetic: f64,
    pub scalar: f64,
    pub quartic: f64,
}

/// `E = (cħ/(ℓ₀Q)) [T + Qs − I4/2]`.
pub fn energy(obs: &ObservableSet, params: &PhysicalParams) -> EnergyReport {
    let Integrals { q, qs, i4, t, .. } = obs.integrals;
    let unit = params.c * params.hbar / (params.ell0 * q);
    let (kinetic, scalar, quartic) = (unit * t, unit * qs, -unit * i4 / 2.0);
    let e = kinetic + scalar + quartic;
    let hbar_omega = params.hbar_omega();
    EnergyReport {
        energy: e,
        hbar_omega,
        ratio: e / hbar_omega,
        kinetic,
        scalar,
        quartic,
    }
}

/// Norm of the dimensionful field, `4π ℓ₀² Q / λ`.
pub fn dimensionful_norm(q: f64, params: &PhysicalParams) -> Result<f64> {
    let lambda = params
        .lambda
        .ok_or_else(|| domain("the dimensionful norm needs a calibrated lambda"))?;
    Ok(4.0 * PI * params.ell0 * params.ell0 * q / lambda)
}

/// Norm of the dimensionless profile that λ was calibrated to.
pub fn target_norm(params: &PhysicalParams) -> Result<f64> {
    let lambda = params
        .lambda
        .ok_or_else(|| domain("no calibrated lambda"))?;
    Ok(lambda * params.hbar / (4.0 * PI * params.ell0 * params.ell0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinReport {
    /// (ħ/2) Q / Q_target.
    pub sz_algebraic: f64,
    /// ħ (Q/Q_target) ⟨J₃⟩ from the 3-D grid, per unit grid norm.
    pub sz_grid: f64,
    pub grid: GridSpec,
    /// |sz_grid − sz_algebraic| / |sz_algebraic|.
    pub rel_deviation: f64,
}

/// Relative deviation above which the grid spin is refined once.
pub const SPIN_GRID_TOL: f64 = 0.02;

/// z-component of the spin, algebraically and on a 3-D grid. The grid is
/// refined once (spacing halved) if the first estimate is off by more than
/// 2%.
pub fn spin_z(
    solution: &SolitonSolution,
    obs: &ObservableSet,
    params: &PhysicalParams,
    spec: GridSpec,
) -> Result<SpinReport> {
    let q_target = target_norm(params)?;
    let hbar = params.hbar;
    let ratio = obs.q() / q_target;
    let sz_algebraic = 0.5 * hbar * ratio;
    let eval = |spec: GridSpec| -> SpinReport {
        let j3 = grid::sz_density_integral(&solution.profile, spec);
        let sz_grid = hbar * ratio * j3 / obs.q();
        SpinReport {
            sz_algebraic,
            sz_grid,
            grid: spec,
            rel_deviation: (sz_grid - sz_algebraic).abs() / sz_algebraic.abs(),
        }
    };
    let first = eval(spec);
    if first.rel_deviation <= SPIN_GRID_TOL {
        return Ok(first);
    }
    let second = eval(spec.refined());
    if second.rel_deviation <= SPIN_GRID_TOL {
        Ok(second)
    } else {
        Err(Error::Grid {
            check: "Sz".into(),
            residual: second.rel_deviation,
            tol: SPIN_GRID_TOL,
        })
    }
}
