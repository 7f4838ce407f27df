//! Cartesian sampling of the two spin basis spinors and the total angular
//! momentum `J = −i r×∇ + Σ/2` applied by central differences.
//!
//! ```text
//!   φ↑ = (F, 0, i z G/r, i (x + iy) G/r) / sqrt(4π)
//!   φ↓ = (0, F, i (x − iy) G/r, −i z G/r) / sqrt(4π)
//! ```
//!
//! Only F(r) and G(r)/r are stored per node; the spinors are rebuilt on the
//! fly. Boundary nodes are dropped from every sum, so the box must be large
//! enough for the field to have decayed there.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::SpinLabel;
use crate::error::{Error, Result};
use crate::radial::{RadialProfile, SolitonSolution};

/// A cube `[−half_width, half_width]³` with `n` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 64,
            half_width: 12.0,
        }
    }
}

impl GridSpec {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    /// Same cube with the spacing halved; the old nodes are kept.
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n - 1,
            half_width: self.half_width,
        }
    }

    fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }
}

type Spinor = [C; 4];

const I: C = C { re: 0.0, im: 1.0 };

struct Sampled {
    spec: GridSpec,
    f: Vec<f64>,
    gr: Vec<f64>,
}

impl Sampled {
    fn new(p: &RadialProfile, spec: GridSpec) -> Self {
        let n = spec.n;
        let mut f = vec![0.0; n * n * n];
        let mut gr = vec![0.0; n * n * n];
        f.par_chunks_mut(n * n)
            .zip(gr.par_chunks_mut(n * n))
            .enumerate()
            .for_each(|(k, (fs, gs))| {
                let z = spec.coord(k);
                for j in 0..n {
                    let y = spec.coord(j);
                    for i in 0..n {
                        let x = spec.coord(i);
                        let r = (x * x + y * y + z * z).sqrt();
                        let (fv, gv) = p.eval(r);
                        fs[j * n + i] = fv;
                        gs[j * n + i] = if r > 0.0 { gv / r } else { p.g[0] / p.x[0] };
                    }
                }
            });
        Self { spec, f, gr }
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.spec.n + j) * self.spec.n + i
    }

    fn spinor(&self, s: SpinLabel, i: usize, j: usize, k: usize) -> Spinor {
        let id = self.idx(i, j, k);
        let (f, gr) = (self.f[id], self.gr[id]);
        let (x, y, z) = (self.spec.coord(i), self.spec.coord(j), self.spec.coord(k));
        let norm = 1.0 / (4.0 * PI).sqrt();
        let h = I * gr * norm;
        let f = C::new(f * norm, 0.0);
        match s {
            SpinLabel::Up => [f, C::new(0.0, 0.0), h * z, h * C::new(x, y)],
            SpinLabel::Down => [C::new(0.0, 0.0), f, h * C::new(x, -y), -h * z],
        }
    }
}

/// `(J₃ψ, J₊ψ, J₋ψ)` at an interior node.
struct Applied {
    psi: Spinor,
    j3: Spinor,
    jp: Spinor,
    jm: Spinor,
}

fn apply_j(g: &Sampled, s: SpinLabel, i: usize, j: usize, k: usize) -> Applied {
    let h2 = 2.0 * g.spec.spacing();
    let psi = g.spinor(s, i, j, k);
    let diff = |a: Spinor, b: Spinor| -> Spinor {
        let mut d = [C::new(0.0, 0.0); 4];
        for c in 0..4 {
            d[c] = (a[c] - b[c]) / h2;
        }
        d
    };
    let dx = diff(g.spinor(s, i + 1, j, k), g.spinor(s, i - 1, j, k));
    let dy = diff(g.spinor(s, i, j + 1, k), g.spinor(s, i, j - 1, k));
    let dz = diff(g.spinor(s, i, j, k + 1), g.spinor(s, i, j, k - 1));
    let (x, y, z) = (g.spec.coord(i), g.spec.coord(j), g.spec.coord(k));
    let xp = C::new(x, y);
    let xm = C::new(x, -y);
    let mut j3 = [C::new(0.0, 0.0); 4];
    let mut jp = [C::new(0.0, 0.0); 4];
    let mut jm = [C::new(0.0, 0.0); 4];
    for c in 0..4 {
        // orbital parts
        j3[c] = -I * (x * dy[c] - y * dx[c]);
        jp[c] = z * (dx[c] + I * dy[c]) - xp * dz[c];
        jm[c] = -z * (dx[c] - I * dy[c]) + xm * dz[c];
    }
    // spin parts, Σ/2 acting on both two-component blocks
    for b in [0, 2] {
        j3[b] += 0.5 * psi[b];
        j3[b + 1] -= 0.5 * psi[b + 1];
        jp[b] += psi[b + 1];
        jm[b + 1] += psi[b];
    }
    Applied { psi, j3, jp, jm }
}

fn norm2(v: &Spinor) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

fn sub(a: &Spinor, b: &Spinor, s: f64) -> Spinor {
    [a[0] - s * b[0], a[1] - s * b[1], a[2] - s * b[2], a[3] - s * b[3]]
}

/// Sums over interior nodes, evaluated slice by slice in parallel and added
/// in slice order so the result does not depend on scheduling.
fn interior_sum<const M: usize>(
    g: &Sampled,
    f: impl Fn(usize, usize, usize) -> [f64; M] + Sync,
) -> [f64; M] {
    let n = g.spec.n;
    let slices: Vec<[f64; M]> = (1..n - 1)
        .into_par_iter()
        .map(|k| {
            let mut acc = [0.0; M];
            for j in 1..n - 1 {
                for i in 1..n - 1 {
                    let v = f(i, j, k);
                    for m in 0..M {
                        acc[m] += v[m];
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; M];
    for s in slices {
        for m in 0..M {
            total[m] += s[m];
        }
    }
    let w = g.spec.spacing().powi(3);
    total.map(|v| v * w)
}

/// `∫ φ↑⁺ J₃ φ↑ d³x` in dimensionless units; tends to Q/2.
pub fn sz_density_integral(p: &RadialProfile, spec: GridSpec) -> f64 {
    let g = Sampled::new(p, spec);
    let [v] = interior_sum(&g, |i, j, k| {
        let a = apply_j(&g, SpinLabel::Up, i, j, k);
        let dot: C = a.psi.iter().zip(&a.j3).map(|(p, q)| p.conj() * q).sum();
        [dot.re]
    });
    v
}

/// One ladder relation and its relative residual in grid L² norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderResidual {
    pub relation: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub grid: GridSpec,
    pub residuals: Vec<LadderResidual>,
}

impl LadderReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

/// Residuals of `J₊φ↑ = 0`, `J₋φ↑ = φ↓`, `J₃φ↑ = φ↑/2`, `J₋φ↓ = 0`,
/// `J₊φ↓ = φ↑`, `J₃φ↓ = −φ↓/2`, each relative to the norm of the spinor
/// acted on.
pub fn ladder_residuals(p: &RadialProfile, spec: GridSpec) -> LadderReport {
    let g = Sampled::new(p, spec);
    let sums = interior_sum(&g, |i, j, k| {
        let u = apply_j(&g, SpinLabel::Up, i, j, k);
        let d = apply_j(&g, SpinLabel::Down, i, j, k);
        [
            norm2(&u.jp),
            norm2(&sub(&u.jm, &d.psi, 1.0)),
            norm2(&sub(&u.j3, &u.psi, 0.5)),
            norm2(&d.jm),
            norm2(&sub(&d.jp, &u.psi, 1.0)),
            norm2(&sub(&d.j3, &d.psi, -0.5)),
            norm2(&u.psi),
            norm2(&d.psi),
        ]
    });
    let (nu, nd) = (sums[6].sqrt(), sums[7].sqrt());
    let names = [
        ("J+ phi_up = 0", nu),
        ("J- phi_up = phi_down", nu),
        ("J3 phi_up = phi_up/2", nu),
        ("J- phi_down = 0", nd),
        ("J+ phi_down = phi_up", nd),
        ("J3 phi_down = -phi_down/2", nd),
    ];
    LadderReport {
        grid: spec,
        residuals: names
            .iter()
            .zip(sums)
            .map(|((name, norm), s)| LadderResidual {
                relation: name.to_string(),
                residual: s.sqrt() / norm,
            })
            .collect(),
    }
}

/// [`ladder_residuals`] with a pass/fail gate.
pub fn ladder_check_grid(
    solution: &SolitonSolution,
    spec: GridSpec,
    tol: f64,
) -> Result<LadderReport> {
    let report = ladder_residuals(&solution.profile, spec);
    if let Some(bad) = report.residuals.iter().find(|r| !(r.residual <= tol)) {
        return Err(Error::Grid {
            check: bad.relation.clone(),
            residual: bad.residual,
            tol,
        });
    }
    Ok(report)
}
