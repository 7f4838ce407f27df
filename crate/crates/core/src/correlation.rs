//! Spin algebra of the soliton pair and the exact EPR correlation.
//!
//! The ladder relations of `J` on the two basis solitons make `2 J·a` act on
//! the span of {φ↑, φ↓} as the Pauli matrix `σ·a`. Because both particles
//! share one radial profile, the two-particle correlation factorizes into
//! this 4-dimensional spin algebra times the squared radial norm over ħ².

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Basis soliton with spin projection +1/2 or −1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinLabel {
    Up,
    Down,
}

/// How far from unit length an analyzer may be before it is rejected.
pub const UNIT_TOL: f64 = 1e-6;

/// A direction in space, normalized on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector([f64; 3]);

impl UnitVector {
    /// Accepts vectors within [`UNIT_TOL`] of unit length and rescales them
    /// to unit length; anything else is a domain error.
    pub fn new(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(domain(format!(
                "analyzer {v:?} has length {n}, not within {UNIT_TOL:e} of 1"
            )));
        }
        Ok(Self([v[0] / n, v[1] / n, v[2] / n]))
    }

    /// `(sin θ, 0, cos θ)`: direction in the x–z plane at angle θ from z.
    pub fn in_xz_plane(theta: f64) -> Self {
        Self([theta.sin(), 0.0, theta.cos()])
    }

    pub fn x() -> Self {
        Self([1.0, 0.0, 0.0])
    }

    pub fn y() -> Self {
        Self([0.0, 1.0, 0.0])
    }

    pub fn z() -> Self {
        Self([0.0, 0.0, 1.0])
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, o: &UnitVector) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }
}

impl TryFrom<[f64; 3]> for UnitVector {
    type Error = crate::Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Self::new(v)
    }
}

impl From<UnitVector> for [f64; 3] {
    fn from(u: UnitVector) -> Self {
        u.0
    }
}

/// Amplitudes over the basis {φ↑, φ↓}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinVector {
    pub up: C,
    pub down: C,
}

impl SpinVector {
    pub fn basis(s: SpinLabel) -> Self {
        match s {
            SpinLabel::Up => Self {
                up: C::new(1.0, 0.0),
                down: C::new(0.0, 0.0),
            },
            SpinLabel::Down => Self {
                up: C::new(0.0, 0.0),
                down: C::new(1.0, 0.0),
            },
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }
}

/// Matrix of `2 J·v` on {φ↑, φ↓}; linear in `v`, which need not be unit.
pub fn spin_operator(v: [f64; 3]) -> [[C; 2]; 2] {
    let [a1, a2, a3] = v;
    [
        [C::new(a3, 0.0), C::new(a1, -a2)],
        [C::new(a1, a2), C::new(-a3, 0.0)],
    ]
}

/// `2 J·a`: φ↑ ↦ a₃φ↑ + (a₁+ia₂)φ↓, φ↓ ↦ (a₁−ia₂)φ↑ − a₃φ↓.
pub fn apply_2j(a: &UnitVector, v: SpinVector) -> SpinVector {
    let m = spin_operator(a.0);
    SpinVector {
        up: m[0][0] * v.up + m[0][1] * v.down,
        down: m[1][0] * v.up + m[1][1] * v.down,
    }
}

/// Two-particle spin state over {↑↑, ↑↓, ↓↑, ↓↓} with the per-particle
/// radial norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntangledPair {
    pub amplitudes: [C; 4],
    pub radial_norm: f64,
    pub hbar: f64,
}

/// The zero-spin configuration `(φ↑φ↓ − φ↓φ↑)/√2`.
pub fn build_singlet(radial_norm: f64, hbar: f64) -> Result<EntangledPair> {
    if !(radial_norm > 0.0 && radial_norm.is_finite()) {
        return Err(domain(format!("radial norm {radial_norm} must be positive")));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(domain(format!("hbar = {hbar} must be positive")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(EntangledPair {
        amplitudes: [
            C::new(0.0, 0.0),
            C::new(s, 0.0),
            C::new(-s, 0.0),
            C::new(0.0, 0.0),
        ],
        radial_norm,
        hbar,
    })
}

impl EntangledPair {
    /// `∫∫ φ₁₂⁺φ₁₂`: spin norm times the squared radial norm.
    pub fn norm(&self) -> f64 {
        let spin: f64 = self.amplitudes.iter().map(|c| c.norm_sqr()).sum();
        spin * self.radial_norm * self.radial_norm
    }

    /// `⟨ψ| A ⊗ B |ψ⟩` for 2×2 operators on the two particles.
    pub fn expectation(&self, a: &[[C; 2]; 2], b: &[[C; 2]; 2]) -> C {
        let c = &self.amplitudes;
        let mut acc = C::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                let mut out = C::new(0.0, 0.0);
                for k in 0..2 {
                    for l in 0..2 {
                        out += a[i][k] * b[j][l] * c[2 * k + l];
                    }
                }
                acc += c[2 * i + j].conj() * out;
            }
        }
        acc
    }

    /// Squared radial norm over ħ², the factor multiplying the spin algebra.
    pub fn radial_factor(&self) -> f64 {
        (self.radial_norm / self.hbar).powi(2)
    }

    /// Correlation `P(a, b)`.
    pub fn correlation(&self, a: &UnitVector, b: &UnitVector) -> f64 {
        let e = self.expectation(&spin_operator(a.0), &spin_operator(b.0));
        e.re * self.radial_factor()
    }
}

/// Four analyzer settings and the CHSH value they give.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: UnitVector,
    pub a_prime: UnitVector,
    pub b: UnitVector,
    pub b_prime: UnitVector,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub a: UnitVector,
    pub b: UnitVector,
    pub p_exact: f64,
    pub chsh: Option<ChshSettings>,
}

pub fn epr_correlation(pair: &EntangledPair, a: [f64; 3], b: [f64; 3]) -> Result<CorrelationReport> {
    let (a, b) = (UnitVector::new(a)?, UnitVector::new(b)?);
    Ok(CorrelationReport {
        a,
        b,
        p_exact: pair.correlation(&a, &b),
        chsh: None,
    })
}

/// `S = |P(a,b) − P(a,b′)| + |P(a′,b) + P(a′,b′)|`.
pub fn chsh<P>(a: &UnitVector, a_prime: &UnitVector, b: &UnitVector, b_prime: &UnitVector, p: P) -> f64
where
    P: Fn(&UnitVector, &UnitVector) -> f64,
{
    (p(a, b) - p(a, b_prime)).abs() + (p(a_prime, b) + p(a_prime, b_prime)).abs()
}

/// Best coplanar settings found by [`chsh_optimize`]; angles in radians
/// from z in the x–z plane, ordered (a, a′, b, b′).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshOptimum {
    pub angles: [f64; 4],
    pub s_max: f64,
}

impl ChshOptimum {
    pub fn settings(&self) -> ChshSettings {
        let [a, ap, b, bp] = self.angles.map(UnitVector::in_xz_plane);
        ChshSettings {
            a,
            a_prime: ap,
            b,
            b_prime: bp,
            s: self.s_max,
        }
    }
}

/// Maximizes S over coplanar analyzers: exhaustive search on a 1° grid,
/// then pattern search from the best `restarts` grid points.
pub fn chsh_optimize<P>(p: P, restarts: usize) -> Result<ChshOptimum>
where
    P: Fn(&UnitVector, &UnitVector) -> f64,
{
    if restarts == 0 {
        return Err(domain("chsh_optimize needs at least one restart"));
    }
    const M: usize = 360;
    let step = std::f64::consts::TAU / M as f64;
    let dirs: Vec<UnitVector> = (0..M).map(|i| UnitVector::in_xz_plane(i as f64 * step)).collect();
    let table: Vec<f64> = (0..M * M)
        .map(|k| p(&dirs[k / M], &dirs[k % M]))
        .collect();
    let at = |a: usize, b: usize| table[a * M + b];

    // for fixed (b, b′) the two terms separate in a and a′
    let mut candidates: Vec<(f64, [usize; 4])> = Vec::with_capacity(M * M);
    for b in 0..M {
        for bp in 0..M {
            let (mut best1, mut ia) = (f64::NEG_INFINITY, 0);
            let (mut best2, mut iap) = (f64::NEG_INFINITY, 0);
            for a in 0..M {
                let t1 = (at(a, b) - at(a, bp)).abs();
                if t1 > best1 {
                    best1 = t1;
                    ia = a;
                }
                let t2 = (at(a, b) + at(a, bp)).abs();
                if t2 > best2 {
                    best2 = t2;
                    iap = a;
                }
            }
            candidates.push((best1 + best2, [ia, iap, b, bp]));
        }
    }
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let s_of = |t: &[f64; 4]| {
        let [a, ap, b, bp] = t.map(UnitVector::in_xz_plane);
        chsh(&a, &ap, &b, &bp, &p)
    };
    let mut best = ChshOptimum {
        angles: [0.0; 4],
        s_max: f64::NEG_INFINITY,
    };
    for (_, idx) in candidates.iter().take(restarts) {
        let mut t = idx.map(|i| i as f64 * step);
        let mut s = s_of(&t);
        let mut h = step;
        while h > 1e-12 {
            let mut moved = false;
            for c in 0..4 {
                for dir in [1.0, -1.0] {
                    let mut trial = t;
                    trial[c] += dir * h;
                    let st = s_of(&trial);
                    if st > s {
                        s = st;
                        t = trial;
                        moved = true;
                    }
                }
            }
            if !moved {
                h /= 2.0;
            }
        }
        if s > best.s_max {
            best = ChshOptimum { angles: t, s_max: s };
        }
    }
    Ok(best)
}

/// S for every deterministic ±1 assignment to (a, a′, b, b′).
pub fn deterministic_strategies() -> Vec<([i8; 4], f64)> {
    (0..16u8)
        .map(|bits| {
            let o: [i8; 4] = std::array::from_fn(|k| if bits >> k & 1 == 1 { 1 } else { -1 });
            let [a, ap, b, bp] = o.map(f64::from);
            let s = (a * b - a * bp).abs() + (ap * b + ap * bp).abs();
            (o, s)
        })
        .collect()
}

/// Largest S reachable by a deterministic local strategy.
pub fn deterministic_local_bound() -> f64 {
    deterministic_strategies()
        .into_iter()
        .map(|(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max)
}
