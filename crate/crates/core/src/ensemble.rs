//! Random-phase ensemble of soliton pairs and the Monte-Carlo estimate of
//! the phase-averaged correlation.
//!
//! One realization superposes N copies of the singlet with independent
//! overall phases, `Ψ_N = N^{−1/2} Σ_j e^{iθ_j} φ₁₂`. Its expectation of
//! `2J·a ⊗ 2J·b` is `(1/N)|Σ e^{iθ_j}|² P(a, b)`, whose mean over phases is
//! `P(a, b)`; averaging over R realizations estimates that mean.

use num_complex::Complex64 as C;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{spin_operator, EntangledPair, UnitVector};
use crate::error::{domain, Result};

/// N phases uniform on [0, 2π) from the ChaCha20 stream selected by
/// `(seed, realization_index)`; phase j is the j-th draw of that stream.
pub fn draw_phases(seed: u64, realization_index: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(realization_index);
    let tau = std::f64::consts::TAU;
    (0..n)
        .map(|_| {
            // 53 random bits give u in [0, 1)
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            let theta = tau * u;
            if theta < tau {
                theta
            } else {
                0.0
            }
        })
        .collect()
}

/// `⟨Ψ_N| 2J·a ⊗ 2J·b |Ψ_N⟩` for one set of phases, summing the N phased
/// singlets explicitly.
pub fn realization_estimate(
    phases: &[f64],
    pair: &EntangledPair,
    a: &UnitVector,
    b: &UnitVector,
) -> Result<f64> {
    if phases.is_empty() {
        return Err(domain("a realization needs at least one phase"));
    }
    let scale = 1.0 / (phases.len() as f64).sqrt();
    let mut amps = [C::new(0.0, 0.0); 4];
    for &theta in phases {
        let w = C::from_polar(scale, theta);
        for (acc, c) in amps.iter_mut().zip(&pair.amplitudes) {
            *acc += w * c;
        }
    }
    let psi = EntangledPair {
        amplitudes: amps,
        ..*pair
    };
    let e = psi.expectation(&spin_operator(a.as_array()), &spin_operator(b.as_array()));
    Ok(e.re * pair.radial_factor())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Trials per realization.
    pub n: usize,
    /// Independent realizations.
    pub r: usize,
    pub seed: u64,
    pub a: UnitVector,
    pub b: UnitVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub mean: f64,
    /// Sample standard deviation over realizations divided by sqrt(R).
    pub stderr: f64,
    pub per_realization: Vec<f64>,
    pub seed: u64,
}

/// Mean and standard error over R realizations. Realizations run in
/// parallel; the values are summed in index order.
pub fn ensemble_estimate(spec: &EnsembleSpec, pair: &EntangledPair) -> Result<EnsembleEstimate> {
    if spec.n == 0 || spec.r == 0 {
        return Err(domain(format!(
            "ensemble needs N >= 1 and R >= 1, got N = {}, R = {}",
            spec.n, spec.r
        )));
    }
    let values: Vec<f64> = (0..spec.r as u64)
        .into_par_iter()
        .map(|k| {
            let phases = draw_phases(spec.seed, k, spec.n);
            realization_estimate(&phases, pair, &spec.a, &spec.b)
        })
        .collect::<Result<_>>()?;
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let stderr = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
        (var / r).sqrt()
    } else {
        0.0
    };
    Ok(EnsembleEstimate {
        mean,
        stderr,
        per_realization: values,
        seed: spec.seed,
    })
}

/// One-sample Kolmogorov–Smirnov test against the uniform law on [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_uniform(phases: &[f64]) -> KsTest {
    let mut u: Vec<f64> = phases.iter().map(|t| t / std::f64::consts::TAU).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max);
    // asymptotic Kolmogorov distribution with the small-sample correction
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        p += if k % 2 == 1 { 2.0 * term } else { -2.0 * term };
        if term < 1e-16 {
            break;
        }
    }
    KsTest {
        statistic: d,
        p_value: p.clamp(0.0, 1.0),
    }
}

/// Least-squares slope of ln(y) against ln(x).
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
