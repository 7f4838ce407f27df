use serde::{Deserialize, Serialize};

use super::RadialSystem;

/// Exponential tail `F = A e^{−νx}/x`, `G = −F'/B` used beyond the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Amplitude A of the far-field form, fixed at the last grid point.
    pub amplitude: f64,
    /// Decay exponent from a least-squares fit of ln(x F) against x.
    pub nu_fit: f64,
    /// B = 1 + Ω.
    pub b: f64,
    /// Window `[x_lo, x_hi]` of the fit (last decade of outward decay).
    pub fit_window: (f64, f64),
    /// Where the outward and inward integrations were joined.
    pub match_x: f64,
    /// −G(1 + Ω)/F' at the match point; tends to 1 in the far field.
    pub tail_ratio: f64,
}

impl TailFit {
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let e = (-self.nu_fit * x).exp();
        let f = self.amplitude * e / x;
        let g = self.amplitude * (self.nu_fit / x + 1.0 / (x * x)) * e / self.b;
        (f, g)
    }
}

/// Converged radial amplitudes on a strictly increasing mesh, with the
/// derivatives taken from the ODE right-hand side at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub system: RadialSystem,
    pub omega: f64,
    /// F(0), the shooting parameter; used with the series below `x[0]`.
    pub f0: f64,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub df: Vec<f64>,
    pub dg: Vec<f64>,
    pub tail: TailFit,
}

/// Cubic Hermite interpolant on `[0, h]` at `t·h`; returns (value, derivative).
#[inline]
pub(crate) fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, t: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let d = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1;
    (v, d)
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Interval index `i` with `x[i] <= x < x[i+1]`, clamped to the mesh.
    fn interval(&self, x: f64) -> usize {
        let i = self.x.partition_point(|&v| v <= x);
        i.saturating_sub(1).min(self.x.len() - 2)
    }

    /// Value and derivative of (F, G) on the mesh by cubic Hermite
    /// interpolation: `(F, G, F', G')`.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64, f64, f64) {
        let i = self.interval(x);
        let h = self.x[i + 1] - self.x[i];
        let t = (x - self.x[i]) / h;
        let (f, df) = hermite(self.f[i], self.df[i], self.f[i + 1], self.df[i + 1], h, t);
        let (g, dg) = hermite(self.g[i], self.dg[i], self.g[i + 1], self.dg[i + 1], h, t);
        (f, g, df, dg)
    }

    /// (F, G) anywhere on `[0, ∞)`: regular series below the mesh, Hermite
    /// interpolation on it and the exponential tail beyond it.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        if x < self.x_min() {
            // second-order series, scaled to meet the first node exactly
            let s = x / self.x[0];
            (self.f0 + (self.f[0] - self.f0) * s * s, self.g[0] * s)
        } else if x > self.x_max() {
            self.tail.eval(x)
        } else {
            let (f, g, _, _) = self.eval_with_derivative(x);
            (f, g)
        }
    }

    /// Pointwise ODE residual at every mesh midpoint, relative to the local
    /// amplitude |F| + |G|.
    pub fn midpoint_residuals(&self) -> Vec<f64> {
        self.x
            .windows(2)
            .map(|w| {
                let xm = 0.5 * (w[0] + w[1]);
                let (f, g, df, dg) = self.eval_with_derivative(xm);
                let (rf, rg) = self.system.rhs(xm, f, g, self.omega);
                let scale = f.abs() + g.abs();
                (df - rf).abs().max((dg - rg).abs()) / scale
            })
            .collect()
    }

    pub fn max_midpoint_residual(&self) -> f64 {
        self.midpoint_residuals().into_iter().fold(0.0, f64::max)
    }

    /// A copy keeping every `stride`-th node (and always the last one).
    pub fn coarsened(&self, stride: usize) -> RadialProfile {
        let n = self.x.len();
        let mut idx: Vec<usize> = (0..n).step_by(stride.max(1)).collect();
        if *idx.last().unwrap() != n - 1 {
            idx.push(n - 1);
        }
        let pick = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        RadialProfile {
            x: pick(&self.x),
            f: pick(&self.f),
            g: pick(&self.g),
            df: pick(&self.df),
            dg: pick(&self.dg),
            ..self.clone()
        }
    }
}
