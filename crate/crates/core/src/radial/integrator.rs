//! Dormand–Prince 5(4) explicit Runge–Kutta with embedded error control.
//!
//! The driver integrates in either direction and hands every accepted node
//! (including the start) to an observer, which may stop the integration.

use std::ops::ControlFlow;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// difference between the 5th- and 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|; also fixes the density of the recorded mesh.
    pub h_max: f64,
    /// Steps shorter than `h_min_rel * max(1, |x|)` abort the integration.
    pub h_min_rel: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            ..Self::default()
        }
    }
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-30,
            h_max: 0.02,
            h_min_rel: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

/// How an integration run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Halt {
    /// Reached `x_end`.
    End,
    /// The observer asked to stop at this node.
    Stopped,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        *o += h * acc;
    }
    out
}

fn error_norm<const N: usize>(
    err: &[f64; N],
    y0: &[f64; N],
    y1: &[f64; N],
    ctl: &StepControl,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let sc = ctl.atol + ctl.rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        sum += r * r;
    }
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F>(
    rhs: &mut F,
    x0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    ctl: &StepControl,
) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    // Hairer–Wanner starting step heuristic.
    let sc: Vec<f64> = y0.iter().map(|v| ctl.atol + ctl.rtol * v.abs()).collect();
    let rms = |v: &[f64; N]| {
        (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt()
    };
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(ctl.h_max);
    let y1 = axpy(y0, dir * h0, &[(1.0, f0)]);
    let f1 = rhs(x0 + dir * h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = f1[i] - f0[i];
    }
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let floor = 100.0 * ctl.h_min_rel * x0.abs().max(1.0);
    (100.0 * h0).min(h1).min(ctl.h_max).max(floor)
}

/// One Dormand–Prince step of signed length `s`; returns the 5th-order
/// update and the stages k3..k6.
fn stages<const N: usize, F>(
    rhs: &mut F,
    x: f64,
    y: &[f64; N],
    k1: &[f64; N],
    s: f64,
) -> ([f64; N], [[f64; N]; 4])
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = rhs(x + C2 * s, &axpy(y, s, &[(A21, k1)]));
    let k3 = rhs(x + C3 * s, &axpy(y, s, &[(A31, k1), (A32, &k2)]));
    let k4 = rhs(x + C4 * s, &axpy(y, s, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = rhs(
        x + C5 * s,
        &axpy(y, s, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = rhs(
        x + s,
        &axpy(
            y,
            s,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    );
    let y_new = axpy(y, s, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    (y_new, [k3, k4, k5, k6])
}

/// Integrates through the given nodes with one Dormand–Prince step per
/// interval and no error control. The map from `y0` to the result is then
/// smooth, which the adaptive driver does not guarantee.
pub fn dopri5_on_mesh<const N: usize, F, O>(
    mut rhs: F,
    mesh: &[f64],
    y0: [f64; N],
    mut observer: O,
) -> Result<()>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N], &[f64; N]),
{
    let Some(&x0) = mesh.first() else {
        return Ok(());
    };
    let mut y = y0;
    let mut k1 = rhs(x0, &y);
    observer(x0, &y, &k1);
    for w in mesh.windows(2) {
        let (y_new, _) = stages(&mut rhs, w[0], &y, &k1, w[1] - w[0]);
        let k = rhs(w[1], &y_new);
        if y_new.iter().chain(&k).any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                x: w[1],
                reason: "non-finite state".into(),
            });
        }
        y = y_new;
        k1 = k;
        observer(w[1], &y, &k1);
    }
    Ok(())
}

/// Integrates `y' = rhs(x, y)` from `x0` towards `x_end`.
///
/// `observer(x, y, y')` is called at the start point and at every accepted
/// node; returning `ControlFlow::Break(())` halts the run at that node.
pub fn dopri5<const N: usize, F, O>(
    mut rhs: F,
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    ctl: &StepControl,
    mut observer: O,
) -> Result<Halt>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    O: FnMut(f64, &[f64; N], &[f64; N]) -> ControlFlow<()>,
{
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut x = x0;
    let mut y = y0;
    let mut k1 = rhs(x, &y);
    if observer(x, &y, &k1).is_break() {
        return Ok(Halt::Stopped);
    }
    if x == x_end {
        return Ok(Halt::End);
    }
    let mut h = initial_step(&mut rhs, x, &y, &k1, dir, ctl);
    let mut steps = 0usize;

    loop {
        let h_min = ctl.h_min_rel * x.abs().max(1.0);
        let remaining = (x_end - x).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < h_min && !last {
            return Err(Error::Integration {
                x,
                reason: format!("step size {h:e} underflow"),
            });
        }
        steps += 1;
        if steps > ctl.max_steps {
            return Err(Error::Integration {
                x,
                reason: format!("exceeded {} steps", ctl.max_steps),
            });
        }

        let s = dir * h;
        let (y_new, ks) = stages(&mut rhs, x, &y, &k1, s);
        let x_new = if last { x_end } else { x + s };
        let k7 = rhs(x_new, &y_new);

        let mut err = [0.0; N];
        for i in 0..N {
            err[i] = s
                * (E1 * k1[i]
                    + E3 * ks[0][i]
                    + E4 * ks[1][i]
                    + E5 * ks[2][i]
                    + E6 * ks[3][i]
                    + E7 * k7[i]);
        }
        let mut en = error_norm(&err, &y, &y_new, ctl);
        if !en.is_finite() || y_new.iter().chain(&k7).any(|v| !v.is_finite()) {
            en = f64::INFINITY;
        }

        if en <= 1.0 {
            x = x_new;
            y = y_new;
            k1 = k7;
            if observer(x, &y, &k1).is_break() {
                return Ok(Halt::Stopped);
            }
            if last {
                return Ok(Halt::End);
            }
            let fac = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * fac).min(ctl.h_max);
        } else {
            let fac = if en.is_finite() {
                (0.9 * en.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h *= fac;
            if h < h_min {
                return Err(Error::Integration {
                    x,
                    reason: format!("step size {h:e} underflow"),
                });
            }
        }
    }
}
