//! Independent reference integrator for the radial problem: fixed-step
//! classical RK4, its own sign classification and plain bisection.

#![allow(dead_code)]

pub const X0: f64 = 1e-4;

/// Dirac-sign radial system with the norm density appended.
fn deriv(x: f64, y: [f64; 3], omega: f64) -> [f64; 3] {
    let (f, g) = (y[0], y[1]);
    let s = f * f - g * g;
    [
        -(1.0 + omega) * g + s * g,
        -2.0 * g / x + (omega - 1.0) * f + s * f,
        x * x * (f * f + g * g),
    ]
}

fn rk4(x: f64, y: [f64; 3], h: f64, omega: f64) -> [f64; 3] {
    let add = |a: [f64; 3], k: [f64; 3], c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2]];
    let k1 = deriv(x, y, omega);
    let k2 = deriv(x + h / 2.0, add(y, k1, h / 2.0), omega);
    let k3 = deriv(x + h / 2.0, add(y, k2, h / 2.0), omega);
    let k4 = deriv(x + h, add(y, k3, h), omega);
    let mut out = y;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    /// F turned upward while positive.
    Up,
    /// F crossed zero or the amplitudes blew up.
    Down,
    Undecided,
}

pub struct Run {
    pub fate: Fate,
    /// Norm integral accumulated up to the stopping point.
    pub q: f64,
    pub x_end: f64,
}

/// Integrates from the series start with step `h` until the fate is known.
pub fn run(f0: f64, omega: f64, h: f64, x_max: f64) -> Run {
    let c1 = ((omega - 1.0) * f0 + f0.powi(3)) / 3.0;
    let f_start = f0 - (1.0 + omega - f0 * f0) * c1 * X0 * X0 / 2.0;
    // series part of the norm integral on [0, x0]
    let mut y = [f_start, c1 * X0, f0 * f0 * X0.powi(3) / 3.0];
    let mut x = X0;
    while x < x_max {
        y = rk4(x, y, h, omega);
        x += h;
        let (f, g) = (y[0], y[1]);
        let fate = if f < 0.0 || f.abs() > 1e3 * f0 || g.abs() > 1e3 * f0 {
            if f > 0.0 && g < 0.0 {
                Fate::Up
            } else {
                Fate::Down
            }
        } else if g < 0.0 {
            Fate::Up
        } else {
            Fate::Undecided
        };
        if fate != Fate::Undecided {
            return Run { fate, q: y[2], x_end: x };
        }
    }
    Run {
        fate: Fate::Undecided,
        q: y[2],
        x_end: x,
    }
}

/// First (Up, Down) pair on the grid `step, 2·step, …, max`.
pub fn scan(omega: f64, step: f64, max: f64, h: f64) -> Option<(f64, f64)> {
    let n = (max / step).round() as usize;
    let mut prev = Fate::Undecided;
    for k in 1..=n {
        let f0 = k as f64 * step;
        let fate = run(f0, omega, h, 80.0).fate;
        if prev == Fate::Up && fate == Fate::Down {
            return Some((f0 - step, f0));
        }
        prev = fate;
    }
    None
}

/// Bisected critical amplitude and the norm integral of the Up-side
/// trajectory at the final bracket.
pub fn critical(omega: f64, h: f64) -> (f64, f64) {
    let (mut up, mut down) = scan(omega, 0.1, 5.0, 1e-2).expect("bracket");
    for _ in 0..200 {
        let mid = 0.5 * (up + down);
        if mid == up || mid == down {
            break;
        }
        match run(mid, omega, h, 200.0).fate {
            Fate::Up => up = mid,
            _ => down = mid,
        }
    }
    (up, run(up, omega, h, 200.0).q)
}

/// Richardson-extrapolated (F0*, Q) from step sizes `h` and `h/2`.
pub fn critical_extrapolated(omega: f64, h: f64) -> (f64, f64) {
    let (a1, q1) = critical(omega, h);
    let (a2, q2) = critical(omega, h / 2.0);
    ((16.0 * a2 - a1) / 15.0, (16.0 * q2 - q1) / 15.0)
}
