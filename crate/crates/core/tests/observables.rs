mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use solitonlab_core::grid::GridSpec;
use solitonlab_core::observables::{
    compute_integrals, dimensionful_norm, energy, expint, identity_report, profile_integrals,
    quadrature, spin_z, target_norm, Integrals, ObservableSet,
};
use solitonlab_core::params::{calibrate_lambda, PhysicalParams};
use solitonlab_core::radial::{
    solve_ground, RadialProfile, RadialSystem, SolitonSolution, SolveOptions, TailFit,
};

/// Norm integrals from the RK4 reference (Richardson over h = 4e-3, 2e-3).
const GOLDEN_Q: [(f64, f64); 4] = [
    (0.2, 863.941792325930),
    (0.5, 30.595593674676),
    (0.8, 5.461318069755),
    (0.9, 3.840481302914),
];

fn solve(omega: f64) -> SolitonSolution {
    solve_ground(omega, &SolveOptions::default()).unwrap()
}

fn synthetic(f: impl Fn(f64) -> (f64, f64), g: impl Fn(f64) -> (f64, f64)) -> RadialProfile {
    let x: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.01).collect();
    let (fv, dfv): (Vec<f64>, Vec<f64>) = x.iter().map(|&x| f(x)).unzip();
    let (gv, dgv): (Vec<f64>, Vec<f64>) = x.iter().map(|&x| g(x)).unzip();
    RadialProfile {
        system: RadialSystem::Dirac,
        omega: 0.5,
        f0: fv[0],
        x,
        f: fv,
        g: gv,
        df: dfv,
        dg: dgv,
        tail: TailFit {
            amplitude: 0.0,
            nu_fit: 1.0,
            b: 1.5,
            fit_window: (0.0, 0.0),
            match_x: 0.0,
            tail_ratio: 1.0,
        },
    }
}

#[test]
fn exponential_profile_gamma_integrals() {
    let p = synthetic(|x| ((-x).exp(), -(-x).exp()), |_| (0.0, 0.0));
    let o = profile_integrals(&p).unwrap().integrals;
    assert!((o.q - 0.25).abs() < 1e-10);
    assert!((o.qs - 0.25).abs() < 1e-10);
    assert!((o.i4 - 1.0 / 32.0).abs() < 1e-10);
    assert!((o.j4 - 1.0 / 32.0).abs() < 1e-10);
    assert_eq!(o.t, 0.0);
}

#[test]
fn zero_profile_gives_zero() {
    let p = synthetic(|_| (0.0, 0.0), |_| (0.0, 0.0));
    let o = profile_integrals(&p).unwrap();
    assert_eq!(o.integrals, Integrals::default());
    let r = identity_report(&o, 0.5);
    assert_eq!([r.d1_residual, r.d2_residual, r.v13, r.v14, r.v15, r.v16], [0.0; 6]);
}

#[test]
fn norm_matches_reference_integrator() {
    for (omega, golden) in GOLDEN_Q {
        let o = compute_integrals(&solve(omega)).unwrap();
        assert!((o.q() / golden - 1.0).abs() < 1e-8, "Ω = {omega}: {} vs {golden}", o.q());
    }
}

#[test]
fn reference_norm_is_frozen() {
    let (_, q) = common::critical_extrapolated(0.5, 4e-3);
    assert!((q / GOLDEN_Q[1].1 - 1.0).abs() < 1e-11);
}

#[test]
fn calibrated_coupling_at_half() {
    let o = compute_integrals(&solve(0.5)).unwrap();
    let lambda = calibrate_lambda(o.q(), 1.0, 1.0).unwrap();
    assert!((lambda / (4.0 * PI * GOLDEN_Q[1].1) - 1.0).abs() < 1e-8);
}

#[test]
fn fourth_order_quadrature() {
    let p = solve(0.5).profile;
    let levels: Vec<Integrals> = [1, 2, 4].iter().map(|&s| quadrature(&p.coarsened(s))).collect();
    for k in 0..5 {
        let v: Vec<f64> = levels.iter().map(|l| l.as_array()[k].1).collect();
        let ratio = (v[2] - v[1]).abs() / (v[1] - v[0]).abs();
        assert!(ratio >= 8.0, "{}: ratio {ratio}", levels[0].as_array()[k].0);
    }
}

#[test]
fn direct_identities_hold() {
    let r = identity_report(&compute_integrals(&solve(0.5)).unwrap(), 0.5);
    assert!(r.d1_residual <= 1e-7 && r.d2_residual <= 1e-7);
    for k in 1..=9 {
        let omega = k as f64 / 10.0;
        let o = compute_integrals(&solve(omega)).unwrap();
        let r = identity_report(&o, omega);
        assert!(r.d1_residual <= 1e-6 && r.d2_residual <= 1e-6, "Ω = {omega}: {r:?}");
        for v in [r.v13, r.v14, r.v15, r.v16, r.energy_ratio] {
            assert!(v.is_finite() && v >= 0.0);
        }
    }
}

#[test]
fn tails_are_negligible() {
    for omega in [0.2, 0.5, 0.9, 0.99] {
        let o = compute_integrals(&solve(omega)).unwrap();
        for ((_, t), _) in o.tail_corrections.as_array().into_iter().zip(0..) {
            assert!(t.abs() <= 1e-10 * o.q());
        }
    }
}

#[test]
fn energy_positive_across_sweep() {
    for k in 1..=9 {
        let omega = k as f64 / 10.0;
        let o = compute_integrals(&solve(omega)).unwrap();
        let params = PhysicalParams::natural(omega).unwrap();
        let e = energy(&o, &params);
        assert!(e.energy > 0.0, "Ω = {omega}");
        assert!((e.kinetic + e.scalar + e.quartic - e.energy).abs() < 1e-12);
    }
    let params = PhysicalParams::natural(0.5).unwrap();
    let o = compute_integrals(&solve(0.5)).unwrap();
    assert_eq!(energy(&o, &params).hbar_omega, 0.5);
}

fn calibrated(o: &ObservableSet, hbar: f64, ell0: f64, omega: f64) -> PhysicalParams {
    let lambda = calibrate_lambda(o.q(), ell0, hbar).unwrap();
    solitonlab_core::params::make_params(hbar, 1.0, ell0, omega, Some(lambda)).unwrap()
}

#[test]
fn calibrated_norm_equals_hbar() {
    let o = compute_integrals(&solve(0.5)).unwrap();
    for (hbar, ell0) in [(1.0, 1.0), (2.0, 1.5), (0.3, 0.7)] {
        let p = calibrated(&o, hbar, ell0, 0.5 / ell0);
        let n = dimensionful_norm(o.q(), &p).unwrap();
        assert!((n / hbar - 1.0).abs() < 1e-10);
    }
    assert!(dimensionful_norm(1.0, &PhysicalParams::natural(0.5).unwrap()).is_err());
}

#[test]
fn algebraic_spin_is_half_hbar() {
    let s = solve(0.5);
    let o = compute_integrals(&s).unwrap();
    let p = calibrated(&o, 1.0, 1.0, 0.5);
    let r = spin_z(&s, &o, &p, GridSpec::default()).unwrap();
    assert_eq!(r.sz_algebraic, 0.5);
    assert!((r.sz_grid - 0.5).abs() <= 0.01);
    assert_eq!(r.grid, GridSpec::default());

    // coupling calibrated for half the norm: the profile carries twice the target
    let lambda = calibrate_lambda(0.5 * o.q(), 1.0, 1.0).unwrap();
    let p2 = PhysicalParams::natural(0.5).unwrap().with_lambda(lambda).unwrap();
    assert!((o.q() / target_norm(&p2).unwrap() - 2.0).abs() < 1e-12);
    let r2 = spin_z(&s, &o, &p2, GridSpec::default()).unwrap();
    assert!((r2.sz_algebraic - 1.0).abs() < 1e-12);
    assert!((r2.sz_grid - 1.0).abs() <= 0.02);
}

#[test]
fn grid_spin_converges_quadratically() {
    let s = solve(0.5);
    let o = compute_integrals(&s).unwrap();
    let p = calibrated(&o, 1.0, 1.0, 0.5);
    let coarse = spin_z(&s, &o, &p, GridSpec::default()).unwrap();
    let fine = spin_z(&s, &o, &p, GridSpec::default().refined()).unwrap();
    let ratio = (coarse.sz_grid - 0.5).abs() / (fine.sz_grid - 0.5).abs();
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

proptest! {
    #[test]
    fn expint_recurrence(n in 1u32..6, z in 0.05f64..80.0) {
        // n E_{n+1}(z) = e^{−z} − z E_n(z)
        let lhs = n as f64 * expint(n + 1, z);
        let rhs = (-z).exp() - z * expint(n, z);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (-z).exp().max(lhs.abs()));
    }

    #[test]
    fn energy_scales_with_units(hbar in 0.1f64..10.0, c in 0.1f64..10.0, ell0 in 0.1f64..10.0) {
        let o = ObservableSet {
            omega: 0.5,
            system: RadialSystem::Dirac,
            integrals: Integrals { q: 30.0, qs: 10.0, i4: 10.0, j4: 25.0, t: 15.0 },
            tail_corrections: Integrals::default(),
            quadrature_error: Integrals::default(),
        };
        let unit = solitonlab_core::params::make_params(1.0, 1.0, 1.0, 0.5, None).unwrap();
        let p = solitonlab_core::params::make_params(hbar, c, ell0, 0.5 * c / ell0, None).unwrap();
        let (e1, e) = (energy(&o, &unit), energy(&o, &p));
        prop_assert!((e.energy / (e1.energy * hbar * c / ell0) - 1.0).abs() < 1e-12);
        prop_assert!((e.ratio - e1.ratio).abs() < 1e-12);
    }

    #[test]
    fn identity_residuals_nonnegative(q in 0.1f64..100.0, qs in -50.0f64..50.0, i4 in 0.0f64..50.0,
                                      j4 in -50.0f64..50.0, t in -50.0f64..50.0, omega in 0.01f64..0.99) {
        let o = ObservableSet {
            omega,
            system: RadialSystem::Dirac,
            integrals: Integrals { q, qs, i4, j4, t },
            tail_corrections: Integrals::default(),
            quadrature_error: Integrals::default(),
        };
        let r = identity_report(&o, omega);
        for v in [r.d1_residual, r.d2_residual, r.v13, r.v14, r.v15, r.v16] {
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }
}
