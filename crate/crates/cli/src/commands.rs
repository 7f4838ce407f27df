//! Dispatch of a resolved [`RunConfig`] to the library.

use std::f64::consts::SQRT_2;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use solitonlab_core::correlation::{
    build_singlet, chsh_optimize, deterministic_local_bound, epr_correlation, ChshOptimum,
    ChshSettings, CorrelationReport, EntangledPair, UnitVector,
};
use solitonlab_core::ensemble::{ensemble_estimate, EnsembleEstimate, EnsembleSpec};
use solitonlab_core::grid::{ladder_residuals, GridSpec, LadderReport};
use solitonlab_core::observables::{
    dimensionful_norm, spin_z, EnergyReport, IdentityReport, ObservableSet, SpinReport,
};
use solitonlab_core::params::make_params;

use crate::archive::{calibrated_params, to_json, write_atomic, SolutionArchive, SCHEMA_VERSION};
use crate::cache::{solve_cached, Cache};
use crate::config::{RunConfig, Runtime, Source, Task, Units};
use crate::error::{CliError, Result};

/// Column order of the sweep CSV.
pub const SWEEP_HEADER: [&str; 17] = [
    "Omega",
    "F0",
    "Q",
    "Qs",
    "I4",
    "J4",
    "T",
    "nu_fit",
    "d1_residual",
    "d2_residual",
    "v13",
    "v14",
    "v15",
    "v16",
    "energy_ratio",
    "lambda_calibrated",
    "status",
];

/// What a command hands back to `run`: the artifact and a one-line summary.
pub struct Outcome {
    pub artifact: String,
    pub summary: String,
    pub error: Option<CliError>,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: u32,
    config: &'a RunConfig,
    #[serde(flatten)]
    result: T,
}

/// The soliton a correlation command is evaluated on.
#[derive(Debug, Clone, Copy, Serialize)]
struct SourceInfo {
    omega: Option<f64>,
    f0: Option<f64>,
    q: Option<f64>,
    radial_norm: f64,
    hbar: f64,
}

fn check_frequency(units: Units, omega: f64) -> Result<f64> {
    make_params(units.hbar, units.c, units.ell0, omega, None)?;
    Ok(units.dimensionless(omega))
}

fn load(source: &Source, cfg: &RunConfig, cache: Option<&Cache>) -> Result<Option<(SolutionArchive, bool)>> {
    match source {
        Source::Omega(w) => {
            let omega = check_frequency(cfg.units, *w)?;
            let (solution, hit) = solve_cached(omega, &cfg.solve_options(), cache)?;
            Ok(Some((SolutionArchive::build(solution, cfg.units)?, hit)))
        }
        Source::Solution(p) => Ok(Some((SolutionArchive::read(p)?, false))),
        Source::Calibrated => Ok(None),
    }
}

fn pair_for(source: &Source, cfg: &RunConfig, cache: Option<&Cache>) -> Result<(EntangledPair, SourceInfo)> {
    match load(source, cfg, cache)? {
        Some((a, _)) => {
            let norm = dimensionful_norm(a.observables.q(), &a.params)?;
            let info = SourceInfo {
                omega: Some(a.omega),
                f0: Some(a.profile.f0),
                q: Some(a.observables.q()),
                radial_norm: norm,
                hbar: a.params.hbar,
            };
            Ok((build_singlet(norm, a.params.hbar)?, info))
        }
        None => {
            let h = cfg.units.hbar;
            let info = SourceInfo {
                omega: None,
                f0: None,
                q: None,
                radial_norm: h,
                hbar: h,
            };
            Ok((build_singlet(h, h)?, info))
        }
    }
}

fn done(artifact: String, summary: String) -> Result<Outcome> {
    Ok(Outcome {
        artifact,
        summary,
        error: None,
    })
}

pub fn execute(cfg: &RunConfig, runtime: &Runtime) -> Result<Outcome> {
    let cache = runtime.cache_dir.clone().map(|dir| Cache { dir });
    let cache = cache.as_ref();
    match &cfg.task {
        Task::Solve { source } => {
            let (a, hit) = load(source, cfg, cache)?.expect("solve always has a source");
            let summary = format!(
                "solve: Omega = {}, F0 = {:.15}, Q = {:.12}, nu_fit = {:.6}, E/(hbar omega) = {:.6}{}",
                a.omega,
                a.profile.f0,
                a.observables.q(),
                a.profile.tail.nu_fit,
                a.energy.ratio,
                if hit { " (cached)" } else { "" }
            );
            done(a.to_json(), summary)
        }
        Task::Sweep {
            omega_min,
            omega_max,
            steps,
        } => sweep(cfg, *omega_min, *omega_max, *steps, cache),
        Task::Observables { source, grid } => observables(cfg, source, *grid, cache),
        Task::Correlate { source, a, b } => {
            let (pair, info) = pair_for(source, cfg, cache)?;
            let report = epr_correlation(&pair, *a, *b)?;
            #[derive(Serialize)]
            struct Out {
                source: SourceInfo,
                correlation: CorrelationReport,
            }
            let summary = format!("correlate: P(a, b) = {:.15}", report.p_exact);
            let out = Out {
                source: info,
                correlation: report,
            };
            done(to_json(&Report { schema_version: SCHEMA_VERSION, config: cfg, result: out }), summary)
        }
        Task::Chsh { source, restarts } => {
            let (pair, info) = pair_for(source, cfg, cache)?;
            let optimum = chsh_optimize(|a, b| pair.correlation(a, b), *restarts)?;
            #[derive(Serialize)]
            struct Out {
                source: SourceInfo,
                optimum: ChshOptimum,
                settings: ChshSettings,
                local_bound: f64,
                tsirelson_bound: f64,
            }
            let summary = format!(
                "chsh: S_max = {:.12} (local bound {}, 2 sqrt 2 = {:.12})",
                optimum.s_max,
                deterministic_local_bound(),
                2.0 * SQRT_2
            );
            let out = Out {
                source: info,
                settings: optimum.settings(),
                optimum,
                local_bound: deterministic_local_bound(),
                tsirelson_bound: 2.0 * SQRT_2,
            };
            done(to_json(&Report { schema_version: SCHEMA_VERSION, config: cfg, result: out }), summary)
        }
        Task::Ensemble {
            source,
            a,
            b,
            n,
            r,
            seed,
        } => {
            let (pair, info) = pair_for(source, cfg, cache)?;
            let spec = EnsembleSpec {
                n: *n,
                r: *r,
                seed: *seed,
                a: UnitVector::new(*a)?,
                b: UnitVector::new(*b)?,
            };
            let estimate = ensemble_estimate(&spec, &pair)?;
            let p_exact = pair.correlation(&spec.a, &spec.b);
            #[derive(Serialize)]
            struct Out {
                source: SourceInfo,
                seed: u64,
                p_exact: f64,
                deviation_in_stderr: Option<f64>,
                estimate: EnsembleEstimate,
            }
            let dev = (estimate.stderr > 0.0).then(|| (estimate.mean - p_exact) / estimate.stderr);
            let summary = format!(
                "ensemble: seed = {seed}, mean = {:.12} +/- {:.3e}, exact = {:.12}",
                estimate.mean, estimate.stderr, p_exact
            );
            let out = Out {
                source: info,
                seed: *seed,
                p_exact,
                deviation_in_stderr: dev,
                estimate,
            };
            done(to_json(&Report { schema_version: SCHEMA_VERSION, config: cfg, result: out }), summary)
        }
    }
}

fn observables(cfg: &RunConfig, source: &Source, grid: GridSpec, cache: Option<&Cache>) -> Result<Outcome> {
    let (a, _) = load(source, cfg, cache)?.expect("observables always has a source");
    let solution = a.solution();
    let norm = dimensionful_norm(a.observables.q(), &a.params)?;
    let spin = spin_z(&solution, &a.observables, &a.params, grid)?;
    let ladder = ladder_residuals(&a.profile, grid);
    #[derive(Serialize)]
    struct Out {
        omega: f64,
        f0: f64,
        lambda: Option<f64>,
        norm: f64,
        observables: ObservableSet,
        identities: IdentityReport,
        energy: EnergyReport,
        spin: SpinReport,
        ladder: LadderReport,
    }
    let summary = format!(
        "observables: Omega = {}, Q = {:.12}, d1 = {:.2e}, d2 = {:.2e}, Sz = {:.6} (grid), ladder max = {:.4}",
        a.omega,
        a.observables.q(),
        a.identities.d1_residual,
        a.identities.d2_residual,
        spin.sz_grid,
        ladder.max_residual()
    );
    let out = Out {
        omega: a.omega,
        f0: a.profile.f0,
        lambda: a.params.lambda,
        norm,
        observables: a.observables,
        identities: a.identities,
        energy: a.energy,
        spin,
        ladder,
    };
    done(to_json(&Report { schema_version: SCHEMA_VERSION, config: cfg, result: out }), summary)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn sweep_row(cfg: &RunConfig, omega: f64, cache: Option<&Cache>) -> Vec<String> {
    let row = (|| -> Result<Vec<String>> {
        let (solution, _) = solve_cached(omega, &cfg.solve_options(), cache)?;
        let a = SolutionArchive::build(solution, cfg.units)?;
        let i = a.observables.integrals;
        let id = a.identities;
        let lambda = calibrated_params(cfg.units, omega, i.q)?.lambda.expect("calibrated");
        let mut v: Vec<String> = [
            a.profile.f0,
            i.q,
            i.qs,
            i.i4,
            i.j4,
            i.t,
            a.profile.tail.nu_fit,
            id.d1_residual,
            id.d2_residual,
            id.v13,
            id.v14,
            id.v15,
            id.v16,
            id.energy_ratio,
            lambda,
        ]
        .into_iter()
        .map(num)
        .collect();
        v.push("ok".into());
        Ok(v)
    })();
    let mut out = vec![num(omega)];
    match row {
        Ok(v) => out.extend(v),
        Err(e) => {
            out.extend(std::iter::repeat_n(String::new(), SWEEP_HEADER.len() - 2));
            out.push(format!("error: {e}"));
        }
    }
    out
}

fn sweep(cfg: &RunConfig, lo: f64, hi: f64, steps: usize, cache: Option<&Cache>) -> Result<Outcome> {
    let omegas: Vec<f64> = (0..steps)
        .map(|k| {
            let w = lo + (hi - lo) * k as f64 / (steps - 1) as f64;
            cfg.units.dimensionless(w)
        })
        .collect();
    let rows: Vec<Vec<String>> = omegas.par_iter().map(|&w| sweep_row(cfg, w, cache)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("in-memory csv");
    for r in &rows {
        w.write_record(r).expect("in-memory csv");
    }
    let bytes = w.into_inner().expect("in-memory csv");
    let ok = rows.iter().filter(|r| r.last().is_some_and(|s| s == "ok")).count();
    Ok(Outcome {
        artifact: String::from_utf8(bytes).expect("utf-8 csv"),
        summary: format!("sweep: {ok}/{steps} frequencies converged"),
        error: (ok == 0).then_some(CliError::SweepFailed),
    })
}

/// Writes the artifact to `out`, or stdout when `None`.
pub fn emit(artifact: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, artifact.as_bytes()),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(artifact.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
