//! Command-line flags, the optional TOML config file and their merge.
//!
//! Precedence is flag > config file > built-in default. The cache directory
//! additionally honours `SOLITONLAB_CACHE`, which sits between the flag and
//! the config file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use solitonlab_core::grid::GridSpec;
use solitonlab_core::radial::{RadialSystem, SolveOptions};

use crate::error::{input, CliError, Result};

pub const CACHE_ENV: &str = "SOLITONLAB_CACHE";

#[derive(Debug, Parser)]
#[command(name = "solitonlab", version, about = "Spinor soliton solver and EPR correlation laboratory")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemArg {
    Dirac,
    Printed,
}

impl From<SystemArg> for RadialSystem {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Dirac => RadialSystem::Dirac,
            SystemArg::Printed => RadialSystem::Printed,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// TOML file with default values for any flag
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Reduced Planck constant [default: 1]
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    /// Speed of light [default: 1]
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Length scale l0 [default: 1]
    #[arg(long, global = true)]
    pub ell0: Option<f64>,
    /// Radial equations to solve [default: dirac]
    #[arg(long, global = true, value_enum)]
    pub system: Option<SystemArg>,
    /// Bisection width relative to F0 [default: 1e-14]
    #[arg(long, global = true)]
    pub shoot_tol: Option<f64>,
    /// Relative tolerance of the stored profile [default: 1e-10]
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    /// Worker threads; 0 uses every core [default: 0]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Solution cache directory
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Neither read nor write the solution cache
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Output file; stdout when omitted
    #[arg(long, short, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct SourceArgs {
    /// Angular frequency omega, in (0, c/l0)
    #[arg(long, conflicts_with = "solution")]
    pub omega: Option<f64>,
    /// Solution archive written by `solve`
    #[arg(long, value_name = "FILE")]
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct AnalyzerArgs {
    /// First analyzer direction, e.g. 0,0,1
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub a: Option<[f64; 3]>,
    /// Second analyzer direction
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub b: Option<[f64; 3]>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the ground state and write a solution archive
    Solve {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Solve over an inclusive range of frequencies and write CSV
    Sweep {
        #[arg(long)]
        omega_min: Option<f64>,
        #[arg(long)]
        omega_max: Option<f64>,
        /// Number of frequencies, at least 2
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Integrals, identities, energy, spin and ladder checks of a solution
    Observables {
        #[command(flatten)]
        source: SourceArgs,
        /// Grid nodes per axis [default: 64]
        #[arg(long)]
        grid_n: Option<usize>,
        /// Grid half width [default: 12]
        #[arg(long)]
        half_width: Option<f64>,
    },
    /// Exact pair correlation for two analyzers
    Correlate {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        analyzers: AnalyzerArgs,
    },
    /// Maximize the CHSH statistic over analyzer settings
    Chsh {
        #[command(flatten)]
        source: SourceArgs,
        /// Candidates refined after the table search [default: 8]
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Random-phase Monte-Carlo estimate of the correlation
    Ensemble {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        analyzers: AnalyzerArgs,
        /// Trials per realization [default: 64]
        #[arg(long)]
        n: Option<usize>,
        /// Realizations [default: 4096]
        #[arg(long)]
        r: Option<usize>,
        /// RNG seed; drawn at random and echoed when omitted
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_vec3(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got '{s}'"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|e| format!("'{p}': {e}"))?;
    }
    Ok(v)
}

/// Keys accepted in the config file; all optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub hbar: Option<f64>,
    pub c: Option<f64>,
    pub ell0: Option<f64>,
    pub system: Option<SystemArg>,
    pub shoot_tol: Option<f64>,
    pub rtol: Option<f64>,
    pub jobs: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub omega: Option<f64>,
    pub solution: Option<PathBuf>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub steps: Option<usize>,
    pub grid_n: Option<usize>,
    pub half_width: Option<f64>,
    pub a: Option<[f64; 3]>,
    pub b: Option<[f64; 3]>,
    pub restarts: Option<usize>,
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub hbar: f64,
    pub c: f64,
    pub ell0: f64,
}

impl Units {
    /// Ω = ω ℓ₀ / c.
    pub fn dimensionless(&self, omega: f64) -> f64 {
        omega * self.ell0 / self.c
    }
}

/// Where the soliton comes from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Omega(f64),
    Solution(PathBuf),
    /// No profile given; the radial norm is the calibrated value ħ.
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Task {
    Solve { source: Source },
    Sweep { omega_min: f64, omega_max: f64, steps: usize },
    Observables { source: Source, grid: GridSpec },
    Correlate { source: Source, a: [f64; 3], b: [f64; 3] },
    Chsh { source: Source, restarts: usize },
    Ensemble { source: Source, a: [f64; 3], b: [f64; 3], n: usize, r: usize, seed: u64 },
}

/// Everything that determines the numbers a command produces. Echoed into
/// every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub task: Task,
    pub units: Units,
    pub system: SystemArg,
    pub shoot_tol: f64,
    pub rtol: f64,
}

impl RunConfig {
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            system: self.system.into(),
            shoot_tol: self.shoot_tol,
            final_rtol: self.rtol,
            ..SolveOptions::default()
        }
    }
}

/// Settings that change how a run executes but not its results.
#[derive(Debug, Clone, PartialEq)]
pub struct Runtime {
    pub jobs: usize,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn default_cache_dir() -> Option<PathBuf> {
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME").filter(|d| !d.is_empty()) {
        return Some(PathBuf::from(d).join("solitonlab"));
    }
    std::env::var_os("HOME")
        .filter(|d| !d.is_empty())
        .map(|h| PathBuf::from(h).join(".cache").join("solitonlab"))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(input(format!("--{name} must be finite and positive, got {v}")))
    }
}

fn random_seed() -> u64 {
    use std::hash::{BuildHasher, Hasher};
    let mut h = std::collections::hash_map::RandomState::new().build_hasher();
    h.write_u128(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0),
    );
    h.finish()
}

fn source(args: SourceArgs, file: &FileConfig, required: bool) -> Result<Source> {
    match (args.omega, args.solution) {
        (Some(w), _) => Ok(Source::Omega(w)),
        (None, Some(p)) => Ok(Source::Solution(p)),
        (None, None) => match (file.omega, &file.solution) {
            (Some(w), _) => Ok(Source::Omega(w)),
            (None, Some(p)) => Ok(Source::Solution(p.clone())),
            (None, None) if required => Err(input("give --omega or --solution")),
            (None, None) => Ok(Source::Calibrated),
        },
    }
}

fn analyzers(args: AnalyzerArgs, file: &FileConfig) -> Result<([f64; 3], [f64; 3])> {
    let a = args.a.or(file.a).ok_or_else(|| input("missing analyzer --a"))?;
    let b = args.b.or(file.b).ok_or_else(|| input("missing analyzer --b"))?;
    Ok((a, b))
}

/// Merges flags, the config file and defaults, and validates ranges.
pub fn resolve(cli: Cli) -> Result<(RunConfig, Runtime)> {
    let g = cli.global;
    let file = match &g.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let units = Units {
        hbar: positive("hbar", g.hbar.or(file.hbar).unwrap_or(1.0))?,
        c: positive("c", g.c.or(file.c).unwrap_or(1.0))?,
        ell0: positive("ell0", g.ell0.or(file.ell0).unwrap_or(1.0))?,
    };
    let shoot_tol = positive("shoot-tol", g.shoot_tol.or(file.shoot_tol).unwrap_or(1e-14))?;
    let rtol = positive("rtol", g.rtol.or(file.rtol).unwrap_or(1e-10))?;
    if shoot_tol > 1e-6 || rtol > 1e-4 {
        return Err(input("--shoot-tol must be <= 1e-6 and --rtol <= 1e-4"));
    }
    let task = match cli.command {
        Command::Solve { source: s } => Task::Solve {
            source: source(s, &file, true)?,
        },
        Command::Sweep {
            omega_min,
            omega_max,
            steps,
        } => {
            let omega_min = omega_min.or(file.omega_min).unwrap_or(0.1);
            let omega_max = omega_max.or(file.omega_max).unwrap_or(0.9);
            let steps = steps.or(file.steps).unwrap_or(9);
            if steps < 2 {
                return Err(input(format!("--steps must be at least 2, got {steps}")));
            }
            let upper = units.c / units.ell0;
            if !(omega_min > 0.0 && omega_min < omega_max && omega_max < upper) {
                return Err(input(format!(
                    "sweep needs 0 < omega-min < omega-max < c/l0 = {upper}, got [{omega_min}, {omega_max}]"
                )));
            }
            Task::Sweep {
                omega_min,
                omega_max,
                steps,
            }
        }
        Command::Observables {
            source: s,
            grid_n,
            half_width,
        } => {
            let grid = GridSpec {
                n: grid_n.or(file.grid_n).unwrap_or(64),
                half_width: positive("half-width", half_width.or(file.half_width).unwrap_or(12.0))?,
            };
            if !(5..=1025).contains(&grid.n) {
                return Err(input(format!("--grid-n must lie in [5, 1025], got {}", grid.n)));
            }
            Task::Observables {
                source: source(s, &file, true)?,
                grid,
            }
        }
        Command::Correlate {
            source: s,
            analyzers: an,
        } => {
            let (a, b) = analyzers(an, &file)?;
            Task::Correlate {
                source: source(s, &file, false)?,
                a,
                b,
            }
        }
        Command::Chsh { source: s, restarts } => Task::Chsh {
            source: source(s, &file, false)?,
            restarts: restarts.or(file.restarts).unwrap_or(8),
        },
        Command::Ensemble {
            source: s,
            analyzers: an,
            n,
            r,
            seed,
        } => {
            let (a, b) = analyzers(an, &file)?;
            Task::Ensemble {
                source: source(s, &file, false)?,
                a,
                b,
                n: n.or(file.n).unwrap_or(64),
                r: r.or(file.r).unwrap_or(4096),
                seed: seed.or(file.seed).unwrap_or_else(random_seed),
            }
        }
    };
    let cache_dir = if g.no_cache {
        None
    } else {
        g.cache_dir
            .or_else(|| std::env::var_os(CACHE_ENV).filter(|d| !d.is_empty()).map(PathBuf::from))
            .or(file.cache_dir)
            .or_else(default_cache_dir)
    };
    let config = RunConfig {
        task,
        units,
        system: g.system.or(file.system).unwrap_or(SystemArg::Dirac),
        shoot_tol,
        rtol,
    };
    let runtime = Runtime {
        jobs: g.jobs.or(file.jobs).unwrap_or(0),
        cache_dir,
        out: g.out,
    };
    Ok((config, runtime))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<(RunConfig, Runtime)> {
        let mut v = vec!["solitonlab", "--no-cache"];
        v.extend_from_slice(args);
        resolve(Cli::try_parse_from(v).unwrap())
    }

    #[test]
    fn vectors_parse_with_signs() {
        assert_eq!(parse_vec3("-1, 0,0.5").unwrap(), [-1.0, 0.0, 0.5]);
        assert!(parse_vec3("1,2").is_err());
        assert!(parse_vec3("1,x,2").is_err());
    }

    #[test]
    fn defaults_fill_in() {
        let (cfg, rt) = parse(&["sweep"]).unwrap();
        assert_eq!(
            cfg.task,
            Task::Sweep {
                omega_min: 0.1,
                omega_max: 0.9,
                steps: 9
            }
        );
        assert_eq!(cfg.units, Units { hbar: 1.0, c: 1.0, ell0: 1.0 });
        assert_eq!((rt.jobs, rt.cache_dir), (0, None));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "hbar = 2.0\nsteps = 5\nomega_min = 0.2\n").unwrap();
        let p = path.to_str().unwrap();
        let (cfg, _) = parse(&["--config", p, "sweep", "--steps", "3"]).unwrap();
        assert_eq!(cfg.units.hbar, 2.0);
        assert_eq!(
            cfg.task,
            Task::Sweep {
                omega_min: 0.2,
                omega_max: 0.9,
                steps: 3
            }
        );
    }

    #[test]
    fn unknown_file_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "omeg = 0.5\n").unwrap();
        let err = parse(&["--config", path.to_str().unwrap(), "solve"]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert_eq!(parse(&["sweep", "--steps", "1"]).unwrap_err().exit_code(), 3);
        assert_eq!(parse(&["sweep", "--omega-max", "1.0"]).unwrap_err().exit_code(), 3);
        assert_eq!(parse(&["--hbar=-1", "solve", "--omega", "0.5"]).unwrap_err().exit_code(), 3);
        assert_eq!(parse(&["solve"]).unwrap_err().exit_code(), 3);
        assert_eq!(parse(&["correlate", "--a", "0,0,1"]).unwrap_err().exit_code(), 3);
    }
}
