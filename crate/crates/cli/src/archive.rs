//! Schema-versioned JSON archive of a solved soliton and its observables.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use solitonlab_core::observables::{
    compute_integrals, energy, identity_report, EnergyReport, IdentityReport, ObservableSet,
};
use solitonlab_core::params::{calibrate_lambda, make_params, PhysicalParams};
use solitonlab_core::radial::{Diagnostics, Provenance, RadialProfile, ShootingResult, SolitonSolution};

use crate::config::Units;
use crate::error::{input, CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionArchive {
    pub schema_version: u32,
    /// Dimensionless frequency Ω = ω ℓ₀ / c.
    pub omega: f64,
    /// Unit system with λ calibrated so the norm equals ħ.
    pub params: PhysicalParams,
    /// Mesh arrays x, F, G, dF, dG and the tail fit.
    pub profile: RadialProfile,
    pub shooting: ShootingResult,
    pub diagnostics: Diagnostics,
    pub observables: ObservableSet,
    pub identities: IdentityReport,
    pub energy: EnergyReport,
    pub provenance: Provenance,
}

/// Physical parameters at Ω with λ fixed by the norm `q`.
pub fn calibrated_params(units: Units, omega: f64, q: f64) -> Result<PhysicalParams> {
    let lambda = calibrate_lambda(q, units.ell0, units.hbar)?;
    Ok(make_params(
        units.hbar,
        units.c,
        units.ell0,
        omega * units.c / units.ell0,
        Some(lambda),
    )?)
}

impl SolutionArchive {
    pub fn build(solution: SolitonSolution, units: Units) -> Result<Self> {
        let observables = compute_integrals(&solution)?;
        let params = calibrated_params(units, solution.omega, observables.q())?;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            omega: solution.omega,
            identities: identity_report(&observables, solution.omega),
            energy: energy(&observables, &params),
            params,
            observables,
            profile: solution.profile,
            shooting: solution.shooting,
            diagnostics: solution.diagnostics,
            provenance: solution.provenance,
        })
    }

    pub fn solution(&self) -> SolitonSolution {
        SolitonSolution {
            omega: self.omega,
            profile: self.profile.clone(),
            shooting: self.shooting.clone(),
            diagnostics: self.diagnostics,
            provenance: self.provenance.clone(),
        }
    }

    pub fn units(&self) -> Units {
        Units {
            hbar: self.params.hbar,
            c: self.params.c,
            ell0: self.params.ell0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(input(format!(
                "archive schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let p = &self.profile;
        let n = p.x.len();
        if n < 2 || [p.f.len(), p.g.len(), p.df.len(), p.dg.len()].iter().any(|&l| l != n) {
            return Err(input("archive arrays x, F, G, dF, dG must have one common length >= 2"));
        }
        if !p.x.windows(2).all(|w| w[0] < w[1]) {
            return Err(input("archive grid is not strictly increasing"));
        }
        if p.omega != self.omega {
            return Err(input("archive profile and header disagree on Omega"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(text).map_err(|e| input(format!("bad archive: {e}")))?;
        a.validate()?;
        Ok(a)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Input(m) => input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
