//! On-disk cache of solved profiles, keyed by a hash of Ω and the solver
//! settings.

use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};
use solitonlab_core::radial::{solve_ground, SolitonSolution, SolveOptions};

use crate::archive::write_atomic;
use crate::error::Result;

#[derive(Serialize)]
struct Key<'a> {
    omega_bits: u64,
    options: &'a SolveOptions,
    code_version: &'a str,
}

pub fn key(omega: f64, opts: &SolveOptions) -> String {
    let k = Key {
        omega_bits: omega.to_bits(),
        options: opts,
        code_version: env!("CARGO_PKG_VERSION"),
    };
    let bytes = serde_json::to_vec(&k).expect("serializable key");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone)]
pub struct Cache {
    pub dir: PathBuf,
}

impl Cache {
    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A cached solution, or `None` when absent or unreadable.
    pub fn get(&self, key: &str) -> Option<SolitonSolution> {
        let text = std::fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, key: &str, solution: &SolitonSolution) -> Result<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| crate::error::CliError::io(&self.dir, e))?;
        let text = serde_json::to_string(solution).expect("serializable solution");
        write_atomic(&self.path(key), text.as_bytes())
    }
}

/// Solves at Ω, reading and filling the cache when one is configured. A
/// failed cache write is reported on stderr and otherwise ignored.
pub fn solve_cached(omega: f64, opts: &SolveOptions, cache: Option<&Cache>) -> Result<(SolitonSolution, bool)> {
    let k = key(omega, opts);
    if let Some(hit) = cache.and_then(|c| c.get(&k)) {
        return Ok((hit, true));
    }
    let solution = solve_ground(omega, opts)?;
    if let Some(c) = cache {
        if let Err(e) = c.put(&k, &solution) {
            eprintln!("warning: could not write cache entry: {e}");
        }
    }
    Ok((solution, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_inputs() {
        let o = SolveOptions::default();
        assert_eq!(key(0.5, &o), key(0.5, &o));
        assert_ne!(key(0.5, &o), key(0.5000000001, &o));
        let tighter = SolveOptions { final_rtol: 1e-11, ..o };
        assert_ne!(key(0.5, &o), key(0.5, &tighter));
        assert_eq!(key(0.5, &o).len(), 64);
    }
}
