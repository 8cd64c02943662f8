//! Experiment configs, deterministic parallel runs into content-addressed
//! directories, and the acceptance suites.
//!
//! A run directory holds `config.toml`, `result.toml`, `table.csv`,
//! `seeds.csv` and `manifest.toml`. The manifest is written first with
//! status `incomplete` and rewritten as `complete` with file digests last.

pub mod criteria;
pub mod fixtures;

mod config;
mod experiments;
mod run;

pub use config::{parse_toml, ExperimentConfig, ExperimentKind};
pub use criteria::CriterionOutcome;
pub use run::{
    export, inspect, run, run_dir, FileDigest, RunManifest, RunOptions, RunOutcome, RunStatus,
    Timing, CONFIG_FILE, MANIFEST_FILE, RESULT_FILE, SEEDS_FILE, TABLE_FILE,
};

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Suite names accepted by [`verify`].
pub const SUITES: [&str; 5] = ["oracles", "diffusion", "lil-envelope", "determinism", "all"];

/// Criterion ids of a suite.
pub fn suite_criteria(suite: &str) -> Result<Vec<u8>> {
    Ok(match suite {
        "oracles" => vec![1, 2, 5, 8, 9],
        "diffusion" => vec![3, 4],
        "lil-envelope" => vec![6, 7],
        "determinism" => vec![10],
        "all" => (1..=10).collect(),
        other => {
            return Err(Error::usage(format!(
                "unknown suite `{other}`; expected one of {}",
                SUITES.join(", ")
            )))
        }
    })
}

/// Runs one criterion; `scratch` receives the determinism runs.
pub fn run_criterion(id: u8, scratch: &Path) -> Result<CriterionOutcome> {
    Ok(match id {
        1 => criteria::criterion_1(),
        2 => criteria::criterion_2(),
        3 => criteria::criterion_3(),
        4 => criteria::criterion_4(),
        5 => criteria::criterion_5(),
        6 => criteria::criterion_6(),
        7 => criteria::criterion_7(),
        8 => criteria::criterion_8(),
        9 => criteria::criterion_9(),
        10 => criteria::criterion_10(scratch),
        other => return Err(Error::usage(format!("no criterion {other}"))),
    })
}

/// Runs every criterion of `suite`, calling `report` after each one.
pub fn verify(
    suite: &str,
    scratch: &Path,
    mut report: impl FnMut(&CriterionOutcome),
) -> Result<Vec<CriterionOutcome>> {
    let ids = suite_criteria(suite)?;
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let o = run_criterion(id, scratch)?;
        report(&o);
        out.push(o);
    }
    Ok(out)
}
