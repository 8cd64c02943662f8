use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiments::execute;
use super::{parse_toml, sha256_hex};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const RESULT_FILE: &str = "result.toml";
pub const TABLE_FILE: &str = "table.csv";
pub const SEEDS_FILE: &str = "seeds.csv";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Incomplete,
    Complete,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Incomplete => "incomplete",
            RunStatus::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Timing {
    pub started_unix: u64,
    pub elapsed_seconds: f64,
}

/// Provenance of a run directory. Everything except `timing` and `workers`
/// is determined by the config and the crate version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub status: RunStatus,
    pub kind: String,
    pub replicas: usize,
    pub workers: usize,
    /// How per-replica seeds are derived; the values are in `seeds.csv`.
    pub seed_derivation: String,
    pub timing: Timing,
    #[serde(default)]
    pub files: Vec<FileDigest>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        parse_toml(&text)
    }

    pub fn digest_of(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.sha256.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Recompute even when a complete run exists.
    pub force: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    /// `true` when an existing complete run was returned unchanged.
    pub reused: bool,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Directory of a config: `output-dir/<first 16 hex digits of the identity hash>`.
pub fn run_dir(config: &ExperimentConfig) -> PathBuf {
    config.output_dir.join(&config.identity_hash()[..16])
}

/// Runs an experiment into its content-addressed directory.
///
/// A complete run is returned as is unless `options.force`; an incomplete
/// one (interrupted earlier) is discarded and restarted.
pub fn run(config: &ExperimentConfig, options: RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let dir = run_dir(config);
    if let Ok(existing) = RunManifest::read(&dir) {
        if existing.status == RunStatus::Complete && !options.force {
            return Ok(RunOutcome {
                dir,
                manifest: existing,
                reused: true,
            });
        }
    }
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;
    let started = Instant::now();
    let mut manifest = RunManifest {
        config_hash: config.identity_hash(),
        version: env!("CARGO_PKG_VERSION").into(),
        status: RunStatus::Incomplete,
        kind: config.kind.as_str().into(),
        replicas: config.replicas,
        workers: config.workers,
        seed_derivation: "hash_words(master-seed, [replica, role]); role 1 = environment, 2 = walk".into(),
        timing: Timing {
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            elapsed_seconds: 0.0,
        },
        files: Vec::new(),
    };
    write_atomic(&dir.join(CONFIG_FILE), config.to_toml().as_bytes())?;
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_toml().as_bytes())?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::usage(format!("cannot start {} workers: {e}", config.workers)))?;
    let out = pool.install(|| execute(config))?;
    for (name, body) in [
        (RESULT_FILE, &out.result),
        (TABLE_FILE, &out.table),
        (SEEDS_FILE, &out.seeds),
    ] {
        write_atomic(&dir.join(name), body.as_bytes())?;
        manifest.files.push(FileDigest {
            name: name.into(),
            sha256: sha256_hex(body.as_bytes()),
        });
    }
    manifest.status = RunStatus::Complete;
    manifest.timing.elapsed_seconds = started.elapsed().as_secs_f64();
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_toml().as_bytes())?;
    Ok(RunOutcome {
        dir,
        manifest,
        reused: false,
    })
}

fn manifest_dir(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

/// Human-readable summary of a run directory (or its manifest file).
pub fn inspect(path: &Path) -> Result<String> {
    let dir = manifest_dir(path);
    let m = RunManifest::read(&dir)?;
    let mut s = format!(
        "run {}\n  kind      {}\n  status    {}\n  version   {}\n  replicas  {}\n  workers   {}\n  elapsed   {:.3} s\n  seeds     {}\n",
        dir.display(),
        m.kind,
        m.status.as_str(),
        m.version,
        m.replicas,
        m.workers,
        m.timing.elapsed_seconds,
        m.seed_derivation,
    );
    s.push_str(&format!("  config    {}\n", m.config_hash));
    for f in &m.files {
        s.push_str(&format!("  {:<11} {}\n", f.name, f.sha256));
    }
    if let Ok(result) = fs::read_to_string(dir.join(RESULT_FILE)) {
        s.push('\n');
        s.push_str(&result);
    }
    Ok(s)
}

/// The flat table of a complete run, checked against its manifest digest.
pub fn export(path: &Path) -> Result<String> {
    let dir = manifest_dir(path);
    let m = RunManifest::read(&dir)?;
    if m.status != RunStatus::Complete {
        return Err(Error::usage(format!("run in {} is incomplete", dir.display())));
    }
    let table = fs::read_to_string(dir.join(TABLE_FILE))?;
    if m.digest_of(TABLE_FILE) != Some(sha256_hex(table.as_bytes()).as_str()) {
        return Err(Error::Numerical(format!(
            "{} does not match its manifest digest",
            dir.join(TABLE_FILE).display()
        )));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvironmentSpec, JumpKernel};
    use crate::harness::ExperimentKind;

    fn drift_config(out: &Path) -> ExperimentConfig {
        let spec = EnvironmentSpec::deterministic(JumpKernel::nearest_neighbour_1d(0.7).unwrap(), 1).unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::Drift, &spec, vec![100, 200], 50, 3);
        cfg.output_dir = out.to_path_buf();
        cfg
    }

    #[test]
    fn run_writes_complete_manifest_and_reuses_it() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = drift_config(tmp.path());
        let first = run(&cfg, RunOptions::default()).unwrap();
        assert!(!first.reused);
        assert_eq!(first.manifest.status, RunStatus::Complete);
        assert_eq!(first.manifest.files.len(), 3);
        let again = run(&cfg, RunOptions::default()).unwrap();
        assert!(again.reused);
        let forced = run(&cfg, RunOptions { force: true }).unwrap();
        assert!(!forced.reused);
        assert_eq!(forced.manifest.files, first.manifest.files);
        assert!(export(&first.dir).unwrap().starts_with("n,coord,mean"));
        assert!(inspect(&first.dir).unwrap().contains("kind      drift"));
    }

    #[test]
    fn incomplete_run_is_restarted() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = drift_config(tmp.path());
        let first = run(&cfg, RunOptions::default()).unwrap();
        let mut m = first.manifest.clone();
        m.status = RunStatus::Incomplete;
        fs::write(first.dir.join(MANIFEST_FILE), m.to_toml()).unwrap();
        assert!(export(&first.dir).is_err());
        let second = run(&cfg, RunOptions::default()).unwrap();
        assert!(!second.reused);
        assert_eq!(second.manifest.status, RunStatus::Complete);
    }

    #[test]
    fn exact_decomposition_on_iid_model_is_unsupported() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = EnvironmentSpec::new(
            1,
            1,
            crate::env::Model::IidDirichlet {
                offsets: vec![vec![1], vec![-1]],
                concentration: vec![1.0, 1.0],
            },
            0,
        )
        .unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::Decomposition, &spec, vec![10], 2, 0);
        cfg.output_dir = tmp.path().to_path_buf();
        match run(&cfg, RunOptions::default()) {
            Err(Error::Unsupported { alternative, .. }) => assert!(alternative.contains("corrector_series_mc")),
            other => panic!("{other:?}"),
        }
    }
}
