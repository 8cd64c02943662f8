use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentConfig, EnvironmentSpec};
use crate::error::{Error, Result};

/// Parses a TOML document, reporting the 1-based line and the offending key
/// of the first error.
pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let message = e.message().to_string();
        let field = message
            .split('`')
            .nth(1)
            .filter(|_| message.contains("field"))
            .map(str::to_string);
        Error::Config {
            line,
            field,
            message,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Drift,
    Diffusion,
    Decomposition,
    QuenchedVariance,
    Lil,
    Cluster,
    SmallSet,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Drift => "drift",
            Self::Diffusion => "diffusion",
            Self::Decomposition => "decomposition",
            Self::QuenchedVariance => "quenched-variance",
            Self::Lil => "lil",
            Self::Cluster => "cluster",
            Self::SmallSet => "small-set",
        }
    }
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

/// A complete experiment description. `workers` and `output-dir` do not
/// affect results and are excluded from [`ExperimentConfig::identity_hash`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    #[serde(with = "crate::serde_seed")]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Resolvent parameter for `decomposition` (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Largest power scanned by `small-set` (default 4).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<u32>,
    /// Centering drift, for models without an exactly known one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    pub environment: EnvironmentConfig,
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct Identity<'a> {
    version: &'static str,
    kind: ExperimentKind,
    n_grid: &'a [usize],
    replicas: usize,
    #[serde(with = "crate::serde_seed")]
    master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift: Option<&'a [f64]>,
    environment: &'a EnvironmentConfig,
}

/// 1-based line of the first `key =` assignment in `text`.
fn locate(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        l.trim_start()
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, spec: &EnvironmentSpec, n_grid: Vec<usize>, replicas: usize, master_seed: u64) -> Self {
        Self {
            kind,
            n_grid,
            replicas,
            master_seed,
            workers: 1,
            output_dir: default_output(),
            epsilon: None,
            l_max: None,
            drift: None,
            environment: EnvironmentConfig::from_spec(spec),
        }
    }

    /// Parses and validates; errors carry the line and field.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = parse_toml(text)?;
        cfg.validate().map_err(|e| match e {
            Error::Config {
                line: None,
                field: Some(f),
                message,
            } => {
                let key = f.rsplit('.').next().unwrap_or(&f).to_string();
                Error::Config {
                    line: locate(text, &key),
                    field: Some(f),
                    message,
                }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn spec(&self) -> Result<EnvironmentSpec> {
        self.environment.to_spec()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| Error::Config {
            line: None,
            field: Some(field.to_string()),
            message: message.to_string(),
        };
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(bad("n-grid", "n-grid must be non-empty and positive"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("n-grid", "n-grid must be strictly increasing"));
        }
        if self.replicas == 0 {
            return Err(bad("replicas", "replicas must be at least 1"));
        }
        if self.workers == 0 {
            return Err(bad("workers", "workers must be at least 1"));
        }
        match (self.kind, self.epsilon) {
            (ExperimentKind::Decomposition, Some(e)) if !(e >= 0.0 && e.is_finite()) => {
                return Err(bad("epsilon", "epsilon must be finite and >= 0"))
            }
            (ExperimentKind::Decomposition, _) | (_, None) => {}
            _ => return Err(bad("epsilon", "epsilon only applies to decomposition")),
        }
        match (self.kind, self.l_max) {
            (ExperimentKind::SmallSet, Some(0)) => return Err(bad("l-max", "l-max must be at least 1")),
            (ExperimentKind::SmallSet, _) | (_, None) => {}
            _ => return Err(bad("l-max", "l-max only applies to small-set")),
        }
        if let Some(v) = &self.drift {
            if v.len() != self.environment.dim || v.iter().any(|x| !x.is_finite()) {
                return Err(bad("drift", "drift must have dim finite entries"));
            }
        }
        self.spec().map_err(|e| match e {
            Error::Config { .. } => e,
            other => bad("environment", &other.to_string()),
        })?;
        Ok(())
    }

    /// SHA-256 of the result-determining fields plus the crate version.
    pub fn identity_hash(&self) -> String {
        let id = Identity {
            version: env!("CARGO_PKG_VERSION"),
            kind: self.kind,
            n_grid: &self.n_grid,
            replicas: self.replicas,
            master_seed: self.master_seed,
            epsilon: self.epsilon,
            l_max: self.l_max,
            drift: self.drift.as_deref(),
            environment: &self.environment,
        };
        super::sha256_hex(toml::to_string(&id).expect("identity serializes").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DRIFT: &str = r#"
kind = "drift"
n-grid = [100, 1000]
replicas = 50
master-seed = 7
workers = 2
output-dir = "out"

[environment]
dim = 1
range = 1
model = "deterministic"
seed = 0

[environment.model-params]
kernel = { offsets = [[1], [-1]], probs = [0.7, 0.3] }
"#;

    #[test]
    fn round_trip_is_bit_identical() {
        let cfg = ExperimentConfig::from_toml(DRIFT).unwrap();
        let text = cfg.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn workers_do_not_change_identity() {
        let mut cfg = ExperimentConfig::from_toml(DRIFT).unwrap();
        let h = cfg.identity_hash();
        cfg.workers = 8;
        cfg.output_dir = "elsewhere".into();
        assert_eq!(cfg.identity_hash(), h);
        cfg.master_seed = 8;
        assert_ne!(cfg.identity_hash(), h);
    }

    #[test]
    fn errors_carry_line_and_field() {
        let text = DRIFT.replace("replicas = 50", "replicas = 50\nreplica = 3");
        match ExperimentConfig::from_toml(&text).unwrap_err() {
            Error::Config { line, field, .. } => {
                assert_eq!(line, Some(5));
                assert_eq!(field.as_deref(), Some("replica"));
            }
            e => panic!("{e}"),
        }
        let text = DRIFT.replace("[100, 1000]", "[1000, 100]");
        match ExperimentConfig::from_toml(&text).unwrap_err() {
            Error::Config { line, field, .. } => {
                assert_eq!(line, Some(3));
                assert_eq!(field.as_deref(), Some("n-grid"));
            }
            e => panic!("{e}"),
        }
        let text = DRIFT.replace("workers = 2", "workers = 2\nepsilon = 0.1");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
