//! Structured-text (TOML) form of [`EnvironmentSpec`].
//!
//! Canonical key order is `dim, range, model, seed, model-params`; the
//! parameter table comes last because TOML requires plain keys before
//! sub-tables. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use super::{EnvironmentSpec, JumpKernel, Model};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Deterministic,
    Balanced,
    Periodic,
    IidDirichlet,
    IidFinite,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Deterministic => "deterministic",
            ModelKind::Balanced => "balanced",
            ModelKind::Periodic => "periodic",
            ModelKind::IidDirichlet => "iid-dirichlet",
            ModelKind::IidFinite => "iid-finite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub offsets: Vec<Vec<i64>>,
    pub probs: Vec<f64>,
}

/// Union of every model's parameters; [`EnvironmentConfig::to_spec`] checks
/// that exactly the fields the chosen model needs are present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels: Option<Vec<KernelConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub dim: usize,
    pub range: u32,
    pub model: ModelKind,
    #[serde(with = "crate::serde_seed")]
    pub seed: u64,
    #[serde(rename = "model-params")]
    pub model_params: ModelParams,
}

fn kernel_config(k: &JumpKernel) -> KernelConfig {
    KernelConfig {
        offsets: k.offsets().map(<[i64]>::to_vec).collect(),
        probs: k.probs().to_vec(),
    }
}

fn field_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        line: None,
        field: Some(field.to_string()),
        message: message.into(),
    }
}

fn require<T: Clone>(value: &Option<T>, field: &str, model: ModelKind) -> Result<T> {
    value.clone().ok_or_else(|| {
        field_error(
            &format!("model-params.{field}"),
            format!("required for model `{}`", model.as_str()),
        )
    })
}

impl EnvironmentConfig {
    pub fn from_spec(spec: &EnvironmentSpec) -> Self {
        let mut p = ModelParams::default();
        match &spec.model {
            Model::Deterministic { kernel } => p.kernel = Some(kernel_config(kernel)),
            Model::Balanced {
                offsets,
                concentration,
            }
            | Model::IidDirichlet {
                offsets,
                concentration,
            } => {
                p.offsets = Some(offsets.clone());
                p.concentration = Some(concentration.clone());
            }
            Model::Periodic { period, kernels } => {
                p.period = Some(period.clone());
                p.kernels = Some(kernels.iter().map(kernel_config).collect());
            }
            Model::IidFinite { kernels, weights } => {
                p.kernels = Some(kernels.iter().map(kernel_config).collect());
                p.weights = Some(weights.clone());
            }
        }
        Self {
            dim: spec.dim,
            range: spec.range,
            model: spec.model.kind(),
            seed: spec.seed,
            model_params: p,
        }
    }

    pub fn to_spec(&self) -> Result<EnvironmentSpec> {
        let p = &self.model_params;
        let kind = self.model;
        let allowed: &[&str] = match kind {
            ModelKind::Deterministic => &["kernel"],
            ModelKind::Balanced | ModelKind::IidDirichlet => &["offsets", "concentration"],
            ModelKind::Periodic => &["period", "kernels"],
            ModelKind::IidFinite => &["kernels", "weights"],
        };
        let present = [
            ("period", p.period.is_some()),
            ("offsets", p.offsets.is_some()),
            ("concentration", p.concentration.is_some()),
            ("weights", p.weights.is_some()),
            ("kernel", p.kernel.is_some()),
            ("kernels", p.kernels.is_some()),
        ];
        if let Some((name, _)) = present.iter().find(|(n, set)| *set && !allowed.contains(n)) {
            return Err(field_error(
                &format!("model-params.{name}"),
                format!("not a parameter of model `{}`", kind.as_str()),
            ));
        }
        let d = self.dim;
        let kernel = |k: &KernelConfig| JumpKernel::new(d, k.offsets.clone(), k.probs.clone());
        let model = match kind {
            ModelKind::Deterministic => Model::Deterministic {
                kernel: kernel(&require(&p.kernel, "kernel", kind)?)?,
            },
            ModelKind::Balanced => Model::Balanced {
                offsets: require(&p.offsets, "offsets", kind)?,
                concentration: require(&p.concentration, "concentration", kind)?,
            },
            ModelKind::IidDirichlet => Model::IidDirichlet {
                offsets: require(&p.offsets, "offsets", kind)?,
                concentration: require(&p.concentration, "concentration", kind)?,
            },
            ModelKind::Periodic => Model::Periodic {
                period: require(&p.period, "period", kind)?,
                kernels: require(&p.kernels, "kernels", kind)?
                    .iter()
                    .map(kernel)
                    .collect::<Result<_>>()?,
            },
            ModelKind::IidFinite => Model::IidFinite {
                kernels: require(&p.kernels, "kernels", kind)?
                    .iter()
                    .map(kernel)
                    .collect::<Result<_>>()?,
                weights: require(&p.weights, "weights", kind)?,
            },
        };
        EnvironmentSpec::new(self.dim, self.range, model, self.seed)
    }
}

impl EnvironmentSpec {
    /// Canonical TOML text; equal specs produce identical bytes.
    pub fn to_toml(&self) -> String {
        toml::to_string(&EnvironmentConfig::from_spec(self)).expect("environment serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: EnvironmentConfig = crate::harness::parse_toml(text)?;
        cfg.to_spec()
    }

    /// Hex SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        crate::harness::sha256_hex(self.to_toml().as_bytes())
    }
}
