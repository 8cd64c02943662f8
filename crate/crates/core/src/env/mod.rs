//! Environment models on `Z^d`.
//!
//! An environment assigns a [`JumpKernel`] to every lattice site. Random
//! models never materialize the lattice: the kernel at site `x` is generated
//! on demand from a [`Stream`] keyed by `(seed, x)`, so two queries at the same
//! site agree bit for bit and the shift `T_z` is just an index translation.
//!
//! Dirichlet kernels are drawn by normalizing independent Gamma variates
//! from the site stream ([`Stream::next_gamma`]) in offset order. Balanced
//! kernels are Dirichlet kernels symmetrized as
//! `(q(z) + q(-z)) / 2`, which forces zero local drift.

mod config;
mod kernel;

use std::borrow::Cow;
use std::sync::Arc;

pub use config::{EnvironmentConfig, KernelConfig, ModelKind, ModelParams};
pub use kernel::{JumpKernel, KERNEL_MASS_TOL};
pub(crate) use kernel::norm_sq;

use crate::error::{Error, Result};
use crate::rng::{site_key, Stream};

/// The random (or deterministic) law that generates site kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// Every site carries the same kernel.
    Deterministic { kernel: JumpKernel },
    /// I.i.d. zero-drift kernels: a Dirichlet draw over `offsets`, symmetrized.
    Balanced {
        offsets: Vec<Vec<i64>>,
        concentration: Vec<f64>,
    },
    /// Site `x` uses `kernels[phase(x)]`, where `phase(x)` is the mixed-radix
    /// index of `x mod period` with the first coordinate varying fastest.
    Periodic {
        period: Vec<u64>,
        kernels: Vec<JumpKernel>,
    },
    /// I.i.d. Dirichlet kernels over a fixed offset set.
    IidDirichlet {
        offsets: Vec<Vec<i64>>,
        concentration: Vec<f64>,
    },
    /// I.i.d. choice among finitely many kernels with the given weights.
    IidFinite {
        kernels: Vec<JumpKernel>,
        weights: Vec<f64>,
    },
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Deterministic { .. } => ModelKind::Deterministic,
            Model::Balanced { .. } => ModelKind::Balanced,
            Model::Periodic { .. } => ModelKind::Periodic,
            Model::IidDirichlet { .. } => ModelKind::IidDirichlet,
            Model::IidFinite { .. } => ModelKind::IidFinite,
        }
    }

    /// Whether the kernel at a site depends on the environment seed.
    pub fn is_random(&self) -> bool {
        match self {
            Model::Deterministic { .. } | Model::Periodic { .. } => false,
            Model::IidFinite { kernels, weights } => {
                weights.iter().zip(kernels).filter(|(w, _)| **w > 0.0).count() > 1
            }
            Model::Balanced { .. } | Model::IidDirichlet { .. } => true,
        }
    }
}

/// A complete environment description: dimension, jump range `M`, model and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    pub dim: usize,
    pub range: u32,
    pub model: Model,
    pub seed: u64,
}

impl EnvironmentSpec {
    pub fn new(dim: usize, range: u32, model: Model, seed: u64) -> Result<Self> {
        let spec = Self {
            dim,
            range,
            model,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Homogeneous environment with a single kernel.
    pub fn deterministic(kernel: JumpKernel, range: u32) -> Result<Self> {
        Self::new(kernel.dim(), range, Model::Deterministic { kernel }, 0)
    }

    /// Simple random walk on `Z^d`.
    pub fn simple_random_walk(dim: usize) -> Self {
        Self::deterministic(JumpKernel::simple_random_walk(dim), 1).expect("valid SRW")
    }

    /// One-dimensional nearest-neighbour environment of period `probs.len()`
    /// where phase `j` steps `+1` with probability `probs[j]`.
    pub fn periodic_1d(probs: &[f64]) -> Result<Self> {
        let kernels = probs
            .iter()
            .map(|&p| JumpKernel::nearest_neighbour_1d(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            1,
            1,
            Model::Periodic {
                period: vec![probs.len() as u64],
                kernels,
            },
            0,
        )
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::invalid_model("dimension must be positive"));
        }
        if self.range == 0 {
            return Err(Error::invalid_model("range must be positive"));
        }
        let check_kernel = |k: &JumpKernel| -> Result<()> {
            if k.dim() != d {
                return Err(Error::invalid_model(format!(
                    "kernel dimension {} differs from environment dimension {d}",
                    k.dim()
                )));
            }
            k.check_range(self.range)
        };
        let check_offsets = |offsets: &[Vec<i64>], conc: &[f64]| -> Result<()> {
            if offsets.is_empty() {
                return Err(Error::invalid_model("offset set is empty"));
            }
            if offsets.len() != conc.len() {
                return Err(Error::invalid_model(format!(
                    "{} offsets but {} concentration parameters",
                    offsets.len(),
                    conc.len()
                )));
            }
            if let Some(a) = conc.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
                return Err(Error::invalid_model(format!(
                    "concentration {a} must be positive"
                )));
            }
            // Validate dimension, distinctness and range through a uniform kernel.
            let u = vec![1.0 / offsets.len() as f64; offsets.len()];
            let mass: f64 = u.iter().sum();
            let u: Vec<f64> = u.iter().map(|p| p / mass).collect();
            check_kernel(&JumpKernel::new(d, offsets.to_vec(), u)?)
        };
        match &self.model {
            Model::Deterministic { kernel } => check_kernel(kernel),
            Model::Periodic { period, kernels } => {
                if period.len() != d {
                    return Err(Error::invalid_model(format!(
                        "period has {} components, expected {d}",
                        period.len()
                    )));
                }
                if period.contains(&0) {
                    return Err(Error::invalid_model("period components must be >= 1"));
                }
                let cells = period
                    .iter()
                    .try_fold(1u64, |acc, &p| acc.checked_mul(p))
                    .ok_or_else(|| Error::invalid_model("period cell too large"))?;
                if kernels.len() as u64 != cells {
                    return Err(Error::invalid_model(format!(
                        "periodic model needs {cells} kernels, got {}",
                        kernels.len()
                    )));
                }
                kernels.iter().try_for_each(check_kernel)
            }
            Model::IidFinite { kernels, weights } => {
                if kernels.is_empty() || kernels.len() != weights.len() {
                    return Err(Error::invalid_model(
                        "iid-finite needs one weight per kernel and at least one kernel",
                    ));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::invalid_model("weights must be nonnegative"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > KERNEL_MASS_TOL {
                    return Err(Error::invalid_model(format!(
                        "weights sum to {total}, not 1"
                    )));
                }
                kernels.iter().try_for_each(check_kernel)
            }
            Model::IidDirichlet {
                offsets,
                concentration,
            } => check_offsets(offsets, concentration),
            Model::Balanced {
                offsets,
                concentration,
            } => {
                check_offsets(offsets, concentration)?;
                for z in offsets {
                    let neg: Vec<i64> = z.iter().map(|c| -c).collect();
                    if !offsets.contains(&neg) {
                        return Err(Error::invalid_model(format!(
                            "balanced offset set is not symmetric: {z:?} present, {neg:?} missing"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug)]
struct Inner {
    spec: EnvironmentSpec,
    /// Mixed-radix strides for periodic models.
    strides: Vec<u64>,
    /// Flat offsets for Dirichlet-type models.
    flat_offsets: Vec<i64>,
    /// Index of `-z` for each offset (balanced models).
    mirror: Vec<usize>,
    /// Cumulative weights (iid-finite).
    cumulative: Vec<f64>,
}

/// An environment `omega` seen from a given origin; `shift` translates the origin.
#[derive(Debug, Clone)]
pub struct EnvironmentView {
    inner: Arc<Inner>,
    origin: Vec<i64>,
}

impl PartialEq for EnvironmentView {
    fn eq(&self, other: &Self) -> bool {
        self.origin == other.origin && self.inner.spec == other.inner.spec
    }
}

impl EnvironmentView {
    /// Validates `spec` and builds the view rooted at the lattice origin.
    pub fn new(spec: EnvironmentSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self::new_unchecked(spec))
    }

    /// Builds a view without validating the spec. Kernel queries on an
    /// invalid spec may return kernels that break the finite-range
    /// assumption; [`EnvironmentView::assert_finite_range`] detects those.
    #[doc(hidden)]
    pub fn new_unchecked(spec: EnvironmentSpec) -> Self {
        let mut strides = Vec::new();
        let mut flat_offsets = Vec::new();
        let mut mirror = Vec::new();
        let mut cumulative = Vec::new();
        match &spec.model {
            Model::Periodic { period, .. } => {
                let mut s = 1u64;
                for &p in period {
                    strides.push(s);
                    s = s.saturating_mul(p);
                }
            }
            Model::IidDirichlet { offsets, .. } => flat_offsets = offsets.concat(),
            Model::Balanced { offsets, .. } => {
                flat_offsets = offsets.concat();
                mirror = offsets
                    .iter()
                    .map(|z| {
                        let neg: Vec<i64> = z.iter().map(|c| -c).collect();
                        offsets.iter().position(|o| *o == neg).unwrap_or(0)
                    })
                    .collect();
            }
            Model::IidFinite { weights, .. } => {
                let mut acc = 0.0;
                cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
            }
            Model::Deterministic { .. } => {}
        }
        let origin = vec![0; spec.dim];
        Self {
            inner: Arc::new(Inner {
                spec,
                strides,
                flat_offsets,
                mirror,
                cumulative,
            }),
            origin,
        }
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.inner.spec
    }

    pub fn dim(&self) -> usize {
        self.inner.spec.dim
    }

    pub fn range(&self) -> u32 {
        self.inner.spec.range
    }

    pub fn seed(&self) -> u64 {
        self.inner.spec.seed
    }

    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    fn check_dim(&self, x: &[i64], what: &str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::usage(format!(
                "{what} has dimension {}, environment has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// The kernel `pi_{x, x + .}(omega)` at site `x` relative to the view's origin.
    pub fn kernel_at(&self, x: &[i64]) -> Result<Cow<'_, JumpKernel>> {
        self.check_dim(x, "site")?;
        let abs: Vec<i64> = self.origin.iter().zip(x).map(|(o, c)| o + c).collect();
        Ok(self.kernel_at_absolute(&abs))
    }

    /// Kernel at an absolute lattice site (origin already applied).
    #[inline]
    pub(crate) fn kernel_at_absolute(&self, site: &[i64]) -> Cow<'_, JumpKernel> {
        let inner = &*self.inner;
        match &inner.spec.model {
            Model::Deterministic { kernel } => Cow::Borrowed(kernel),
            Model::Periodic { period, kernels } => {
                let idx = site
                    .iter()
                    .zip(period)
                    .zip(&inner.strides)
                    .map(|((&x, &p), &s)| x.rem_euclid(p as i64) as u64 * s)
                    .sum::<u64>();
                Cow::Borrowed(&kernels[idx as usize])
            }
            Model::IidFinite { kernels, .. } => {
                let mut stream = Stream::new(site_key(inner.spec.seed, site));
                let u = stream.next_f64();
                let idx = inner
                    .cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(kernels.len() - 1);
                Cow::Borrowed(&kernels[idx])
            }
            Model::IidDirichlet { concentration, .. } => {
                let probs = dirichlet(site_key(inner.spec.seed, site), concentration);
                Cow::Owned(JumpKernel::from_flat(inner.spec.dim, inner.flat_offsets.clone(), probs)
                    .expect("Dirichlet kernel is a probability vector"))
            }
            Model::Balanced { concentration, .. } => {
                let q = dirichlet(site_key(inner.spec.seed, site), concentration);
                let probs: Vec<f64> = (0..q.len())
                    .map(|i| 0.5 * (q[i] + q[inner.mirror[i]]))
                    .collect();
                Cow::Owned(JumpKernel::from_flat(inner.spec.dim, inner.flat_offsets.clone(), probs)
                    .expect("symmetrized kernel is a probability vector"))
            }
        }
    }

    /// The view of `T_z omega`: `kernel_at(shift(env, z), x) = kernel_at(env, x + z)`.
    pub fn shift(&self, z: &[i64]) -> Result<Self> {
        self.check_dim(z, "shift")?;
        Ok(Self {
            inner: Arc::clone(&self.inner),
            origin: self.origin.iter().zip(z).map(|(o, c)| o + c).collect(),
        })
    }

    /// Local drift `D(T_x omega) = sum_z z pi_{x, x+z}(omega)`.
    pub fn local_drift(&self, x: &[i64]) -> Result<Vec<f64>> {
        Ok(self.kernel_at(x)?.drift())
    }

    /// Confirms that every kernel at `sites` is supported in `{|z| <= M}`.
    pub fn assert_finite_range(&self, sites: &[Vec<i64>]) -> Result<RangeReport> {
        let range = self.range();
        let r2 = i64::from(range) * i64::from(range);
        let mut report = RangeReport {
            range,
            sites_checked: 0,
            max_norm: 0.0,
            violations: Vec::new(),
        };
        for x in sites {
            let k = self.kernel_at(x)?;
            report.sites_checked += 1;
            for (z, p) in k.iter() {
                if p <= 0.0 {
                    continue;
                }
                let n2 = norm_sq(z);
                report.max_norm = report.max_norm.max((n2 as f64).sqrt());
                if n2 > r2 {
                    report.violations.push(RangeViolation {
                        site: x.clone(),
                        offset: z.to_vec(),
                        norm: (n2 as f64).sqrt(),
                    });
                }
            }
        }
        Ok(report)
    }
}

/// Normalized Gamma draws from the stream keyed by `key`, in parameter order.
fn dirichlet(key: u64, concentration: &[f64]) -> Vec<f64> {
    let mut stream = Stream::new(key);
    let g: Vec<f64> = concentration.iter().map(|&a| stream.next_gamma(a)).collect();
    let total: f64 = g.iter().sum();
    if total > 0.0 && total.is_finite() {
        g.iter().map(|x| x / total).collect()
    } else {
        // Every draw underflowed: fall back to uniform.
        vec![1.0 / g.len() as f64; g.len()]
    }
}

/// Outcome of [`EnvironmentView::assert_finite_range`].
#[derive(Debug, Clone, PartialEq)]
pub struct RangeReport {
    pub range: u32,
    pub sites_checked: usize,
    /// Largest `|z|` with positive mass among checked kernels.
    pub max_norm: f64,
    pub violations: Vec<RangeViolation>,
}

impl RangeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeViolation {
    pub site: Vec<i64>,
    pub offset: Vec<i64>,
    pub norm: f64,
}
