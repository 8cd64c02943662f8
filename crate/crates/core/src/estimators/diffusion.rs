use rayon::prelude::*;

use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::stats::covariance_with_se;
use crate::walk::annealed_endpoint;

/// Empirical covariance of `(X_n - n v) / sqrt(n)` across annealed replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDiffusion {
    pub matrix: Matrix<f64>,
    /// Per-entry standard errors.
    pub std_error: Matrix<f64>,
    pub replicas: usize,
    pub n: usize,
}

impl EmpiricalDiffusion {
    /// Largest `|matrix - reference| / std_error` over entries.
    pub fn max_z_score(&self, reference: &Matrix<f64>) -> f64 {
        let d = self.matrix.rows();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let diff = (self.matrix[(i, j)] - reference[(i, j)]).abs();
                let z = if diff == 0.0 { 0.0 } else { diff / self.std_error[(i, j)] };
                worst = worst.max(z);
            }
        }
        worst
    }
}

/// Estimates the diffusion matrix from `replicas >= 100` annealed walks of `n` steps.
pub fn estimate_diffusion_empirical(
    spec: &EnvironmentSpec,
    replicas: usize,
    n: usize,
    v: &[f64],
    master_seed: u64,
) -> Result<EmpiricalDiffusion> {
    if replicas < 100 {
        return Err(Error::usage("empirical diffusion needs at least 100 replicas"));
    }
    let d = spec.dim;
    if v.len() != d || n == 0 {
        return Err(Error::usage("drift dimension mismatch or n = 0"));
    }
    let root = (n as f64).sqrt();
    let samples = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let x = annealed_endpoint(spec, n, master_seed, r)?;
            Ok((0..d)
                .map(|c| (x[c] as f64 - n as f64 * v[c]) / root)
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let (cov, se) = covariance_with_se(&samples, d);
    Ok(EmpiricalDiffusion {
        matrix: Matrix::from_row_major(d, d, cov)?,
        std_error: Matrix::from_row_major(d, d, se)?,
        replicas,
        n,
    })
}
