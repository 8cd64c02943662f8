use rayon::prelude::*;

use crate::corrector::build_phase_chain;
use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::stats::mean_and_se;
use crate::walk::annealed_endpoint;

/// Annealed drift estimate `mean_r X_n^{(r)} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEstimate {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub replicas: usize,
    pub n: usize,
    /// Stationary average of the phase drifts, for finite-state models.
    pub exact: Option<Vec<f64>>,
}

impl DriftEstimate {
    /// Largest `|mean - exact| / std_error` over coordinates.
    pub fn z_score(&self) -> Option<f64> {
        let exact = self.exact.as_ref()?;
        Some(
            self.mean
                .iter()
                .zip(exact)
                .zip(&self.std_error)
                .map(|((m, e), s)| {
                    let diff = (m - e).abs();
                    if diff == 0.0 {
                        0.0
                    } else {
                        diff / s
                    }
                })
                .fold(0.0, f64::max),
        )
    }
}

/// Estimates `v` from `replicas` annealed endpoints at time `n`.
pub fn estimate_drift(
    spec: &EnvironmentSpec,
    replicas: usize,
    n: usize,
    master_seed: u64,
) -> Result<DriftEstimate> {
    if replicas < 2 || n == 0 {
        return Err(Error::usage("drift estimation needs at least 2 replicas and n >= 1"));
    }
    let endpoints = (0..replicas as u64)
        .into_par_iter()
        .map(|r| annealed_endpoint(spec, n, master_seed, r))
        .collect::<Result<Vec<_>>>()?;
    let d = spec.dim;
    let (mut mean, mut std_error) = (Vec::with_capacity(d), Vec::with_capacity(d));
    for c in 0..d {
        let xs: Vec<f64> = endpoints.iter().map(|x| x[c] as f64 / n as f64).collect();
        let (m, s) = mean_and_se(&xs);
        mean.push(m);
        std_error.push(s);
    }
    let exact = build_phase_chain::<f64>(spec)
        .ok()
        .and_then(|c| c.mean_drift().ok());
    Ok(DriftEstimate {
        mean,
        std_error,
        replicas,
        n,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::JumpKernel;

    #[test]
    fn srw_drift_is_zero() {
        let est = estimate_drift(&EnvironmentSpec::simple_random_walk(2), 400, 200, 1).unwrap();
        assert_eq!(est.exact, Some(vec![0.0, 0.0]));
        assert!(est.z_score().unwrap() <= 3.0);
    }

    #[test]
    fn deterministic_drift() {
        let spec =
            EnvironmentSpec::deterministic(JumpKernel::nearest_neighbour_1d(0.7).unwrap(), 1)
                .unwrap();
        let est = estimate_drift(&spec, 500, 500, 2).unwrap();
        assert!((est.exact.as_ref().unwrap()[0] - 0.4).abs() < 1e-15);
        assert!(est.z_score().unwrap() <= 3.0);
    }

    #[test]
    fn period_two_exact_drift() {
        let spec = EnvironmentSpec::periodic_1d(&[0.8, 0.4]).unwrap();
        let est = estimate_drift(&spec, 300, 400, 3).unwrap();
        assert!((est.exact.as_ref().unwrap()[0] - 0.2).abs() < 1e-15);
        assert!(est.z_score().unwrap() <= 3.0);
    }

    #[test]
    fn one_replica_is_rejected() {
        assert!(estimate_drift(&EnvironmentSpec::simple_random_walk(1), 1, 10, 0).is_err());
    }
}
