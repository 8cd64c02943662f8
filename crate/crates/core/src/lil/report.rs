use rayon::prelude::*;
use serde::Serialize;

use super::path::{k_distance_upper, sup_distance};
use super::probe::Probe;
use super::xi::{build_xi, lil_scale, Centering};
use crate::corrector::{build_phase_chain, solve_limit};
use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::estimators::{conditional_covariance, CovarianceKind};
use crate::rng::{derive_seed, Role};
use crate::stats::median;
use crate::walk::{replica_environment, simulate_annealed};

/// One `(replica, n)` row of a [`StrassenReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrassenRow {
    pub replica: u64,
    pub n: usize,
    /// `|X_n - n v| / sqrt(2 n loglog n)`.
    pub statistic: f64,
    /// Running max of `statistic` over the grid up to `n`.
    pub running_max: f64,
    pub k_distance_upper: f64,
    /// `sup_t |xi_n(t) - f(t)|` for every probe.
    pub probe_distance: Vec<f64>,
    /// Minimum of `probe_distance` over the grid up to `n`.
    pub probe_running_min: Vec<f64>,
}

/// K-distances, probe distances and LIL statistics of rescaled annealed paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrassenReport {
    pub model_hash: String,
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    pub master_seed: u64,
    pub covariance: String,
    pub probes: Vec<String>,
    /// `(environment seed, walk seed)` per replica.
    pub seeds: Vec<(String, String)>,
    pub rows: Vec<StrassenRow>,
}

impl StrassenReport {
    fn at(&self, n: usize) -> impl Iterator<Item = &StrassenRow> {
        self.rows.iter().filter(move |r| r.n == n)
    }

    /// Replica median of `k_distance_upper` at grid point `n`.
    pub fn median_k_distance(&self, n: usize) -> f64 {
        median(&self.at(n).map(|r| r.k_distance_upper).collect::<Vec<_>>())
    }

    /// Per replica: the minimal distance to probe `probe` over the grid
    /// points `<= limit`, for every limit.
    pub fn probe_minima(&self, probe: usize, limits: &[usize]) -> Vec<Vec<f64>> {
        (0..self.replicas as u64)
            .map(|r| {
                limits
                    .iter()
                    .map(|&lim| {
                        self.rows
                            .iter()
                            .filter(|row| row.replica == r && row.n <= lim)
                            .map(|row| row.probe_distance[probe])
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect()
            })
            .collect()
    }

    /// Fraction of replicas whose probe minima are nonincreasing across `limits`.
    pub fn monotone_fraction(&self, probe: usize, limits: &[usize]) -> f64 {
        let minima = self.probe_minima(probe, limits);
        let ok = minima
            .iter()
            .filter(|m| m.windows(2).all(|w| w[1] <= w[0]))
            .count();
        ok as f64 / minima.len() as f64
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    /// Flat table, one row per `(replica, n)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replica,n,statistic,running_max,k_distance_upper");
        for p in &self.probes {
            out.push_str(&format!(",dist_{p},min_dist_{p}"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.12e},{:.12e},{:.12e}",
                r.replica, r.n, r.statistic, r.running_max, r.k_distance_upper
            ));
            for (d, m) in r.probe_distance.iter().zip(&r.probe_running_min) {
                out.push_str(&format!(",{d:.12e},{m:.12e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Simulates `replicas` annealed walks to `max(n_grid)` and evaluates every
/// grid prefix. The covariance track uses the corrector when the model has a
/// finite environment chain and the martingale part otherwise.
pub fn strassen_sweep(
    spec: &EnvironmentSpec,
    v: &[f64],
    n_grid: &[usize],
    replicas: usize,
    master_seed: u64,
    probes: &[Probe],
) -> Result<StrassenReport> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("n-grid must be positive and strictly increasing"));
    }
    if replicas == 0 || v.len() != spec.dim {
        return Err(Error::usage("need replicas >= 1 and a drift of dimension d"));
    }
    if probes.iter().any(|p| p.path.dim() != spec.dim) {
        return Err(Error::usage("probe dimension differs from the model"));
    }
    let corrector = match build_phase_chain::<f64>(spec) {
        Ok(chain) => {
            let sol = solve_limit(&chain, &chain.centered_drift(v)?)?;
            Some((chain, sol))
        }
        Err(Error::Unsupported { .. }) => None,
        Err(e) => return Err(e),
    };
    let n_max = *n_grid.last().expect("non-empty");
    let per_replica = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let env = replica_environment(spec, master_seed, r)?;
            let traj = simulate_annealed(spec, n_max, master_seed, r)?;
            let track = conditional_covariance(
                &traj,
                &env,
                corrector.as_ref().map(|(c, s)| (c, s)),
            )?;
            let mut rows = Vec::with_capacity(n_grid.len());
            let mut running = 0.0f64;
            let mut mins = vec![f64::INFINITY; probes.len()];
            for &n in n_grid {
                let xi = build_xi(&traj.prefix(n)?, &track.prefix(n)?, Centering::Annealed(v))?;
                let x = traj.position(n);
                let stat = x
                    .iter()
                    .zip(v)
                    .map(|(&c, vc)| (c as f64 - n as f64 * vc).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    / lil_scale(n);
                running = running.max(stat);
                let dists = probes
                    .iter()
                    .map(|p| sup_distance(xi.path(), &p.path))
                    .collect::<Result<Vec<f64>>>()?;
                for (m, d) in mins.iter_mut().zip(&dists) {
                    *m = m.min(*d);
                }
                rows.push(StrassenRow {
                    replica: r,
                    n,
                    statistic: stat,
                    running_max: running,
                    k_distance_upper: k_distance_upper(xi.path())?,
                    probe_distance: dists,
                    probe_running_min: mins.clone(),
                });
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let kind = if corrector.is_some() {
        CovarianceKind::Full
    } else {
        CovarianceKind::MartingalePart
    };
    Ok(StrassenReport {
        model_hash: spec.digest(),
        n_grid: n_grid.to_vec(),
        replicas,
        master_seed,
        covariance: kind.label().into(),
        probes: probes.iter().map(|p| p.name.clone()).collect(),
        seeds: (0..replicas as u64)
            .map(|r| {
                (
                    format!("{:#018x}", derive_seed(master_seed, r, Role::Environment)),
                    format!("{:#018x}", derive_seed(master_seed, r, Role::Walk)),
                )
            })
            .collect(),
        rows: per_replica.into_iter().flatten().collect(),
    })
}
