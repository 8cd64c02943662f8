//! Quenched and annealed simulation of the walk, exact quenched means and the
//! martingale part `W_n = X_n - sum_{k<n} D(T_{X_k} omega)`.
//!
//! Walks always start at the origin of an [`EnvironmentView`]; a start at `z`
//! is expressed as a walk from the origin of `env.shift(z)`.

mod export;

use std::collections::BTreeMap;

pub use export::{read_binary, read_columnar, write_binary, write_columnar, BINARY_MAGIC};

use crate::env::{EnvironmentSpec, EnvironmentView};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Role, Stream};
use crate::stats::CompensatedSum;

/// A realized path `X_0 = 0, X_1, ..., X_n` with the seeds that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    positions: Vec<i64>,
    env_seed: u64,
    origin: Vec<i64>,
    walk_seed: u64,
}

impl Trajectory {
    /// Wraps externally produced positions (flat, `(n + 1) * dim` entries).
    pub fn from_positions(
        dim: usize,
        positions: Vec<i64>,
        env_seed: u64,
        walk_seed: u64,
    ) -> Result<Self> {
        if dim == 0 || positions.is_empty() || !positions.len().is_multiple_of(dim) {
            return Err(Error::usage("positions must hold (n + 1) * dim entries"));
        }
        if positions[..dim].iter().any(|&c| c != 0) {
            return Err(Error::usage("trajectories start at the origin"));
        }
        Ok(Self {
            dim,
            positions,
            env_seed,
            origin: vec![0; dim],
            walk_seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of steps `n`.
    pub fn steps(&self) -> usize {
        self.positions.len() / self.dim - 1
    }

    #[inline]
    pub fn position(&self, k: usize) -> &[i64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn positions_flat(&self) -> &[i64] {
        &self.positions
    }

    pub fn endpoint(&self) -> &[i64] {
        self.position(self.steps())
    }

    pub fn env_seed(&self) -> u64 {
        self.env_seed
    }

    pub fn walk_seed(&self) -> u64 {
        self.walk_seed
    }

    /// Origin of the environment view the walk ran in.
    pub fn origin(&self) -> &[i64] {
        &self.origin
    }

    /// The first `m` steps as a trajectory of its own.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m > self.steps() {
            return Err(Error::usage(format!(
                "prefix of {m} steps from a {}-step trajectory",
                self.steps()
            )));
        }
        Ok(Self {
            positions: self.positions[..(m + 1) * self.dim].to_vec(),
            origin: self.origin.clone(),
            ..*self
        })
    }
}

/// The environment of annealed replica `replica` under `master_seed`.
pub fn replica_environment(spec: &EnvironmentSpec, master_seed: u64, replica: u64) -> Result<EnvironmentView> {
    EnvironmentView::new(spec.with_seed(derive_seed(master_seed, replica, Role::Environment)))
}

/// Runs `n` steps of the quenched chain `P_0^omega` driven by `walk_seed`.
pub fn simulate_quenched(env: &EnvironmentView, n: usize, walk_seed: u64) -> Trajectory {
    let d = env.dim();
    let mut stream = Stream::new(walk_seed);
    let mut abs = env.origin().to_vec();
    let mut rel = vec![0i64; d];
    let mut positions = Vec::with_capacity((n + 1) * d);
    positions.extend_from_slice(&rel);
    for _ in 0..n {
        let kernel = env.kernel_at_absolute(&abs);
        let z = kernel.offset(kernel.sample_index(stream.next_f64()));
        for c in 0..d {
            abs[c] += z[c];
            rel[c] += z[c];
        }
        positions.extend_from_slice(&rel);
    }
    Trajectory {
        dim: d,
        positions,
        env_seed: env.seed(),
        origin: env.origin().to_vec(),
        walk_seed,
    }
}

/// Endpoint `X_n` of a quenched walk without storing the path.
pub fn quenched_endpoint(env: &EnvironmentView, n: usize, walk_seed: u64) -> Vec<i64> {
    let d = env.dim();
    let mut stream = Stream::new(walk_seed);
    let mut abs = env.origin().to_vec();
    for _ in 0..n {
        let kernel = env.kernel_at_absolute(&abs);
        let z = kernel.offset(kernel.sample_index(stream.next_f64()));
        for c in 0..d {
            abs[c] += z[c];
        }
    }
    abs.iter().zip(env.origin()).map(|(a, o)| a - o).collect()
}

/// One replica of the annealed law: a fresh environment (seeded from
/// `(master_seed, replica, environment)`) and a walk in it (seeded from
/// `(master_seed, replica, walk)`).
pub fn simulate_annealed(
    spec: &EnvironmentSpec,
    n: usize,
    master_seed: u64,
    replica: u64,
) -> Result<Trajectory> {
    let env = replica_environment(spec, master_seed, replica)?;
    Ok(simulate_quenched(&env, n, derive_seed(master_seed, replica, Role::Walk)))
}

/// Endpoint of [`simulate_annealed`] without storing the path.
pub fn annealed_endpoint(
    spec: &EnvironmentSpec,
    n: usize,
    master_seed: u64,
    replica: u64,
) -> Result<Vec<i64>> {
    let env = replica_environment(spec, master_seed, replica)?;
    Ok(quenched_endpoint(&env, n, derive_seed(master_seed, replica, Role::Walk)))
}

#[derive(Debug, Clone, Copy)]
pub struct QuenchedMeanOptions {
    /// Upper bound on the support box `(2 n M + 1)^d`.
    pub max_sites: u128,
    /// Masses below this are dropped after every step.
    pub prune_below: f64,
}

impl Default for QuenchedMeanOptions {
    fn default() -> Self {
        Self {
            max_sites: 10_000_000,
            prune_below: 1e-15,
        }
    }
}

/// `E_0^omega X_k` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedMean {
    dim: usize,
    means: Vec<f64>,
    /// Total mass removed by pruning.
    pub pruned_mass: f64,
}

impl QuenchedMean {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.means.len() / self.dim - 1
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.means[k * self.dim..(k + 1) * self.dim]
    }
}

/// Exact quenched mean by forward propagation of the law of `X_k` over a
/// sparse map of reachable sites.
pub fn quenched_mean(
    env: &EnvironmentView,
    n: usize,
    options: QuenchedMeanOptions,
) -> Result<QuenchedMean> {
    let d = env.dim();
    let side = 2 * n as u128 * u128::from(env.range()) + 1;
    let needed = (0..d).try_fold(1u128, |acc, _| acc.checked_mul(side));
    match needed {
        Some(s) if s <= options.max_sites => {}
        _ => {
            return Err(Error::Resource {
                what: format!("quenched mean support (2*{n}*{} + 1)^{d}", env.range()),
                needed: needed.unwrap_or(u128::MAX),
                budget: options.max_sites,
            })
        }
    }

    let origin = env.origin();
    let mut law: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    law.insert(vec![0; d], 1.0);
    let mut means = vec![0.0; (n + 1) * d];
    let mut pruned = CompensatedSum::default();
    let mut abs = vec![0i64; d];
    for k in 1..=n {
        let mut next: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (x, &mass) in &law {
            for c in 0..d {
                abs[c] = origin[c] + x[c];
            }
            let kernel = env.kernel_at_absolute(&abs);
            for (z, p) in kernel.iter() {
                if p == 0.0 {
                    continue;
                }
                let y: Vec<i64> = x.iter().zip(z).map(|(a, b)| a + b).collect();
                *next.entry(y).or_insert(0.0) += mass * p;
            }
        }
        next.retain(|_, m| {
            if *m < options.prune_below {
                pruned.add(*m);
                false
            } else {
                true
            }
        });
        for c in 0..d {
            let mut acc = CompensatedSum::default();
            for (x, &m) in &next {
                acc.add(x[c] as f64 * m);
            }
            means[k * d + c] = acc.value();
        }
        law = next;
    }
    Ok(QuenchedMean {
        dim: d,
        means,
        pruned_mass: pruned.value(),
    })
}

/// `W_0 = 0`, `W_k = W_{k-1} + (X_k - X_{k-1}) - D(T_{X_{k-1}} omega)`, flat
/// `(n + 1) * d`.
pub fn martingale_part(traj: &Trajectory, env: &EnvironmentView) -> Result<Vec<f64>> {
    let d = env.dim();
    if traj.dim() != d {
        return Err(Error::usage("trajectory and environment dimensions differ"));
    }
    let n = traj.steps();
    let mut w = vec![0.0; (n + 1) * d];
    let mut abs = vec![0i64; d];
    let mut z = vec![0i64; d];
    for k in 1..=n {
        let prev = traj.position(k - 1);
        let cur = traj.position(k);
        for c in 0..d {
            abs[c] = env.origin()[c] + prev[c];
            z[c] = cur[c] - prev[c];
        }
        let kernel = env.kernel_at_absolute(&abs);
        if kernel.prob_of(&z) <= 0.0 {
            return Err(Error::usage(format!(
                "step {k} ({z:?} from {prev:?}) is outside the kernel support; trajectory was not generated in this environment"
            )));
        }
        let drift = kernel.drift();
        for c in 0..d {
            w[k * d + c] = w[(k - 1) * d + c] + z[c] as f64 - drift[c];
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::JumpKernel;

    #[test]
    fn zero_steps() {
        let env = EnvironmentView::new(EnvironmentSpec::simple_random_walk(2)).unwrap();
        let t = simulate_quenched(&env, 0, 1);
        assert_eq!(t.steps(), 0);
        assert_eq!(t.position(0), &[0, 0]);
    }

    #[test]
    fn degenerate_kernel_walks_straight() {
        let spec = EnvironmentSpec::deterministic(JumpKernel::point_mass(vec![1, 0]), 1).unwrap();
        let env = EnvironmentView::new(spec).unwrap();
        let t = simulate_quenched(&env, 25, 9);
        for k in 0..=25 {
            assert_eq!(t.position(k), &[k as i64, 0]);
        }
        assert!(martingale_part(&t, &env).unwrap().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn annealed_replicas_are_reproducible() {
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
        let a = simulate_annealed(&spec, 500, 3, 17).unwrap();
        let b = simulate_annealed(&spec, 500, 3, 17).unwrap();
        let c = simulate_annealed(&spec, 500, 3, 18).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(annealed_endpoint(&spec, 500, 3, 17).unwrap(), a.endpoint());
    }

    #[test]
    fn quenched_mean_of_simple_models() {
        let env = EnvironmentView::new(EnvironmentSpec::simple_random_walk(2)).unwrap();
        let q = quenched_mean(&env, 30, QuenchedMeanOptions::default()).unwrap();
        assert!((0..=30).all(|k| q.at(k).iter().all(|m| m.abs() < 1e-12)));

        let spec = EnvironmentSpec::deterministic(JumpKernel::nearest_neighbour_1d(0.7).unwrap(), 1)
            .unwrap();
        let env = EnvironmentView::new(spec).unwrap();
        let q = quenched_mean(&env, 40, QuenchedMeanOptions::default()).unwrap();
        for k in 0..=40 {
            assert!((q.at(k)[0] - 0.4 * k as f64).abs() < 1e-10, "{k}");
        }
    }

    #[test]
    fn quenched_mean_budget() {
        let env = EnvironmentView::new(EnvironmentSpec::simple_random_walk(3)).unwrap();
        let opts = QuenchedMeanOptions {
            max_sites: 1000,
            ..Default::default()
        };
        assert!(matches!(quenched_mean(&env, 10, opts), Err(Error::Resource { .. })));
    }

    #[test]
    fn martingale_part_rejects_foreign_trajectory() {
        let straight = EnvironmentView::new(
            EnvironmentSpec::deterministic(JumpKernel::point_mass(vec![1]), 1).unwrap(),
        )
        .unwrap();
        let srw = EnvironmentView::new(EnvironmentSpec::simple_random_walk(1)).unwrap();
        let t = simulate_quenched(&srw, 50, 4);
        assert!(matches!(martingale_part(&t, &straight), Err(Error::Usage(_))));
        // balanced: W = X
        let w = martingale_part(&t, &srw).unwrap();
        for k in 0..=50 {
            assert_eq!(w[k], t.position(k)[0] as f64);
        }
    }

    #[test]
    fn shifted_start_uses_shifted_environment() {
        let env = EnvironmentView::new(EnvironmentSpec::periodic_1d(&[1.0, 0.0]).unwrap()).unwrap();
        // phase 0 always steps +1, phase 1 always steps -1: the walk oscillates.
        let t = simulate_quenched(&env, 4, 0);
        assert_eq!(t.positions_flat(), &[0, 1, 0, 1, 0]);
        let t = simulate_quenched(&env.shift(&[1]).unwrap(), 4, 0);
        assert_eq!(t.positions_flat(), &[0, -1, 0, -1, 0]);
        assert_eq!(t.origin(), &[1]);
    }
}
