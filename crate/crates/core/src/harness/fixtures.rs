//! Oracle models and random fixtures shared by the acceptance criteria and tests.

use crate::env::{EnvironmentSpec, JumpKernel, Model};
use crate::linalg::Matrix;
use crate::rng::Stream;

/// Period-2 chain in `d = 1` with `P(+1) = 0.8` on even and `0.4` on odd sites.
pub fn period_two() -> EnvironmentSpec {
    EnvironmentSpec::periodic_1d(&[0.8, 0.4]).expect("valid oracle")
}

/// Homogeneous `d = 1` walk with `P(+1) = 0.7`, `P(-1) = 0.3`.
pub fn deterministic_07() -> EnvironmentSpec {
    EnvironmentSpec::deterministic(JumpKernel::nearest_neighbour_1d(0.7).expect("valid"), 1)
        .expect("valid oracle")
}

pub fn srw(d: usize) -> EnvironmentSpec {
    EnvironmentSpec::simple_random_walk(d)
}

/// Period-2 chain whose even sites hold with probability 1/2, so the phase
/// chain is `[[1/2, 1/2], [1, 0]]`.
pub fn lazy_period_two() -> EnvironmentSpec {
    let even = JumpKernel::new(1, vec![vec![0], vec![1], vec![-1]], vec![0.5, 0.3, 0.2]).expect("valid");
    let odd = JumpKernel::nearest_neighbour_1d(0.4).expect("valid");
    EnvironmentSpec::new(
        1,
        1,
        Model::Periodic {
            period: vec![2],
            kernels: vec![even, odd],
        },
        0,
    )
    .expect("valid fixture")
}

/// Balanced `d = 1` model on offsets `-2..=2` with unit concentrations.
pub fn balanced_1d(seed: u64) -> EnvironmentSpec {
    EnvironmentSpec::new(
        1,
        2,
        Model::Balanced {
            offsets: (-2..=2).map(|z| vec![z]).collect(),
            concentration: vec![1.0; 5],
        },
        seed,
    )
    .expect("valid fixture")
}

/// Random irreducible row-stochastic matrix with `states` states: a cycle
/// `i -> i + 1` plus random positive entries with probability 0.6.
pub fn random_chain(key: u64, states: usize) -> Matrix<f64> {
    let mut s = Stream::new(key);
    let mut rows = Vec::with_capacity(states);
    for i in 0..states {
        let mut row: Vec<f64> = (0..states)
            .map(|_| if s.next_f64() < 0.6 { s.next_gamma(1.0) } else { 0.0 })
            .collect();
        row[(i + 1) % states] += s.next_gamma(1.0) + 1e-3;
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= total);
        rows.push(row);
    }
    Matrix::from_rows(&rows).expect("square")
}
