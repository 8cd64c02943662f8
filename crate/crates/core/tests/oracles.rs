//! Library results against independent implementations.

#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rwre::env::{EnvironmentSpec, EnvironmentView, Model};
use rwre::estimators::matrix_norm;
use rwre::linalg::Matrix;
use rwre::walk::{annealed_endpoint, quenched_mean, QuenchedMeanOptions};

fn dirichlet_1d(seed: u64) -> EnvironmentView {
    let model = Model::IidDirichlet {
        offsets: vec![vec![-2], vec![-1], vec![0], vec![1], vec![2]],
        concentration: vec![1.0; 5],
    };
    EnvironmentView::new(EnvironmentSpec::new(1, 2, model, seed).unwrap()).unwrap()
}

/// Dense transfer of the law of `X_k` over `[-2n, 2n]`, no pruning.
fn dense_quenched_mean(env: &EnvironmentView, n: usize) -> Vec<f64> {
    let r = 2 * n as i64;
    let width = (2 * r + 1) as usize;
    let mut law = vec![0.0; width];
    law[r as usize] = 1.0;
    let mut means = vec![0.0];
    for _ in 0..n {
        let mut next = vec![0.0; width];
        for (i, &m) in law.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let x = i as i64 - r;
            for (z, p) in env.kernel_at(&[x]).unwrap().iter() {
                next[(x + z[0] + r) as usize] += m * p;
            }
        }
        law = next;
        means.push(law.iter().enumerate().map(|(i, m)| (i as i64 - r) as f64 * m).sum());
    }
    means
}

#[test]
fn quenched_mean_matches_dense_transfer() {
    for seed in 0..5 {
        let env = dirichlet_1d(seed);
        let opts = QuenchedMeanOptions {
            prune_below: 0.0,
            ..Default::default()
        };
        let q = quenched_mean(&env, 50, opts).unwrap();
        let dense = dense_quenched_mean(&env, 50);
        for k in 0..=50 {
            assert!((q.at(k)[0] - dense[k]).abs() <= 1e-12, "seed {seed}, k {k}");
        }
    }
}

#[test]
fn matrix_norm_matches_svd() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let (r, c) = (rng.random_range(1..8), rng.random_range(1..8));
        let data: Vec<f64> = (0..r * c).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ours = matrix_norm(&Matrix::from_row_major(r, c, data.clone()).unwrap()).unwrap();
        let svd = DMatrix::from_row_slice(r, c, &data).singular_values().max();
        assert!((ours - svd).abs() <= 1e-9 * svd.max(1.0), "{ours} vs {svd}");
    }
}

#[test]
fn matrix_norm_of_rank_one_and_zero() {
    let a = Matrix::from_rows(&[vec![3.0f64, 4.0], vec![6.0, 8.0]]).unwrap();
    assert!((matrix_norm(&a).unwrap() - 125f64.sqrt()).abs() < 1e-12);
    assert_eq!(matrix_norm(&Matrix::<f64>::zeros(3, 2)).unwrap(), 0.0);
}

/// SRW `d = 1` endpoint moments: ours against an independent `rand` walk.
#[test]
fn srw_endpoint_agrees_with_rand_walk() {
    let (n, reps) = (400usize, 20_000u64);
    let spec = EnvironmentSpec::simple_random_walk(1);
    let ours: Vec<f64> = (0..reps)
        .map(|r| annealed_endpoint(&spec, n, 99, r).unwrap()[0] as f64)
        .collect();
    let mut rng = StdRng::seed_from_u64(5);
    let theirs: Vec<f64> = (0..reps)
        .map(|_| (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).sum())
        .collect();
    let moments = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let m2 = sq.iter().sum::<f64>() / xs.len() as f64;
        let var2 = sq.iter().map(|s| (s - m2).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        (m, m2, (var2 / xs.len() as f64).sqrt())
    };
    let (m_a, sq_a, se_a) = moments(&ours);
    let (m_b, sq_b, se_b) = moments(&theirs);
    let se_mean = (n as f64 / reps as f64).sqrt();
    assert!(m_a.abs() <= 4.0 * se_mean, "mean {m_a}");
    assert!(m_b.abs() <= 4.0 * se_mean, "oracle mean {m_b}");
    assert!((sq_a - n as f64).abs() <= 4.0 * se_a, "E X^2 {sq_a}");
    assert!((sq_a - sq_b).abs() <= 4.0 * (se_a * se_a + se_b * se_b).sqrt());
}

/// Law of `X_10` for SRW against exact binomial probabilities.
#[test]
fn srw_endpoint_law_is_binomial() {
    let (n, reps) = (10usize, 100_000u64);
    let spec = EnvironmentSpec::simple_random_walk(1);
    let mut counts = vec![0u64; n + 1];
    for r in 0..reps {
        let x = annealed_endpoint(&spec, n, 3, r).unwrap()[0];
        counts[((x + n as i64) / 2) as usize] += 1;
    }
    let binom = |k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) / 2f64.powi(n as i32);
    let chi2: f64 = (0..=n)
        .map(|k| {
            let e = binom(k) * reps as f64;
            (counts[k] as f64 - e).powi(2) / e
        })
        .sum();
    // 10 degrees of freedom: P(chi2 > 29.6) = 0.001
    assert!(chi2 < 29.6, "chi2 {chi2}");
}
