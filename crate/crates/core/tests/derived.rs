//! Frozen reference values, each checked against an oracle computed here.

#![allow(clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use rwre::corrector::{
    build_phase_chain, corrector_series_mc, centered_drift_evaluator, decompose,
    diffusion_matrix_exact, solve_limit, solve_resolvent, PhaseChain,
};
use rwre::env::{EnvironmentSpec, EnvironmentView, JumpKernel, Model};
use rwre::estimators::{matrix_norm, search_small_set};
use rwre::harness::criteria::period_two_q95;
use rwre::harness::fixtures::{lazy_period_two, period_two};
use rwre::lil::{cm_energy, safe_loglog, standard_probes};
use rwre::linalg::Matrix;
use rwre::walk::{
    annealed_endpoint, martingale_part, quenched_mean, simulate_annealed, simulate_quenched,
    QuenchedMeanOptions,
};

const A: f64 = 0.8;
const B: f64 = 0.4;

fn p2() -> PhaseChain<f64> {
    build_phase_chain(&period_two()).unwrap()
}

/// `(I - P + 1 pi^T) h = g` solved by nalgebra, then centered.
fn nalgebra_limit(p: &[Vec<f64>], pi: &[f64], g: &[f64]) -> Vec<f64> {
    let n = p.len();
    let m = DMatrix::from_fn(n, n, |i, j| f64::from(i == j) - p[i][j] + pi[j]);
    let h = m.lu().solve(&DVector::from_column_slice(g)).unwrap();
    let mean: f64 = h.iter().zip(pi).map(|(x, q)| x * q).sum();
    h.iter().map(|x| x - mean).collect()
}

#[test]
fn srw_law_of_large_numbers() {
    let spec = EnvironmentSpec::simple_random_walk(1);
    let n = 1_000_000;
    let ok = (0..100u64)
        .filter(|&r| (annealed_endpoint(&spec, n, 123, r).unwrap()[0] as f64 / n as f64).abs() < 0.01)
        .count();
    assert!(ok >= 99, "{ok}/100");
}

#[test]
fn iid_first_step_mean_is_expected_drift() {
    let k1 = JumpKernel::nearest_neighbour_1d(0.9).unwrap();
    let k2 = JumpKernel::nearest_neighbour_1d(0.3).unwrap();
    let model = Model::IidFinite {
        kernels: vec![k1, k2],
        weights: vec![0.25, 0.75],
    };
    let spec = EnvironmentSpec::new(1, 1, model, 0).unwrap();
    // E[D] = 0.25 * 0.8 + 0.75 * (-0.4)
    let expected = -0.1;
    let reps = 100_000u64;
    let xs: Vec<f64> = (0..reps)
        .map(|r| annealed_endpoint(&spec, 1, 8, r).unwrap()[0] as f64)
        .collect();
    let m = xs.iter().sum::<f64>() / reps as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
    assert!((m - expected).abs() <= 3.0 * (var / reps as f64).sqrt(), "{m}");
}

#[test]
fn periodic_quenched_mean_matches_matrix_power() {
    let n = 50usize;
    let env = EnvironmentView::new(period_two()).unwrap();
    let q = quenched_mean(&env, n, QuenchedMeanOptions::default()).unwrap();
    let w = 2 * n + 1;
    let site = |i: usize| i as i64 - n as i64;
    let mut p = DMatrix::<f64>::zeros(w, w);
    for i in 1..w - 1 {
        let up = if site(i).rem_euclid(2) == 0 { A } else { B };
        p[(i, i + 1)] = up;
        p[(i, i - 1)] = 1.0 - up;
    }
    let mut law = DVector::<f64>::zeros(w);
    law[n] = 1.0;
    let pt = p.transpose();
    for k in 0..=n {
        let mean: f64 = (0..w).map(|i| site(i) as f64 * law[i]).sum();
        assert!((q.at(k)[0] - mean).abs() <= 1e-10, "k {k}");
        law = &pt * law;
    }
}

#[test]
fn martingale_increments_are_conditionally_centered() {
    let model = Model::IidDirichlet {
        offsets: vec![vec![-1], vec![0], vec![1], vec![2]],
        concentration: vec![1.0; 4],
    };
    let env = EnvironmentView::new(EnvironmentSpec::new(1, 2, model, 4).unwrap()).unwrap();
    let mut at_origin = Vec::new();
    let mut seed = 0;
    while at_origin.len() < 100_000 {
        let t = simulate_quenched(&env, 200, seed);
        let w = martingale_part(&t, &env).unwrap();
        for k in 0..200 {
            if t.position(k)[0] == 0 {
                at_origin.push(w[k + 1] - w[k]);
            }
        }
        seed += 1;
    }
    let n = at_origin.len() as f64;
    let m = at_origin.iter().sum::<f64>() / n;
    let var = at_origin.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(m.abs() <= 3.0 * (var / n).sqrt(), "{m}");
}

#[test]
fn period_two_chain_flips_phase() {
    let c = p2();
    assert_eq!(c.transition().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    assert!(c.stationary().iter().all(|&x| (x - 0.5).abs() < 1e-15));
}

#[test]
fn period_three_chain_is_circulant() {
    let p = 0.65;
    let c: PhaseChain<f64> = build_phase_chain(&EnvironmentSpec::periodic_1d(&[p; 3]).unwrap()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if j == (i + 1) % 3 {
                p
            } else if j == (i + 2) % 3 {
                1.0 - p
            } else {
                0.0
            };
            assert!((c.transition().row(i)[j] - want).abs() < 1e-15);
        }
    }
    assert!(c.stationary().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-14));
}

#[test]
fn period_two_corrector_matches_linear_solve() {
    let c = p2();
    let v = c.mean_drift().unwrap();
    assert!((v[0] - (A + B - 1.0)).abs() < 1e-15);
    let g = c.centered_drift(&v).unwrap();
    assert!((g.get(0, 0) - (A - B)).abs() < 1e-15 && (g.get(0, 1) - (B - A)).abs() < 1e-15);
    let h = solve_limit(&c, &g).unwrap();
    let oracle = nalgebra_limit(&c.transition().to_rows(), c.stationary(), g.column(0));
    for p in 0..2 {
        assert!((h.h().get(0, p) - oracle[p]).abs() <= 1e-12);
    }
    assert!((h.h().get(0, 0) - 0.2).abs() <= 1e-12 && (h.h().get(0, 1) + 0.2).abs() <= 1e-12);
    for eps in [0.5, 0.01] {
        let he = solve_resolvent(&c, &g, eps).unwrap();
        // (1+eps) h - P h = g with P the swap: h = +-0.4 / (2 + eps)
        assert!((he.h().get(0, 0) - 0.4 / (2.0 + eps)).abs() <= 1e-12);
    }
}

#[test]
fn resolvent_converges_to_limit() {
    let c = p2();
    let g = c.centered_drift(&[0.2]).unwrap();
    let h0 = solve_limit(&c, &g).unwrap();
    let he = solve_resolvent(&c, &g, 1e-6).unwrap();
    assert!(he.h().max_abs_diff(h0.h()) <= 1e-4);
}

#[test]
fn series_estimate_matches_exact_resolvent() {
    let eps = 0.1;
    let c = p2();
    let exact = solve_resolvent(&c, &c.centered_drift(&[0.2]).unwrap(), eps).unwrap();
    let env = EnvironmentView::new(period_two()).unwrap();
    let est = corrector_series_mc(&env, centered_drift_evaluator(0, 0.2), eps, 400, 2000, 0.4, 17).unwrap();
    let err = (est.estimate - exact.h().get(0, 0)).abs();
    assert!(err <= 3.0 * est.std_error + est.tail_bound + 1e-12, "{err}");
}

#[test]
fn decomposition_remainder_is_bounded() {
    let c = p2();
    let sol = solve_limit(&c, &c.centered_drift(&[0.2]).unwrap()).unwrap();
    for r in 0..10 {
        let t = simulate_annealed(&period_two(), 10_000, 31, r).unwrap();
        let d = decompose(&t, &c, &sol, &[0.2]).unwrap();
        assert!(d.identity_residual() <= 1e-9);
        assert!(d.max_remainder() <= 0.4 + 1e-12);
    }
}

#[test]
fn period_two_diffusion_is_phase_variance_average() {
    let c = p2();
    let sol = solve_limit(&c, &c.centered_drift(&[0.2]).unwrap()).unwrap();
    let d = diffusion_matrix_exact(&c, &sol, &[0.2]).unwrap();
    let oracle = 0.5 * (4.0 * A * (1.0 - A) + 4.0 * B * (1.0 - B));
    assert!((d.to_rows()[0][0] - oracle).abs() <= 1e-12);
    assert!((oracle - 0.8).abs() < 1e-12);
}

#[test]
fn nilpotent_norm_is_one() {
    let m = Matrix::from_rows(&[vec![0.0f64, 1.0], vec![0.0, 0.0]]).unwrap();
    assert!((matrix_norm(&m).unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn small_set_values() {
    let strict = search_small_set(&p2(), 2).unwrap();
    assert_eq!(strict.max_lambda(), 0.0);
    let lazy = build_phase_chain::<f64>(&lazy_period_two()).unwrap();
    let p = lazy.transition().to_rows();
    // explicit square of the lazy chain
    let sq: Vec<f64> = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| p[i][0] * p[0][j] + p[i][1] * p[1][j])
        .collect();
    assert!(sq.iter().all(|&x| x >= 0.25 - 1e-15));
    let found = search_small_set(&lazy, 4).unwrap().found.unwrap();
    assert_eq!(found.l, 2);
    assert!((found.lambda - 0.5).abs() < 1e-12);
}

#[test]
fn loglog_convention() {
    assert_eq!(safe_loglog(1.0f64).unwrap(), 1.0);
    assert_eq!(safe_loglog(std::f64::consts::E.exp()).unwrap(), 1.0);
    assert!(safe_loglog(1e6f64).unwrap() > 2.6);
    assert!(safe_loglog(0.0f64).is_err());
}

#[test]
fn standard_probes_have_unit_energy() {
    for d in 1..=4 {
        for p in standard_probes(d) {
            let e = cm_energy(&p.path).unwrap();
            assert!((e - 1.0).abs() <= 1e-12, "{} d={d}: {e}", p.name);
        }
    }
}

#[test]
fn period_two_per_n_statistic_quantile() {
    let q = period_two_q95(200).unwrap();
    assert!(q <= 1.3 * 0.8f64.sqrt(), "{q}");
}
