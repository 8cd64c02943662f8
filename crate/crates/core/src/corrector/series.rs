use rayon::prelude::*;

use super::resolvent::series_tail_bound;
use crate::env::EnvironmentView;
use crate::error::{Error, Result};
use crate::rng::{hash_words, Stream};
use crate::stats::mean_and_se;

/// Monte-Carlo estimate of the truncated resolvent series at the origin of
/// an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Deterministic bound on the omitted terms `k > terms`.
    pub tail_bound: f64,
    pub terms: usize,
    pub samples: usize,
}

/// Estimates `h_eps(omega) = sum_{k=1}^{terms} (1 + eps)^{-k} E[g(T_{X_{k-1}} omega)]`
/// by running `samples` independent walks of `terms - 1` steps from the
/// origin of `env`.
///
/// `g(env, x)` evaluates the scalar source at `T_x omega`, and `sup_g` bounds
/// `|g|` for the tail bound. Works for every model, including infinite-state ones.
pub fn corrector_series_mc<G>(
    env: &EnvironmentView,
    g: G,
    epsilon: f64,
    terms: usize,
    samples: usize,
    sup_g: f64,
    seed: u64,
) -> Result<SeriesEstimate>
where
    G: Fn(&EnvironmentView, &[i64]) -> f64 + Sync,
{
    if samples == 0 || terms == 0 {
        return Err(Error::usage("series estimator needs a positive sample budget and term count"));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::usage(format!("epsilon must be positive, got {epsilon}")));
    }
    let d = env.dim();
    let decay = 1.0 / (1.0 + epsilon);
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let mut stream = Stream::new(hash_words(seed, [s]));
            let mut x = vec![0i64; d];
            let mut abs = env.origin().to_vec();
            let mut weight = decay;
            let mut acc = 0.0;
            for k in 0..terms {
                acc += weight * g(env, &x);
                if k + 1 == terms {
                    break;
                }
                weight *= decay;
                let kernel = env.kernel_at_absolute(&abs);
                let z = kernel.offset(kernel.sample_index(stream.next_f64()));
                for c in 0..d {
                    x[c] += z[c];
                    abs[c] += z[c];
                }
            }
            acc
        })
        .collect();
    let (estimate, std_error) = mean_and_se(&values);
    Ok(SeriesEstimate {
        estimate,
        std_error: if samples > 1 { std_error } else { f64::NAN },
        tail_bound: series_tail_bound(epsilon, terms, sup_g),
        terms,
        samples,
    })
}

/// Evaluator for coordinate `coord` of the centered drift `D - v`.
pub fn centered_drift_evaluator(
    coord: usize,
    v: f64,
) -> impl Fn(&EnvironmentView, &[i64]) -> f64 + Sync {
    move |env: &EnvironmentView, x: &[i64]| {
        env.kernel_at(x).map(|k| k.drift()[coord]).unwrap_or(f64::NAN) - v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::{build_phase_chain, solve_resolvent};
    use crate::env::{EnvironmentSpec, JumpKernel};

    #[test]
    fn zero_source() {
        let env = EnvironmentView::new(EnvironmentSpec::simple_random_walk(2)).unwrap();
        let est = corrector_series_mc(&env, |_, _| 0.0, 0.1, 50, 64, 0.0, 1).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn zero_budget_is_usage_error() {
        let env = EnvironmentView::new(EnvironmentSpec::simple_random_walk(1)).unwrap();
        assert!(matches!(
            corrector_series_mc(&env, |_, _| 1.0, 0.1, 10, 0, 1.0, 1),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn constant_source_is_geometric_sum() {
        let spec =
            EnvironmentSpec::deterministic(JumpKernel::nearest_neighbour_1d(0.7).unwrap(), 1)
                .unwrap();
        let env = EnvironmentView::new(spec).unwrap();
        let (eps, k) = (0.1, 200);
        let est = corrector_series_mc(&env, |_, _| 2.0, eps, k, 16, 2.0, 3).unwrap();
        let closed: f64 = (1..=k).map(|j| 2.0 * (1.0 + eps).powi(-(j as i32))).sum();
        assert!((est.estimate - closed).abs() < 1e-12);
        assert!((est.estimate - 2.0 / eps).abs() <= est.tail_bound + 1e-12);
    }

    #[test]
    fn period_two_matches_exact_solver() {
        let spec = EnvironmentSpec::periodic_1d(&[0.8, 0.4]).unwrap();
        let chain = build_phase_chain::<f64>(&spec).unwrap();
        let g = chain.centered_drift(&[0.2]).unwrap();
        let eps = 0.05;
        let exact = solve_resolvent(&chain, &g, eps).unwrap();
        let env = EnvironmentView::new(spec).unwrap();
        for start in [0i64, 1] {
            let shifted = env.shift(&[start]).unwrap();
            let est = corrector_series_mc(
                &shifted,
                centered_drift_evaluator(0, 0.2),
                eps,
                600,
                4000,
                0.4,
                11,
            )
            .unwrap();
            let target = exact.h().get(0, start as usize);
            assert!(est.tail_bound < 1e-10);
            assert!((est.estimate - target).abs() <= 3.0 * est.std_error + est.tail_bound + 1e-12);
        }
    }
}
