use super::chain::{tol, PhaseChain};
use super::resolvent::ResolventSolution;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Per-phase second moments `E_p[(z - D + H)(z - D + H)^t]` of the combined
/// martingale increment, with `H(p, q) = h(q) - Pi h(p)`.
pub fn phase_step_covariances<T: Scalar>(
    chain: &PhaseChain<T>,
    sol: &ResolventSolution<T>,
) -> Result<Vec<Matrix<T>>> {
    let lat = chain.require_lattice()?;
    let d = lat.dim();
    let h = sol.h();
    if h.phases() != chain.states() || h.coords() != d {
        return Err(Error::usage("corrector does not match the chain"));
    }
    let ph = chain.apply(h);
    let mut out = Vec::with_capacity(chain.states());
    let mut inc = vec![T::zero(); d];
    for p in 0..chain.states() {
        let kernel = lat.kernel(p);
        let mut cov = Matrix::zeros(d, d);
        for i in 0..kernel.len() {
            let q = kernel.next_phase(i);
            for c in 0..d {
                inc[c] = T::of_i64(kernel.offset(i)[c]) - kernel.drift()[c] + h.get(c, q)
                    - ph.get(c, p);
            }
            for a in 0..d {
                for b in 0..d {
                    cov[(a, b)] += kernel.prob(i) * inc[a] * inc[b];
                }
            }
        }
        out.push(cov);
    }
    Ok(out)
}

/// Exact diffusion matrix: stationary average of [`phase_step_covariances`]
/// for the limit corrector of `g = D - v`.
pub fn diffusion_matrix_exact<T: Scalar>(
    chain: &PhaseChain<T>,
    sol: &ResolventSolution<T>,
    v: &[T],
) -> Result<Matrix<T>> {
    if !sol.is_limit() {
        return Err(Error::Precondition(
            "diffusion matrix needs the limit corrector (epsilon = 0)".into(),
        ));
    }
    let g = chain.centered_drift(v)?;
    if g.max_abs_diff(sol.g()) > tol::<T>(1e-12) {
        return Err(Error::usage("corrector was not solved for g = D - v"));
    }
    let covs = phase_step_covariances(chain, sol)?;
    let d = v.len();
    let mut total = Matrix::zeros(d, d);
    for (cov, &w) in covs.iter().zip(chain.stationary()) {
        total = total.add(&cov.scale(w));
    }
    // exact symmetrization of rounding
    let t = total.transpose();
    Ok(total.add(&t).scale(T::of(0.5)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::{build_phase_chain, solve_limit};
    use crate::env::{EnvironmentSpec, JumpKernel};

    fn exact(spec: &EnvironmentSpec) -> Matrix<f64> {
        let chain = build_phase_chain::<f64>(spec).unwrap();
        let v = chain.mean_drift().unwrap();
        let sol = solve_limit(&chain, &chain.centered_drift(&v).unwrap()).unwrap();
        diffusion_matrix_exact(&chain, &sol, &v).unwrap()
    }

    #[test]
    fn srw_is_identity_over_d() {
        assert!((exact(&EnvironmentSpec::simple_random_walk(1))[(0, 0)] - 1.0).abs() < 1e-15);
        let m = exact(&EnvironmentSpec::simple_random_walk(2));
        assert!(m.sub(&Matrix::diagonal(&[0.5, 0.5])).max_abs() < 1e-15);
    }

    #[test]
    fn deterministic_bernoulli_variance() {
        let spec =
            EnvironmentSpec::deterministic(JumpKernel::nearest_neighbour_1d(0.7).unwrap(), 1)
                .unwrap();
        assert!((exact(&spec)[(0, 0)] - 0.84).abs() < 1e-14);
    }

    #[test]
    fn period_two_oracle() {
        let spec = EnvironmentSpec::periodic_1d(&[0.8, 0.4]).unwrap();
        let chain = build_phase_chain::<f64>(&spec).unwrap();
        let sol = solve_limit(&chain, &chain.centered_drift(&[0.2]).unwrap()).unwrap();
        // H(p, q) = h(q) - Pi h(p) vanishes because the next phase is determined
        let ph = chain.apply(sol.h());
        assert!((sol.h().get(0, 1) - ph.get(0, 0)).abs() < 1e-15);
        assert!((sol.h().get(0, 0) - ph.get(0, 1)).abs() < 1e-15);
        let m = diffusion_matrix_exact(&chain, &sol, &[0.2]).unwrap();
        assert!((m[(0, 0)] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn symmetric_periodic_model_averages_step_covariances() {
        // zero-drift phases: D = 0, v = 0, h = 0, so the matrix is the
        // stationary average of per-phase covariances
        let k0 = JumpKernel::new(
            2,
            vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1], vec![0, 0]],
            vec![0.3, 0.3, 0.1, 0.1, 0.2],
        )
        .unwrap();
        let k1 = JumpKernel::new(2, vec![vec![1, 1], vec![-1, -1]], vec![0.5, 0.5]).unwrap();
        let spec = EnvironmentSpec::new(
            2,
            2,
            crate::env::Model::Periodic {
                period: vec![2, 1],
                kernels: vec![k0.clone(), k1.clone()],
            },
            0,
        )
        .unwrap();
        let chain = build_phase_chain::<f64>(&spec).unwrap();
        let m = exact(&spec);
        let mut direct = Matrix::zeros(2, 2);
        for (k, &w) in [k0, k1].iter().zip(chain.stationary()) {
            let c = Matrix::from_row_major(2, 2, k.step_covariance()).unwrap();
            direct = direct.add(&c.scale(w));
        }
        assert!(m.sub(&direct).max_abs() < 1e-14);
        assert!(m.is_symmetric(0.0));
    }

    #[test]
    fn resolvent_solution_is_rejected() {
        let spec = EnvironmentSpec::periodic_1d(&[0.8, 0.4]).unwrap();
        let chain = build_phase_chain::<f64>(&spec).unwrap();
        let g = chain.centered_drift(&[0.2]).unwrap();
        let sol = crate::corrector::solve_resolvent(&chain, &g, 0.1).unwrap();
        assert!(matches!(
            diffusion_matrix_exact(&chain, &sol, &[0.2]),
            Err(Error::Precondition(_))
        ));
    }
}
