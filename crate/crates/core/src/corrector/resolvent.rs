use super::chain::{tol, PhaseChain, PhaseField};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Solution `h` of `(1 + eps) h - Pi h = g` (or of `(I - Pi) h = g` with
/// stationary mean zero when `eps = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution<T> {
    epsilon: T,
    g: PhaseField<T>,
    h: PhaseField<T>,
    residual: T,
}

impl<T: Scalar> ResolventSolution<T> {
    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn g(&self) -> &PhaseField<T> {
        &self.g
    }

    pub fn h(&self) -> &PhaseField<T> {
        &self.h
    }

    /// `max |(1 + eps) h - Pi h - g|`.
    pub fn residual(&self) -> T {
        self.residual
    }

    pub fn is_limit(&self) -> bool {
        self.epsilon == T::zero()
    }
}

fn check_shape<T: Scalar>(chain: &PhaseChain<T>, g: &PhaseField<T>) -> Result<()> {
    if g.phases() != chain.states() {
        return Err(Error::usage(format!(
            "g has {} phases, chain has {}",
            g.phases(),
            chain.states()
        )));
    }
    if !g.is_finite() {
        return Err(Error::usage("g has non-finite values"));
    }
    Ok(())
}

/// Max-norm of `(1 + eps) h - Pi h - g`.
pub fn resolvent_residual<T: Scalar>(
    chain: &PhaseChain<T>,
    g: &PhaseField<T>,
    h: &PhaseField<T>,
    epsilon: T,
) -> T {
    let ph = chain.apply(h);
    let mut worst = T::zero();
    for c in 0..g.coords() {
        for p in 0..g.phases() {
            let r = (T::one() + epsilon) * h.get(c, p) - ph.get(c, p) - g.get(c, p);
            worst = worst.max(r.abs());
        }
    }
    worst
}

fn solve_columns<T: Scalar>(a: &Matrix<T>, g: &PhaseField<T>) -> Result<PhaseField<T>> {
    let lu = a.lu().map_err(|e| {
        Error::Numerical(format!("resolvent system could not be factored ({e}); malformed chain?"))
    })?;
    let cols = (0..g.coords()).map(|c| lu.solve(g.column(c))).collect();
    PhaseField::from_columns(cols)
}

/// Solves `(1 + eps) h - Pi h = g` coordinatewise for `eps > 0`.
pub fn solve_resolvent<T: Scalar>(
    chain: &PhaseChain<T>,
    g: &PhaseField<T>,
    epsilon: T,
) -> Result<ResolventSolution<T>> {
    check_shape(chain, g)?;
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(Error::usage(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = chain.states();
    let a = Matrix::identity(n)
        .scale(T::one() + epsilon)
        .sub(chain.transition());
    let h = solve_columns(&a, g)?;
    let residual = resolvent_residual(chain, g, &h, epsilon);
    Ok(ResolventSolution {
        epsilon,
        g: g.clone(),
        h,
        residual,
    })
}

/// Solves `(I - Pi) h = g` with `pi . h = 0` for a stationary-mean-zero `g`,
/// through the nonsingular system `(I - Pi + 1 pi^t) h = g`.
pub fn solve_limit<T: Scalar>(
    chain: &PhaseChain<T>,
    g: &PhaseField<T>,
) -> Result<ResolventSolution<T>> {
    check_shape(chain, g)?;
    let means = chain.stationary_mean(g);
    if let Some(m) = means.iter().find(|m| m.abs() > tol::<T>(1e-10)) {
        return Err(Error::Precondition(format!(
            "g must have stationary mean zero (found {m})"
        )));
    }
    let n = chain.states();
    let pi = chain.stationary();
    let mut a = Matrix::identity(n).sub(chain.transition());
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += pi[j];
        }
    }
    let mut h = solve_columns(&a, g)?;
    let h_means = chain.stationary_mean(&h);
    for (c, &m) in h_means.iter().enumerate() {
        h.column_mut(c).iter_mut().for_each(|x| *x -= m);
    }
    let residual = resolvent_residual(chain, g, &h, T::zero());
    Ok(ResolventSolution {
        epsilon: T::zero(),
        g: g.clone(),
        h,
        residual,
    })
}

/// Partial sum `sum_{k=1}^{terms} (1 + eps)^{-k} Pi^{k-1} g`.
pub fn truncated_series<T: Scalar>(
    chain: &PhaseChain<T>,
    g: &PhaseField<T>,
    epsilon: T,
    terms: usize,
) -> PhaseField<T> {
    let mut acc = PhaseField::zeros(g.phases(), g.coords());
    let mut power = g.clone();
    let mut weight = T::one() / (T::one() + epsilon);
    for _ in 0..terms {
        for c in 0..g.coords() {
            let src = power.column(c).to_vec();
            acc.column_mut(c)
                .iter_mut()
                .zip(src)
                .for_each(|(a, x)| *a += weight * x);
        }
        power = chain.apply(&power);
        weight /= T::one() + epsilon;
    }
    acc
}

/// Bound on the series tail after `terms` terms: `(1 + eps)^{-terms} sup|g| / eps`.
pub fn series_tail_bound<T: Scalar>(epsilon: T, terms: usize, sup_g: T) -> T {
    (T::one() + epsilon).powi(-(terms as i32)) * sup_g / epsilon
}

/// `max |h_eps - h_0|` for each `eps`, validating the limit solve.
pub fn limit_convergence<T: Scalar>(
    chain: &PhaseChain<T>,
    g: &PhaseField<T>,
    epsilons: &[T],
) -> Result<Vec<(T, T)>> {
    let limit = solve_limit(chain, g)?;
    epsilons
        .iter()
        .map(|&e| {
            let s = solve_resolvent(chain, g, e)?;
            Ok((e, s.h().max_abs_diff(limit.h())))
        })
        .collect()
}
