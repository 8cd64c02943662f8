use crate::corrector::PhaseChain;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Outcome of checking `Pi^l(p, q) >= lambda mu(q)` on all phase pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallSetReport<T> {
    pub l: u32,
    pub lambda: T,
    pub mu: Vec<T>,
    /// Pairs `(p, q)` where the inequality fails.
    pub violations: Vec<(usize, usize)>,
    pub pairs_checked: usize,
}

impl<T: Scalar> SmallSetReport<T> {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Result of scanning `l = 1..=l_max` with uniform `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallSetSearch<T> {
    /// Largest feasible `lambda` for every `l`.
    pub lambda_by_l: Vec<(u32, T)>,
    /// Smallest `l` with positive `lambda`, verified; `None` is inconclusive.
    pub found: Option<SmallSetReport<T>>,
}

impl<T: Scalar> SmallSetSearch<T> {
    /// Largest `lambda` seen over all scanned `l`.
    pub fn max_lambda(&self) -> T {
        self.lambda_by_l
            .iter()
            .fold(T::zero(), |m, &(_, lam)| m.max(lam))
    }
}

fn check_mu<T: Scalar>(mu: &[T], states: usize) -> Result<()> {
    let total: T = mu.iter().copied().sum();
    if mu.len() != states || mu.iter().any(|&m| !(m >= T::zero())) || (total - T::one()).abs() > T::of(1e-12).max(T::epsilon() * T::of_usize(4 * states))
    {
        return Err(Error::usage("mu must be a probability vector over the phases"));
    }
    Ok(())
}

/// Verifies the minorization for given `(l, lambda, mu)`.
pub fn check_small_set<T: Scalar>(
    chain: &PhaseChain<T>,
    l: u32,
    lambda: T,
    mu: &[T],
) -> Result<SmallSetReport<T>> {
    let n = chain.states();
    if l == 0 {
        return Err(Error::usage("l must be at least 1"));
    }
    if !(lambda > T::zero() && lambda <= T::one()) {
        return Err(Error::usage("lambda must lie in (0, 1]"));
    }
    check_mu(mu, n)?;
    let power = chain.transition().pow(l);
    Ok(report(&power, l, lambda, mu))
}

fn report<T: Scalar>(power: &Matrix<T>, l: u32, lambda: T, mu: &[T]) -> SmallSetReport<T> {
    let n = power.rows();
    let slack = T::of(1e-12).max(T::epsilon() * T::of(64.0));
    let violations = (0..n)
        .flat_map(|p| (0..n).map(move |q| (p, q)))
        .filter(|&(p, q)| power[(p, q)] < lambda * mu[q] - slack)
        .collect();
    SmallSetReport {
        l,
        lambda,
        mu: mu.to_vec(),
        violations,
        pairs_checked: n * n,
    }
}

/// Scans `l = 1..=l_max` with uniform `mu`; the maximal `lambda` at `l` is
/// `min(1, N min_{p,q} Pi^l(p, q))`.
pub fn search_small_set<T: Scalar>(chain: &PhaseChain<T>, l_max: u32) -> Result<SmallSetSearch<T>> {
    if l_max == 0 {
        return Err(Error::usage("l_max must be at least 1"));
    }
    let n = chain.states();
    let mu = vec![T::one() / T::of_usize(n); n];
    let zero_tol = T::of(1e-12).max(T::epsilon() * T::of(64.0));
    let mut power = Matrix::identity(n);
    let mut lambda_by_l = Vec::new();
    let mut found = None;
    for l in 1..=l_max {
        power = power.matmul(chain.transition());
        let min = power.as_slice().iter().fold(T::infinity(), |m, &x| m.min(x));
        let lambda = (T::of_usize(n) * min).min(T::one()).max(T::zero());
        let lambda = if lambda <= zero_tol { T::zero() } else { lambda };
        lambda_by_l.push((l, lambda));
        if found.is_none() && lambda > T::zero() {
            found = Some(report(&power, l, lambda, &mu));
        }
    }
    Ok(SmallSetSearch { lambda_by_l, found })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(rows: &[Vec<f64>]) -> PhaseChain<f64> {
        PhaseChain::from_transition(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn one_state() {
        let s = search_small_set(&chain(&[vec![1.0]]), 3).unwrap();
        let f = s.found.unwrap();
        assert_eq!((f.l, f.lambda, f.mu.clone()), (1, 1.0, vec![1.0]));
        assert!(f.holds());
    }

    #[test]
    fn strict_alternation_has_no_uniform_minorization() {
        let s = search_small_set(&chain(&[vec![0.0, 1.0], vec![1.0, 0.0]]), 2).unwrap();
        assert!(s.found.is_none());
        assert_eq!(s.max_lambda(), 0.0);
        assert_eq!(s.lambda_by_l, vec![(1, 0.0), (2, 0.0)]);
    }

    #[test]
    fn lazy_alternation() {
        let c = chain(&[vec![0.5, 0.5], vec![1.0, 0.0]]);
        let f = search_small_set(&c, 4).unwrap().found.unwrap();
        assert_eq!(f.l, 2);
        assert!((f.lambda - 0.5).abs() < 1e-15);
        assert!(check_small_set(&c, f.l, f.lambda, &f.mu).unwrap().holds());
        let too_much = check_small_set(&c, 2, 0.6, &[0.5, 0.5]).unwrap();
        assert_eq!(too_much.violations, vec![(0, 1)]);
    }

    #[test]
    fn bad_arguments() {
        let c = chain(&[vec![1.0]]);
        assert!(check_small_set(&c, 0, 0.5, &[1.0]).is_err());
        assert!(check_small_set(&c, 1, 0.0, &[1.0]).is_err());
        assert!(check_small_set(&c, 1, 0.5, &[0.5]).is_err());
    }
}
