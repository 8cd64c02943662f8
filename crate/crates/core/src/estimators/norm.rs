use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Relative tolerance of the power iteration in [`matrix_norm`].
pub const MATRIX_NORM_TOL: f64 = 1e-10;

const MAX_ITERATIONS: usize = 100_000;

/// Operator norm `sup_{|u| = 1} |A u|` (largest singular value).
///
/// Power iteration on `A^t A` from every coordinate vector and the all-ones
/// vector, stopped when the eigen-residual `|B x - rho x|` falls below
/// `MATRIX_NORM_TOL * rho`; the largest Rayleigh quotient wins.
pub fn matrix_norm<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    if !a.is_finite() {
        return Err(Error::usage("matrix has non-finite entries"));
    }
    let scale = a.max_abs();
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let a = a.scale(T::one() / scale);
    let b = a.transpose().matmul(&a);
    let n = b.rows();
    let tol = T::of(MATRIX_NORM_TOL).max(T::epsilon() * T::of(16.0));
    let mut best = T::zero();
    let starts = (0..=n).map(|s| {
        if s < n {
            (0..n).map(|i| if i == s { T::one() } else { T::zero() }).collect::<Vec<T>>()
        } else {
            (0..n).map(|i| T::one() + T::of_usize(i) / T::of_usize(n)).collect()
        }
    });
    for mut x in starts {
        let mut rho = T::zero();
        for _ in 0..MAX_ITERATIONS {
            let norm = x.iter().map(|&c| c * c).sum::<T>().sqrt();
            if norm == T::zero() {
                break;
            }
            x.iter_mut().for_each(|c| *c /= norm);
            let y = b.mul_vec(&x);
            rho = x.iter().zip(&y).map(|(&p, &q)| p * q).sum();
            let resid = y
                .iter()
                .zip(&x)
                .map(|(&q, &p)| (q - rho * p) * (q - rho * p))
                .sum::<T>()
                .sqrt();
            x = y;
            if resid <= tol * rho.abs() {
                break;
            }
        }
        best = best.max(rho);
    }
    Ok(best.max(T::zero()).sqrt() * scale)
}
