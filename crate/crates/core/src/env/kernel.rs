use crate::error::{Error, Result};

/// Tolerance on the total mass of a kernel.
pub const KERNEL_MASS_TOL: f64 = 1e-12;

/// A finite-range jump distribution on `Z^d`: probability `probs[i]` of the
/// displacement `offsets[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpKernel {
    dim: usize,
    offsets: Vec<i64>,
    probs: Vec<f64>,
}

impl JumpKernel {
    /// Builds a kernel, checking nonnegativity, unit mass and distinct offsets.
    pub fn new(dim: usize, offsets: Vec<Vec<i64>>, probs: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid_model("kernel dimension must be positive"));
        }
        if offsets.len() != probs.len() {
            return Err(Error::invalid_model(format!(
                "{} offsets but {} probabilities",
                offsets.len(),
                probs.len()
            )));
        }
        if let Some(z) = offsets.iter().find(|z| z.len() != dim) {
            return Err(Error::invalid_model(format!(
                "offset {z:?} has dimension {}, expected {dim}",
                z.len()
            )));
        }
        Self::from_flat(dim, offsets.concat(), probs)
    }

    pub(crate) fn from_flat(dim: usize, offsets: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid_model("kernel has no offsets"));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::invalid_model(format!("invalid probability {p}")));
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > KERNEL_MASS_TOL {
            return Err(Error::invalid_model(format!(
                "probabilities sum to {mass}, not 1"
            )));
        }
        let k = Self { dim, offsets, probs };
        for i in 0..k.len() {
            for j in 0..i {
                if k.offset(i) == k.offset(j) {
                    return Err(Error::invalid_model(format!(
                        "duplicate offset {:?}",
                        k.offset(i)
                    )));
                }
            }
        }
        Ok(k)
    }

    /// The kernel that steps by `z` with probability one.
    pub fn point_mass(z: Vec<i64>) -> Self {
        Self {
            dim: z.len(),
            offsets: z,
            probs: vec![1.0],
        }
    }

    /// Simple random walk: mass `1/(2d)` on each of `±e_i`.
    pub fn simple_random_walk(dim: usize) -> Self {
        let mut offsets = Vec::with_capacity(2 * dim * dim);
        for i in 0..dim {
            for s in [1, -1] {
                let mut z = vec![0; dim];
                z[i] = s;
                offsets.extend(z);
            }
        }
        Self {
            dim,
            offsets,
            probs: vec![1.0 / (2 * dim) as f64; 2 * dim],
        }
    }

    /// Nearest-neighbour kernel on `Z`: `+1` with probability `p`, `-1` otherwise.
    pub fn nearest_neighbour_1d(p: f64) -> Result<Self> {
        Self::new(1, vec![vec![1], vec![-1]], vec![p, 1.0 - p])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn offset(&self, i: usize) -> &[i64] {
        &self.offsets[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn offsets(&self) -> impl Iterator<Item = &[i64]> {
        self.offsets.chunks_exact(self.dim)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[i64], f64)> {
        self.offsets().zip(self.probs.iter().copied())
    }

    /// Probability of stepping by `z` (zero when `z` is not an offset).
    pub fn prob_of(&self, z: &[i64]) -> f64 {
        self.iter().find(|(o, _)| *o == z).map_or(0.0, |(_, p)| p)
    }

    /// Mean displacement `sum_z z p(z)`.
    pub fn drift(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for (z, p) in self.iter() {
            for (di, &zi) in d.iter_mut().zip(z) {
                *di += zi as f64 * p;
            }
        }
        d
    }

    /// Covariance of the displacement, row-major `d x d`.
    pub fn step_covariance(&self) -> Vec<f64> {
        let mean = self.drift();
        let d = self.dim;
        let mut c = vec![0.0; d * d];
        for (z, p) in self.iter() {
            for i in 0..d {
                let a = z[i] as f64 - mean[i];
                for j in 0..d {
                    c[i * d + j] += p * a * (z[j] as f64 - mean[j]);
                }
            }
        }
        c
    }

    /// Largest squared Euclidean norm among offsets carrying positive mass.
    pub fn max_norm_sq(&self) -> i64 {
        self.iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(z, _)| norm_sq(z))
            .max()
            .unwrap_or(0)
    }

    /// Checks `|z| <= range` for every offset.
    pub fn check_range(&self, range: u32) -> Result<()> {
        let r2 = i64::from(range) * i64::from(range);
        match self.offsets().find(|z| norm_sq(z) > r2) {
            Some(z) => Err(Error::invalid_model(format!(
                "offset {z:?} has norm {:.4} > range {range}",
                (norm_sq(z) as f64).sqrt()
            ))),
            None => Ok(()),
        }
    }

    /// Index of the offset selected by a uniform `u` in `[0, 1)`.
    #[inline]
    pub fn sample_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = i;
                if u < acc {
                    return i;
                }
            }
        }
        last
    }
}

#[inline]
pub(crate) fn norm_sq(z: &[i64]) -> i64 {
    z.iter().map(|&c| c * c).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_mass_and_duplicates() {
        assert!(JumpKernel::new(1, vec![vec![1], vec![-1]], vec![0.5, 0.4]).is_err());
        assert!(JumpKernel::new(1, vec![vec![1], vec![1]], vec![0.5, 0.5]).is_err());
        assert!(JumpKernel::new(1, vec![vec![1], vec![-1]], vec![1.2, -0.2]).is_err());
        assert!(JumpKernel::new(2, vec![vec![1]], vec![1.0]).is_err());
    }

    #[test]
    fn drift_and_covariance() {
        let k = JumpKernel::nearest_neighbour_1d(0.7).unwrap();
        assert!((k.drift()[0] - 0.4).abs() < 1e-15);
        assert!((k.step_covariance()[0] - 0.84).abs() < 1e-15);
        let srw = JumpKernel::simple_random_walk(2);
        assert_eq!(srw.drift(), vec![0.0, 0.0]);
        assert_eq!(srw.step_covariance(), vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn sampling_skips_zero_mass() {
        let k = JumpKernel::new(1, vec![vec![0], vec![1]], vec![0.0, 1.0]).unwrap();
        assert_eq!(k.sample_index(0.0), 1);
        assert_eq!(k.sample_index(0.999_999), 1);
    }

    #[test]
    fn range_check() {
        let k = JumpKernel::new(2, vec![vec![2, 2], vec![0, 0]], vec![0.5, 0.5]).unwrap();
        assert!(k.check_range(2).is_err());
        assert!(k.check_range(3).is_ok());
    }
}
