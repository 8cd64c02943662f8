//! Order-stable aggregation helpers.
//!
//! Replica results are always collected in replica-index order before any of
//! these run, so the reductions below see the same sequence regardless of the
//! worker count.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = CompensatedSum::default();
    xs.into_iter().for_each(|x| acc.add(x));
    acc.value()
}

/// Mean and standard error of the mean (sample standard deviation / sqrt(n)).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

/// Linear-interpolated quantile (type 7) of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty(), "quantile of empty sample");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Sample covariance of `d`-vectors (rows of `samples`) with the standard
/// error of every entry, estimated from the spread of the centered products.
pub fn covariance_with_se(samples: &[Vec<f64>], d: usize) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    assert!(n >= 2, "covariance needs at least two samples");
    let mean: Vec<f64> = (0..d)
        .map(|i| compensated_sum(samples.iter().map(|s| s[i])) / n as f64)
        .collect();
    let mut cov = vec![0.0; d * d];
    let mut se = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let prods: Vec<f64> = samples
                .iter()
                .map(|s| (s[i] - mean[i]) * (s[j] - mean[j]))
                .collect();
            let c = compensated_sum(prods.iter().copied()) / (n - 1) as f64;
            let m = compensated_sum(prods.iter().copied()) / n as f64;
            let spread = compensated_sum(prods.iter().map(|p| (p - m) * (p - m))) / (n - 1) as f64;
            let e = (spread / n as f64).sqrt();
            cov[i * d + j] = c;
            cov[j * d + i] = c;
            se[i * d + j] = e;
            se[j * d + i] = e;
        }
    }
    (cov, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn quantiles() {
        let xs = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(median(&xs), 2.5);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
    }

    #[test]
    fn mean_se_of_constant() {
        let (m, se) = mean_and_se(&[2.0; 10]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn covariance_matches_hand_computation() {
        let s = vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![5.0, 10.0]];
        let (c, _) = covariance_with_se(&s, 2);
        assert!((c[0] - 4.0).abs() < 1e-12);
        assert!((c[1] - 8.0).abs() < 1e-12);
        assert!((c[3] - 16.0).abs() < 1e-12);
    }
}
