use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of uniform points added to the merged breakpoint grid by [`sup_distance`].
pub const UNIFORM_GUARD_POINTS: usize = 1000;

/// Knot counts of the coarse interpolants tried by [`k_distance_upper`].
const COARSE_KNOTS: [usize; 12] = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64];

/// A continuous-time piecewise-linear map `[t_0, t_last] -> R^d`.
///
/// Equal consecutive times are allowed and represent a jump; the value at a
/// jump time is the right limit.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<T> {
    dim: usize,
    times: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> PiecewiseLinear<T> {
    /// `values` is flat, `times.len() * dim` entries.
    pub fn new(dim: usize, times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if dim == 0 || times.is_empty() || values.len() != times.len() * dim {
            return Err(Error::MalformedPath("need one d-vector per breakpoint".into()));
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::MalformedPath("non-finite breakpoint data".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::MalformedPath("breakpoint times must be nondecreasing".into()));
        }
        Ok(Self { dim, times, values })
    }

    /// `t -> t u` on `[0, 1]`.
    pub fn linear(u: &[T]) -> Self {
        let mut values = vec![T::zero(); u.len()];
        values.extend_from_slice(u);
        Self {
            dim: u.len(),
            times: vec![T::zero(), T::one()],
            values,
        }
    }

    /// The zero path on `[0, 1]`.
    pub fn zero(dim: usize) -> Self {
        Self::linear(&vec![T::zero(); dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn value(&self, i: usize) -> &[T] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            times: self.times.clone(),
            values: self.values.iter().map(|&x| x * c).collect(),
        }
    }

    fn interpolate(&self, i: usize, t: T, out: &mut [T]) {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { T::one() };
        let (a, b) = (self.value(i), self.value(i + 1));
        for c in 0..self.dim {
            out[c] = a[c] + w * (b[c] - a[c]);
        }
    }

    /// Right-continuous evaluation, constant outside the time range.
    pub fn eval_into(&self, t: T, out: &mut [T]) {
        let last = self.len() - 1;
        // first index with time > t
        let j = self.times.partition_point(|&s| s <= t);
        if j == 0 {
            out.copy_from_slice(self.value(0));
        } else if j > last {
            out.copy_from_slice(self.value(last));
        } else {
            self.interpolate(j - 1, t, out);
        }
    }

    /// Left limit at `t`, constant outside the time range.
    pub fn eval_left_into(&self, t: T, out: &mut [T]) {
        let last = self.len() - 1;
        // first index with time >= t
        let j = self.times.partition_point(|&s| s < t);
        if j == 0 {
            out.copy_from_slice(self.value(0));
        } else if j > last {
            out.copy_from_slice(self.value(last));
        } else {
            self.interpolate(j - 1, t, out);
        }
    }

    pub fn eval(&self, t: T) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        self.eval_into(t, &mut out);
        out
    }

    /// `max_i |f(t_i)|`, the exact sup norm of a piecewise-linear map.
    pub fn sup_norm(&self) -> T {
        (0..self.len())
            .map(|i| norm(self.value(i)))
            .fold(T::zero(), T::max)
    }
}

pub(crate) fn norm<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|&c| c * c).sum::<T>().sqrt()
}

fn dist_sq<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Cameron-Martin energy `sum_k |f(t_{k+1}) - f(t_k)|^2 / (t_{k+1} - t_k)`.
///
/// Zero-length segments without a jump are skipped; with a jump, or with
/// `f(t_0) != 0`, the energy is infinite and a `MalformedPath` error is returned.
pub fn cm_energy<T: Scalar>(path: &PiecewiseLinear<T>) -> Result<T> {
    if path.value(0).iter().any(|&c| c != T::zero()) {
        return Err(Error::MalformedPath("path does not start at 0".into()));
    }
    let mut energy = T::zero();
    for k in 0..path.len() - 1 {
        let dt = path.times[k + 1] - path.times[k];
        let jump = dist_sq(path.value(k + 1), path.value(k));
        if dt > T::zero() {
            energy += jump / dt;
        } else if jump > T::zero() {
            return Err(Error::MalformedPath(format!(
                "zero-length segment at t = {} with a jump",
                path.times[k]
            )));
        }
    }
    Ok(energy)
}

/// Distance bound from the radial point `f / sqrt(E)`: `|f|_inf (1 - 1/sqrt(E))`,
/// or 0 when `E <= 1`.
pub fn radial_distance_upper<T: Scalar>(path: &PiecewiseLinear<T>) -> Result<T> {
    let e = cm_energy(path)?;
    if e <= T::one() {
        return Ok(T::zero());
    }
    Ok(path.sup_norm() * (T::one() - T::one() / e.sqrt()))
}

/// Upper bound on `inf_{g in K} sup_t |f(t) - g(t)|`.
///
/// Zero when `E(f) <= 1`. Otherwise the minimum of the radial bound and of
/// `sup |f - lambda g|` over coarse interpolants `g` of `f` (knots at the
/// breakpoints nearest to `j / m`), with `lambda = min(1, E(g)^{-1/2})` so
/// that every candidate lies in `K`.
pub fn k_distance_upper<T: Scalar>(path: &PiecewiseLinear<T>) -> Result<T> {
    let e = cm_energy(path)?;
    if e <= T::one() {
        return Ok(T::zero());
    }
    let mut best = path.sup_norm() * (T::one() - T::one() / e.sqrt());
    let (t0, t1) = (path.times[0], path.times[path.len() - 1]);
    if t1 <= t0 {
        return Ok(best);
    }
    for m in COARSE_KNOTS {
        let mut knots: Vec<usize> = (0..=m)
            .map(|j| {
                let target = t0 + (t1 - t0) * T::of_usize(j) / T::of_usize(m);
                nearest_index(&path.times, target)
            })
            .collect();
        knots[0] = 0;
        knots[m] = path.len() - 1;
        knots.dedup();
        // distinct knots at one time (a jump of f) give infinite energy
        let coarse_times: Vec<T> = knots.iter().map(|&i| path.times[i]).collect();
        if coarse_times.windows(2).any(|w| w[1] <= w[0]) {
            continue;
        }
        let mut coarse_values = Vec::with_capacity(knots.len() * path.dim);
        for &i in &knots {
            coarse_values.extend_from_slice(path.value(i));
        }
        let g = PiecewiseLinear {
            dim: path.dim,
            times: coarse_times,
            values: coarse_values,
        };
        let eg = cm_energy(&g)?;
        let lambda = if eg > T::one() { T::one() / eg.sqrt() } else { T::one() };
        // knots are breakpoints of f, so f - lambda g is linear between f's breakpoints
        let mut gv = vec![T::zero(); path.dim];
        let mut worst = T::zero();
        let mut seg = 0;
        for i in 0..path.len() {
            while seg + 1 < knots.len() - 1 && knots[seg + 1] <= i {
                seg += 1;
            }
            g.interpolate(seg, path.times[i], &mut gv);
            let d: T = path
                .value(i)
                .iter()
                .zip(&gv)
                .map(|(&a, &b)| (a - lambda * b) * (a - lambda * b))
                .sum();
            worst = worst.max(d);
            if worst.sqrt() >= best {
                break;
            }
        }
        best = best.min(worst.sqrt());
    }
    Ok(best)
}

fn nearest_index<T: Scalar>(times: &[T], t: T) -> usize {
    let j = times.partition_point(|&s| s < t);
    if j == 0 {
        0
    } else if j == times.len() {
        times.len() - 1
    } else if (times[j] - t) < (t - times[j - 1]) {
        j
    } else {
        j - 1
    }
}

/// `sup_t |f(t) - g(t)|` over the merged breakpoints of both paths plus
/// [`UNIFORM_GUARD_POINTS`] uniform points of the common time range; both
/// one-sided limits are compared at every grid time.
pub fn sup_distance<T: Scalar>(f: &PiecewiseLinear<T>, g: &PiecewiseLinear<T>) -> Result<T> {
    if f.dim != g.dim {
        return Err(Error::usage("paths have different dimensions"));
    }
    let lo = f.times[0].min(g.times[0]);
    let hi = f.times[f.len() - 1].max(g.times[g.len() - 1]);
    let mut grid: Vec<T> = Vec::with_capacity(f.len() + g.len() + UNIFORM_GUARD_POINTS + 1);
    grid.extend_from_slice(&f.times);
    grid.extend_from_slice(&g.times);
    grid.extend((0..=UNIFORM_GUARD_POINTS).map(|i| {
        lo + (hi - lo) * T::of_usize(i) / T::of_usize(UNIFORM_GUARD_POINTS)
    }));
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    grid.dedup();
    let (mut a, mut b) = (vec![T::zero(); f.dim], vec![T::zero(); f.dim]);
    let mut worst = T::zero();
    for &t in &grid {
        f.eval_into(t, &mut a);
        g.eval_into(t, &mut b);
        worst = worst.max(dist_sq(&a, &b));
        f.eval_left_into(t, &mut a);
        g.eval_left_into(t, &mut b);
        worst = worst.max(dist_sq(&a, &b));
    }
    Ok(worst.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize) -> Vec<f64> {
        vec![1.0 / (d as f64).sqrt(); d]
    }

    #[test]
    fn energies() {
        assert_eq!(cm_energy(&PiecewiseLinear::linear(&[1.0])).unwrap(), 1.0);
        for d in 1..5 {
            let e = cm_energy(&PiecewiseLinear::linear(&unit(d))).unwrap();
            assert!((e - 1.0).abs() < 1e-15);
        }
        assert_eq!(cm_energy(&PiecewiseLinear::linear(&[2.0])).unwrap(), 4.0);
    }

    #[test]
    fn jump_is_malformed() {
        let p = PiecewiseLinear::new(1, vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 0.1, 0.3, 0.3]).unwrap();
        assert!(matches!(cm_energy(&p), Err(Error::MalformedPath(_))));
        let flat = PiecewiseLinear::new(1, vec![0.0f64, 0.5, 0.5, 1.0], vec![0.0, 0.1, 0.1, 0.3]).unwrap();
        assert!((cm_energy(&flat).unwrap() - (0.02 + 0.08)).abs() < 1e-15);
    }

    #[test]
    fn distance_bounds() {
        assert_eq!(k_distance_upper(&PiecewiseLinear::linear(&[0.6, 0.8])).unwrap(), 0.0);
        assert_eq!(k_distance_upper(&PiecewiseLinear::<f64>::zero(2)).unwrap(), 0.0);
        assert_eq!(radial_distance_upper(&PiecewiseLinear::linear(&[2.0])).unwrap(), 1.0);
        // for a straight line the coarse candidates coincide with the radial one
        assert!((k_distance_upper(&PiecewiseLinear::linear(&[2.0f64])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coarse_candidate_beats_radial_on_wiggles() {
        let n = 400;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let values: Vec<f64> = (0..=n)
            .map(|i| 0.5 * i as f64 / n as f64 + if i % 2 == 1 { 0.01 } else { 0.0 })
            .collect();
        let p = PiecewiseLinear::new(1, times, values).unwrap();
        let radial = radial_distance_upper(&p).unwrap();
        let refined = k_distance_upper(&p).unwrap();
        assert!(refined <= radial);
        assert!(refined <= 0.0101);
    }

    #[test]
    fn sup_distance_examples() {
        let f = PiecewiseLinear::linear(&[1.0]);
        assert_eq!(sup_distance(&f, &f).unwrap(), 0.0);
        let tent = PiecewiseLinear::new(1, vec![0.0f64, 0.5, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert!((sup_distance(&tent, &PiecewiseLinear::zero(1)).unwrap() - 1.0).abs() < 1e-15);
        let jump = PiecewiseLinear::new(1, vec![0.0f64, 0.5, 0.5, 1.0], vec![0.0, 0.0, 2.0, 2.0]).unwrap();
        assert!((sup_distance(&jump, &PiecewiseLinear::zero(1)).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn evaluation() {
        let p = PiecewiseLinear::new(1, vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 1.0, 3.0, 5.0]).unwrap();
        assert_eq!(p.eval(0.25), vec![0.5]);
        assert_eq!(p.eval(0.5), vec![3.0]);
        let mut left = [0.0];
        p.eval_left_into(0.5, &mut left);
        assert_eq!(left, [1.0]);
        assert_eq!(p.eval(2.0), vec![5.0]);
    }
}
