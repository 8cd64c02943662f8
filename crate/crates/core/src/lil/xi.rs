use super::path::PiecewiseLinear;
use crate::error::{Error, Result};
use crate::estimators::CovarianceTrack;
use crate::scalar::Scalar;
use crate::walk::{QuenchedMean, Trajectory};

/// `log log x` with the convention `log log x = 1` for `0 < x <= e^e`.
pub fn safe_loglog<T: Scalar>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::usage(format!("loglog needs x > 0, got {x}")));
    }
    if x <= T::one().exp().exp() {
        Ok(T::one())
    } else {
        Ok(x.ln().ln())
    }
}

/// How `X_k` is centered in the rescaled path.
#[derive(Debug, Clone, Copy)]
pub enum Centering<'a, T> {
    /// `X_k - k v`.
    Annealed(&'a [T]),
    /// `X_k - E_0^omega X_k`, from an exact quenched mean.
    Quenched(&'a QuenchedMean),
}

/// `xi_n` on the intrinsic clock `t_k = v_k^2 / v_n^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath<T> {
    path: PiecewiseLinear<T>,
    normalizer: T,
    n: usize,
    v_n2: T,
}

impl<T: Scalar> RescaledPath<T> {
    pub fn path(&self) -> &PiecewiseLinear<T> {
        &self.path
    }

    /// `sqrt(2 v_n^2 loglog v_n^2)`.
    pub fn normalizer(&self) -> T {
        self.normalizer
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn v_n2(&self) -> T {
        self.v_n2
    }

    pub fn endpoint(&self) -> &[T] {
        self.path.value(self.path.len() - 1)
    }
}

/// Builds `xi_n` from the full trajectory and its covariance track.
///
/// A run of breakpoints sharing one time (steps with zero conditional
/// covariance) is represented by its last point, except the run at `t = 0`,
/// which keeps `xi_n(0) = 0`.
pub fn build_xi<T: Scalar>(
    traj: &Trajectory,
    track: &CovarianceTrack<T>,
    centering: Centering<'_, T>,
) -> Result<RescaledPath<T>> {
    let n = traj.steps();
    let d = traj.dim();
    if track.steps() != n || track.dim() != d {
        return Err(Error::usage("covariance track does not match the trajectory"));
    }
    let center = |k: usize, c: usize| -> Result<T> {
        match centering {
            Centering::Annealed(v) => Ok(T::of_usize(k) * v[c]),
            Centering::Quenched(q) => Ok(T::of(q.at(k)[c])),
        }
    };
    match centering {
        Centering::Annealed(v) if v.len() != d => {
            return Err(Error::usage("drift has the wrong dimension"))
        }
        Centering::Quenched(q) if q.dim() != d || q.steps() < n => {
            return Err(Error::usage("quenched mean does not cover the trajectory"))
        }
        _ => {}
    }
    let v_n2 = track.trace(n);
    if !(v_n2 > T::zero()) {
        return Err(Error::Degenerate(
            "v_n^2 = 0: the conditional covariance vanishes, xi_n is undefined".into(),
        ));
    }
    let normalizer = (T::of(2.0) * v_n2 * safe_loglog(v_n2)?).sqrt();
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity((n + 1) * d);
    times.push(T::zero());
    values.extend(std::iter::repeat_n(T::zero(), d));
    for k in 1..=n {
        let t = track.trace(k) / v_n2;
        let point = traj.position(k);
        let mut row = Vec::with_capacity(d);
        for (c, &x) in point.iter().enumerate() {
            row.push((T::of_i64(x) - center(k, c)?) / normalizer);
        }
        let last = times.len() - 1;
        if t == times[last] {
            if t > T::zero() {
                values[last * d..].copy_from_slice(&row);
            }
        } else {
            times.push(t);
            values.extend(row);
        }
    }
    let last = times.len() - 1;
    times[last] = T::one();
    Ok(RescaledPath {
        path: PiecewiseLinear::new(d, times, values)?,
        normalizer,
        n,
        v_n2,
    })
}

/// Per-grid-point values of `|X_n - n v| / sqrt(2 n loglog n)` and their running max.
#[derive(Debug, Clone, PartialEq)]
pub struct LilStatistic {
    pub grid: Vec<usize>,
    pub values: Vec<f64>,
    pub running_max: Vec<f64>,
}

/// LIL normalizer `sqrt(2 n loglog n)`.
pub fn lil_scale(n: usize) -> f64 {
    (2.0 * n as f64 * safe_loglog(n as f64).expect("n >= 1")).sqrt()
}

fn lil_value(x: &[i64], n: usize, v: &[f64]) -> f64 {
    let s: f64 = x
        .iter()
        .zip(v)
        .map(|(&xc, vc)| {
            let r = xc as f64 - n as f64 * vc;
            r * r
        })
        .sum();
    s.sqrt() / lil_scale(n)
}

/// Evaluates the LIL statistic at the points of a strictly increasing grid.
pub fn lil_statistic(traj: &Trajectory, v: &[f64], grid: &[usize]) -> Result<LilStatistic> {
    if v.len() != traj.dim() {
        return Err(Error::usage("drift has the wrong dimension"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("n-grid must be strictly increasing"));
    }
    if let Some(&bad) = grid.iter().find(|&&n| n == 0 || n > traj.steps()) {
        return Err(Error::usage(format!(
            "grid point {bad} outside [1, {}]",
            traj.steps()
        )));
    }
    let values: Vec<f64> = grid
        .iter()
        .map(|&n| lil_value(traj.position(n), n, v))
        .collect();
    let mut running = Vec::with_capacity(values.len());
    let mut m = 0.0f64;
    for &x in &values {
        m = m.max(x);
        running.push(m);
    }
    Ok(LilStatistic {
        grid: grid.to_vec(),
        values,
        running_max: running,
    })
}

/// `max_{lo <= n <= hi}` of the LIL statistic over every integer `n`.
pub fn lil_running_max(traj: &Trajectory, v: &[f64], lo: usize, hi: usize) -> Result<f64> {
    if lo == 0 || lo > hi || hi > traj.steps() || v.len() != traj.dim() {
        return Err(Error::usage(format!(
            "range [{lo}, {hi}] invalid for a {}-step trajectory",
            traj.steps()
        )));
    }
    Ok((lo..=hi)
        .map(|n| lil_value(traj.position(n), n, v))
        .fold(0.0, f64::max))
}
