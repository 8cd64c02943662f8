use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::env::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::stats::compensated_sum;
use crate::walk::{quenched_mean, replica_environment, QuenchedMeanOptions};

/// Label of the environment law used for the averages.
pub const ENVIRONMENT_MEASURE: &str = "fresh-sample environment law";

/// Minimum number of fitted points.
pub const MIN_FIT_POINTS: usize = 5;
/// Minimum `log10(n_max / n_min)` of the fitted points.
pub const MIN_FIT_DECADES: f64 = 1.5;

/// Least-squares slope of `log value` on `log n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    /// Points `(n, value)` entering the fit.
    pub points: Vec<(usize, f64)>,
    pub slope: f64,
    /// 95% confidence half-width of the slope.
    pub half_width: f64,
    /// Grid points dropped because their value was zero.
    pub dropped_zero: usize,
}

impl ExponentFit {
    /// Subdiffusivity exponent `alpha = slope / 2`.
    pub fn alpha(&self) -> f64 {
        self.slope / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveFit {
    Fitted(ExponentFit),
    /// `sqrt(value) <= 1e-9 n M` at every grid point.
    DegenerateZero,
    /// Too few usable points or too narrow a span.
    Insufficient { points: usize, decades: f64 },
}

impl CurveFit {
    pub fn describe(&self) -> String {
        match self {
            CurveFit::Fitted(f) => format!(
                "alpha = {:.4} +/- {:.4} ({} points)",
                f.alpha(),
                f.half_width / 2.0,
                f.points.len()
            ),
            CurveFit::DegenerateZero => "degenerate (zero curve)".into(),
            CurveFit::Insufficient { points, decades } => {
                format!("insufficient ({points} points over {decades:.2} decades)")
            }
        }
    }
}

/// `E |E_0^omega X_n - n v|^2` on an n-grid with its exponent fit.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedVarianceCurve {
    pub points: Vec<(usize, f64)>,
    pub fit: CurveFit,
    pub replicas: usize,
    pub measure: &'static str,
}

/// Ordinary least squares on `(ln n, ln value)` after dropping the smallest
/// grid point and zero values.
pub fn fit_exponent(points: &[(usize, f64)], range: u32) -> CurveFit {
    let scale = f64::from(range.max(1));
    if points
        .iter()
        .all(|&(n, val)| val.sqrt() <= 1e-9 * n as f64 * scale)
    {
        return CurveFit::DegenerateZero;
    }
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.0);
    let tail = sorted.get(1..).unwrap_or(&[]);
    let used: Vec<(usize, f64)> = tail.iter().copied().filter(|p| p.1 > 0.0).collect();
    let dropped_zero = tail.len() - used.len();
    let decades = match (used.first(), used.last()) {
        (Some(a), Some(b)) => (b.0 as f64 / a.0 as f64).log10(),
        _ => 0.0,
    };
    if used.len() < MIN_FIT_POINTS || decades < MIN_FIT_DECADES {
        return CurveFit::Insufficient {
            points: used.len(),
            decades,
        };
    }
    let xs: Vec<f64> = used.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = compensated_sum(xs.iter().copied()) / k;
    let my = compensated_sum(ys.iter().copied()) / k;
    let sxx = compensated_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = compensated_sum(
        xs.iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2)),
    );
    let se = (sse / (k - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, k - 2.0)
        .expect("at least five points")
        .inverse_cdf(0.975);
    CurveFit::Fitted(ExponentFit {
        points: used,
        slope,
        half_width: t * se,
        dropped_zero,
    })
}

/// Averages `|E_0^omega X_n - n v|^2` over `replicas` fresh environments at
/// every grid point, computing the quenched means exactly.
pub fn quenched_variance_curve(
    spec: &EnvironmentSpec,
    n_grid: &[usize],
    replicas: usize,
    v: &[f64],
    master_seed: u64,
    options: QuenchedMeanOptions,
) -> Result<QuenchedVarianceCurve> {
    if replicas == 0 || n_grid.is_empty() || v.len() != spec.dim {
        return Err(Error::usage("need replicas >= 1, a non-empty grid and a drift of dimension d"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("n-grid must be strictly increasing"));
    }
    let n_max = *n_grid.last().expect("non-empty grid");
    let per_replica = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let env = replica_environment(spec, master_seed, r)?;
            let qm = quenched_mean(&env, n_max, options)?;
            Ok(n_grid
                .iter()
                .map(|&n| {
                    qm.at(n)
                        .iter()
                        .zip(v)
                        .map(|(m, vc)| (m - n as f64 * vc).powi(2))
                        .sum::<f64>()
                })
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(usize, f64)> = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            (
                n,
                compensated_sum(per_replica.iter().map(|row| row[i])) / replicas as f64,
            )
        })
        .collect();
    Ok(QuenchedVarianceCurve {
        fit: fit_exponent(&points, spec.range),
        points,
        replicas,
        measure: ENVIRONMENT_MEASURE,
    })
}
