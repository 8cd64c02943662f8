//! Estimators for the drift, conditional covariance tracks, the matrix norm,
//! the empirical diffusion matrix, the quenched-variance exponent and the
//! small-set minorization on finite chains.
//!
//! Every replica-level estimator aggregates per-replica results in replica
//! order with compensated sums, so results do not depend on the worker count.

mod covariance;
mod diffusion;
mod drift;
mod norm;
mod small_set;
mod variance;

pub use covariance::{
    conditional_covariance, full_covariance, martingale_covariance, CovarianceKind,
    CovarianceTrack,
};
pub use diffusion::{estimate_diffusion_empirical, EmpiricalDiffusion};
pub use drift::{estimate_drift, DriftEstimate};
pub use norm::{matrix_norm, MATRIX_NORM_TOL};
pub use small_set::{check_small_set, search_small_set, SmallSetReport, SmallSetSearch};
pub use variance::{
    fit_exponent, quenched_variance_curve, CurveFit, ExponentFit, QuenchedVarianceCurve,
    ENVIRONMENT_MEASURE, MIN_FIT_DECADES, MIN_FIT_POINTS,
};
