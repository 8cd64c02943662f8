//! Random walks in random environments on `Z^d`: environment models,
//! quenched and annealed simulation, exact correctors on finite environment
//! chains, statistical estimators and law-of-the-iterated-logarithm checks.
//!
//! The numerical core ([`linalg`], [`corrector`], covariance tracks and path
//! geometry) is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix it to `f64`, which is what the simulation layer produces.

// Index loops mirror the matrix formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod corrector;
pub mod env;
pub mod estimators;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod lil;
pub mod rng;
pub mod scalar;
pub mod serde_seed;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type MatrixF64 = linalg::Matrix<f64>;
pub type MatrixF32 = linalg::Matrix<f32>;
pub type PhaseChainF64 = corrector::PhaseChain<f64>;
pub type PhaseChainF32 = corrector::PhaseChain<f32>;
pub type PhaseFieldF64 = corrector::PhaseField<f64>;
pub type ResolventSolutionF64 = corrector::ResolventSolution<f64>;
pub type ResolventSolutionF32 = corrector::ResolventSolution<f32>;
pub type DecompositionF64 = corrector::Decomposition<f64>;
pub type CovarianceTrackF64 = estimators::CovarianceTrack<f64>;
pub type CovarianceTrackF32 = estimators::CovarianceTrack<f32>;
pub type PathF64 = lil::PiecewiseLinear<f64>;
pub type PathF32 = lil::PiecewiseLinear<f32>;
pub type RescaledPathF64 = lil::RescaledPath<f64>;
pub type RescaledPathF32 = lil::RescaledPath<f32>;
