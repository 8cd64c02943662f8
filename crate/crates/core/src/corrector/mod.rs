//! Finite environment chains, the resolvent equation `(1 + eps) h - Pi h = g`,
//! the corrector decomposition of `X_n - n v` and the exact diffusion matrix.
//!
//! Exact machinery is restricted to models whose environment chain is finite
//! (homogeneous and periodic). Other models only get [`corrector_series_mc`].

mod chain;
mod decompose;
mod diffusion;
mod resolvent;
mod series;

pub use chain::{build_phase_chain, LatticePhases, PhaseChain, PhaseField, PhaseKernel};
pub use decompose::{decompose, Decomposition};
pub use diffusion::{diffusion_matrix_exact, phase_step_covariances};
pub use resolvent::{
    limit_convergence, resolvent_residual, series_tail_bound, solve_limit, solve_resolvent,
    truncated_series, ResolventSolution,
};
pub use series::{centered_drift_evaluator, corrector_series_mc, SeriesEstimate};
