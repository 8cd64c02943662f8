//! Rescaled paths `xi_n`, Cameron-Martin geometry of the Strassen set `K`,
//! the LIL statistic and cluster-set probes.
//!
//! Distances to `K` are upper bounds from explicit elements of `K`, never
//! projections.

mod path;
mod probe;
mod report;
mod xi;

pub use path::{
    cm_energy, k_distance_upper, radial_distance_upper, sup_distance, PiecewiseLinear,
    UNIFORM_GUARD_POINTS,
};
pub use probe::{
    cluster_probe, probe_library, standard_probes, Probe, ProbeMatch, PROBE_ENERGY_SLACK,
};
pub use report::{strassen_sweep, StrassenReport, StrassenRow};
pub use xi::{
    build_xi, lil_running_max, lil_scale, lil_statistic, safe_loglog, Centering, LilStatistic,
    RescaledPath,
};
