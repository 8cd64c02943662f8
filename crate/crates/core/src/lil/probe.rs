use rayon::prelude::*;
use serde::Deserialize;

use super::path::{cm_energy, sup_distance, PiecewiseLinear};
use crate::error::{Error, Result};
use crate::harness::parse_toml;
use crate::scalar::Scalar;

/// Slack allowed on the unit energy bound of a probe.
pub const PROBE_ENERGY_SLACK: f64 = 1e-12;

/// A named element of `K` used as a cluster-set target.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub name: String,
    pub path: PiecewiseLinear<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeFile {
    name: String,
    dim: usize,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

const LIBRARY: [&str; 5] = [
    include_str!("../../data/probes/line-e1-d1.toml"),
    include_str!("../../data/probes/tent-d1.toml"),
    include_str!("../../data/probes/zero-d1.toml"),
    include_str!("../../data/probes/line-e1-d2.toml"),
    include_str!("../../data/probes/diagonal-d2.toml"),
];

impl Probe {
    /// Parses a probe file: `name`, `dim`, `times` and one `values` row per time.
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: ProbeFile = parse_toml(text)?;
        if f.values.iter().any(|row| row.len() != f.dim) {
            return Err(Error::MalformedPath(format!("probe {}: rows must have {} entries", f.name, f.dim)));
        }
        let path = PiecewiseLinear::new(f.dim, f.times, f.values.concat())?;
        Ok(Self { name: f.name, path })
    }
}

/// The shipped probe files.
pub fn probe_library() -> Vec<Probe> {
    LIBRARY
        .iter()
        .map(|t| Probe::from_toml(t).expect("shipped probe parses"))
        .collect()
}

/// `t e_1` and `(t / sqrt(d)) sum_i e_i` in dimension `d`.
pub fn standard_probes(d: usize) -> Vec<Probe> {
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    vec![
        Probe {
            name: "line-e1".into(),
            path: PiecewiseLinear::linear(&e1),
        },
        Probe {
            name: "diagonal".into(),
            path: PiecewiseLinear::linear(&vec![1.0 / (d as f64).sqrt(); d]),
        },
    ]
}

/// Closest supplied path to one probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeMatch<T> {
    pub min_distance: T,
    pub path_index: usize,
}

/// For every probe, the minimal sup-distance over `paths`.
pub fn cluster_probe<T: Scalar>(
    paths: &[PiecewiseLinear<T>],
    probes: &[PiecewiseLinear<T>],
) -> Result<Vec<ProbeMatch<T>>> {
    if paths.is_empty() {
        return Err(Error::usage("cluster_probe needs at least one path"));
    }
    for (i, p) in probes.iter().enumerate() {
        let e = cm_energy(p)?;
        if e > T::one() + T::of(PROBE_ENERGY_SLACK) {
            return Err(Error::usage(format!("probe {i} has energy {e} > 1; it is not in K")));
        }
    }
    probes
        .par_iter()
        .map(|probe| {
            let dists = paths
                .iter()
                .map(|p| sup_distance(p, probe))
                .collect::<Result<Vec<T>>>()?;
            let (path_index, &min_distance) = dists
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite distances"))
                .expect("non-empty");
            Ok(ProbeMatch {
                min_distance,
                path_index,
            })
        })
        .collect()
}
