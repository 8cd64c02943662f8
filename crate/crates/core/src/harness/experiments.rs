use rayon::prelude::*;
use toml::{Table, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::corrector::{build_phase_chain, decompose, diffusion_matrix_exact, solve_limit, solve_resolvent, PhaseChain};
use crate::env::{EnvironmentSpec, Model};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_diffusion_empirical, estimate_drift, quenched_variance_curve, search_small_set, check_small_set,
    CurveFit,
};
use crate::lil::{standard_probes, strassen_sweep};
use crate::rng::{derive_seed, Role};
use crate::walk::{simulate_annealed, QuenchedMeanOptions};

/// The three result files of a run.
pub(crate) struct Outputs {
    pub result: String,
    pub table: String,
    pub seeds: String,
}

fn float(x: f64) -> Value {
    Value::Float(x)
}

fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| float(x)).collect())
}

fn int(x: usize) -> Value {
    Value::Integer(x as i64)
}

fn chain_of(spec: &EnvironmentSpec, kind: ExperimentKind) -> Result<PhaseChain<f64>> {
    build_phase_chain(spec).map_err(|e| match e {
        Error::Unsupported { what, .. } => Error::Unsupported {
            what: format!("experiment `{}` on this model ({what})", kind.as_str()),
            alternative: "corrector_series_mc or kind = \"diffusion\" (empirical)".into(),
        },
        other => other,
    })
}

/// Centering drift: configured, exact for finite chains, zero for balanced models.
fn resolve_drift(cfg: &ExperimentConfig, spec: &EnvironmentSpec) -> Result<Vec<f64>> {
    if let Some(v) = &cfg.drift {
        return Ok(v.clone());
    }
    if let Ok(chain) = build_phase_chain::<f64>(spec) {
        return chain.mean_drift();
    }
    if matches!(spec.model, Model::Balanced { .. }) {
        return Ok(vec![0.0; spec.dim]);
    }
    Err(Error::Config {
        line: None,
        field: Some("drift".into()),
        message: "this model has no exactly known drift; set `drift`".into(),
    })
}

fn seeds_csv(master: u64, replicas: usize) -> String {
    let mut out = String::from("replica,environment_seed,walk_seed\n");
    for r in 0..replicas as u64 {
        out.push_str(&format!(
            "{r},{:#018x},{:#018x}\n",
            derive_seed(master, r, Role::Environment),
            derive_seed(master, r, Role::Walk)
        ));
    }
    out
}

pub(crate) fn execute(cfg: &ExperimentConfig) -> Result<Outputs> {
    let spec = cfg.spec()?;
    let mut doc = Table::new();
    doc.insert("estimator".into(), Value::String(cfg.kind.as_str().into()));
    doc.insert("model-hash".into(), Value::String(spec.digest()));
    doc.insert("config-hash".into(), Value::String(cfg.identity_hash()));
    doc.insert("replicas".into(), int(cfg.replicas));
    doc.insert("seeds-file".into(), Value::String("seeds.csv".into()));
    let mut params = Table::new();
    params.insert("kind".into(), Value::String(cfg.kind.as_str().into()));
    params.insert("n-grid".into(), Value::Array(cfg.n_grid.iter().map(|&n| int(n)).collect()));
    params.insert("master-seed".into(), Value::String(format!("{:#018x}", cfg.master_seed)));
    let mut est = Table::new();
    let mut table = String::new();
    let d = spec.dim;
    match cfg.kind {
        ExperimentKind::Drift => {
            table.push_str("n,coord,mean,std_error,exact\n");
            for &n in &cfg.n_grid {
                let e = estimate_drift(&spec, cfg.replicas, n, cfg.master_seed)?;
                for c in 0..d {
                    let exact = e.exact.as_ref().map(|x| x[c].to_string()).unwrap_or_default();
                    table.push_str(&format!("{n},{c},{},{},{exact}\n", e.mean[c], e.std_error[c]));
                }
                if n == *cfg.n_grid.last().expect("non-empty") {
                    est.insert("mean".into(), floats(&e.mean));
                    est.insert("std-error".into(), floats(&e.std_error));
                    if let Some(x) = &e.exact {
                        est.insert("exact".into(), floats(x));
                    }
                }
            }
        }
        ExperimentKind::Diffusion => {
            let v = resolve_drift(cfg, &spec)?;
            params.insert("drift".into(), floats(&v));
            let exact = build_phase_chain::<f64>(&spec).ok().and_then(|chain| {
                let sol = solve_limit(&chain, &chain.centered_drift(&v).ok()?).ok()?;
                diffusion_matrix_exact(&chain, &sol, &v).ok()
            });
            table.push_str("n,i,j,empirical,std_error,exact,z\n");
            for &n in &cfg.n_grid {
                let e = estimate_diffusion_empirical(&spec, cfg.replicas, n, &v, cfg.master_seed)?;
                for i in 0..d {
                    for j in 0..d {
                        let (m, s) = (e.matrix[(i, j)], e.std_error[(i, j)]);
                        let (x, z) = match &exact {
                            Some(x) => {
                                let diff = (m - x[(i, j)]).abs();
                                (x[(i, j)].to_string(), if diff == 0.0 { 0.0 } else { diff / s }.to_string())
                            }
                            None => (String::new(), String::new()),
                        };
                        table.push_str(&format!("{n},{i},{j},{m},{s},{x},{z}\n"));
                    }
                }
                est.insert("matrix".into(), Value::Array(e.matrix.to_rows().iter().map(|r| floats(r)).collect()));
                est.insert("std-error".into(), Value::Array(e.std_error.to_rows().iter().map(|r| floats(r)).collect()));
                if let Some(x) = &exact {
                    est.insert("exact".into(), Value::Array(x.to_rows().iter().map(|r| floats(r)).collect()));
                    est.insert("max-z".into(), float(e.max_z_score(x)));
                }
            }
        }
        ExperimentKind::Decomposition => {
            let chain = chain_of(&spec, cfg.kind)?;
            let v = chain.mean_drift()?;
            let g = chain.centered_drift(&v)?;
            let eps = cfg.epsilon.unwrap_or(0.0);
            let sol = if eps == 0.0 { solve_limit(&chain, &g)? } else { solve_resolvent(&chain, &g, eps)? };
            params.insert("epsilon".into(), float(eps));
            let n_max = *cfg.n_grid.last().expect("non-empty");
            let rows = (0..cfg.replicas as u64)
                .into_par_iter()
                .map(|r| {
                    let traj = simulate_annealed(&spec, n_max, cfg.master_seed, r)?;
                    let dec = decompose(&traj, &chain, &sol, &v)?;
                    let mut lines = Vec::new();
                    let (mut id_max, mut cen_max) = (0.0f64, 0.0f64);
                    let mut next = 0;
                    for k in 0..=n_max {
                        for c in 0..d {
                            let rest = dec.m(k)[c] + dec.r(k)[c] + dec.eps_s_h(k)[c];
                            id_max = id_max.max((dec.s_g(k)[c] - rest).abs());
                            let centered = traj.position(k)[c] as f64 - k as f64 * v[c];
                            cen_max = cen_max.max((centered - dec.w(k)[c] - rest).abs());
                        }
                        if next < cfg.n_grid.len() && cfg.n_grid[next] == k {
                            for c in 0..d {
                                lines.push(format!(
                                    "{r},{k},{c},{},{},{},{},{},{id_max},{cen_max}\n",
                                    traj.position(k)[c] as f64 - k as f64 * v[c],
                                    dec.w(k)[c],
                                    dec.m(k)[c],
                                    dec.r(k)[c],
                                    dec.eps_s_h(k)[c],
                                ));
                            }
                            next += 1;
                        }
                    }
                    Ok((lines, dec.identity_residual(), dec.centering_residual(), dec.max_remainder()))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push_str("replica,n,coord,centered,w,m,r,eps_s_h,identity_residual,centering_residual\n");
            let (mut id, mut cen, mut rem) = (0.0f64, 0.0f64, 0.0f64);
            for (lines, a, b, c) in rows {
                lines.iter().for_each(|l| table.push_str(l));
                id = id.max(a);
                cen = cen.max(b);
                rem = rem.max(c);
            }
            est.insert("max-identity-residual".into(), float(id));
            est.insert("max-centering-residual".into(), float(cen));
            est.insert("max-remainder".into(), float(rem));
            est.insert("corrector-sup".into(), float(sol.h().max_abs()));
        }
        ExperimentKind::QuenchedVariance => {
            let v = resolve_drift(cfg, &spec)?;
            params.insert("drift".into(), floats(&v));
            let curve = quenched_variance_curve(
                &spec,
                &cfg.n_grid,
                cfg.replicas,
                &v,
                cfg.master_seed,
                QuenchedMeanOptions::default(),
            )?;
            table.push_str("n,value\n");
            for (n, val) in &curve.points {
                table.push_str(&format!("{n},{val}\n"));
            }
            est.insert("measure".into(), Value::String(curve.measure.into()));
            est.insert("fit".into(), Value::String(curve.fit.describe()));
            if let CurveFit::Fitted(f) = &curve.fit {
                est.insert("alpha".into(), float(f.alpha()));
                est.insert("alpha-half-width".into(), float(f.half_width / 2.0));
                est.insert("dropped-zero".into(), int(f.dropped_zero));
            }
        }
        ExperimentKind::Lil | ExperimentKind::Cluster => {
            let v = resolve_drift(cfg, &spec)?;
            params.insert("drift".into(), floats(&v));
            let probes = if cfg.kind == ExperimentKind::Cluster { standard_probes(d) } else { Vec::new() };
            let rep = strassen_sweep(&spec, &v, &cfg.n_grid, cfg.replicas, cfg.master_seed, &probes)?;
            table = rep.to_csv();
            let n_max = *cfg.n_grid.last().expect("non-empty");
            est.insert("covariance".into(), Value::String(rep.covariance.clone()));
            est.insert("median-k-distance-upper".into(), float(rep.median_k_distance(n_max)));
            let maxima: Vec<f64> = rep.rows.iter().filter(|r| r.n == n_max).map(|r| r.running_max).collect();
            est.insert("median-running-max".into(), float(crate::stats::median(&maxima)));
            for (i, p) in rep.probes.iter().enumerate() {
                est.insert(format!("monotone-fraction-{p}"), float(rep.monotone_fraction(i, &cfg.n_grid)));
            }
        }
        ExperimentKind::SmallSet => {
            let chain = chain_of(&spec, cfg.kind)?;
            let l_max = cfg.l_max.unwrap_or(4);
            params.insert("l-max".into(), int(l_max as usize));
            let search = search_small_set(&chain, l_max)?;
            table.push_str("l,lambda\n");
            for (l, lam) in &search.lambda_by_l {
                table.push_str(&format!("{l},{lam}\n"));
            }
            match &search.found {
                Some(f) => {
                    let check = check_small_set(&chain, f.l, f.lambda, &f.mu)?;
                    est.insert("l".into(), int(f.l as usize));
                    est.insert("lambda".into(), float(f.lambda));
                    est.insert("mu".into(), floats(&f.mu));
                    est.insert("reverified".into(), Value::Boolean(check.holds()));
                }
                None => {
                    est.insert("outcome".into(), Value::String(format!("no l <= {l_max} with positive lambda for uniform mu (inconclusive)")));
                }
            }
        }
    }
    doc.insert("parameters".into(), Value::Table(params));
    doc.insert("estimate".into(), Value::Table(est));
    Ok(Outputs {
        result: toml::to_string(&doc).expect("result serializes"),
        table,
        seeds: seeds_csv(cfg.master_seed, cfg.replicas),
    })
}
