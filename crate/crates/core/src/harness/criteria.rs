//! The acceptance criteria, each a self-contained experiment at full size.

use std::fmt;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::fixtures::{balanced_1d, deterministic_07, lazy_period_two, period_two, random_chain, srw};
use super::run::{run, RunOptions, RESULT_FILE, SEEDS_FILE, TABLE_FILE};
use crate::corrector::{
    build_phase_chain, decompose, diffusion_matrix_exact, resolvent_residual, solve_limit,
    solve_resolvent, PhaseChain, PhaseField,
};
use crate::env::EnvironmentSpec;
use crate::error::Result;
use crate::estimators::{
    check_small_set, conditional_covariance, estimate_diffusion_empirical,
    quenched_variance_curve, search_small_set, CurveFit,
};
use crate::env::EnvironmentView;
use crate::lil::{cm_energy, k_distance_upper, lil_running_max, lil_scale, standard_probes, strassen_sweep, PiecewiseLinear};
use crate::linalg::Matrix;
use crate::rng::{derive_seed, hash_words, Role, Stream};
use crate::stats::{median, quantile};
use crate::walk::{simulate_annealed, QuenchedMeanOptions};

/// Result of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// Measured statistics and thresholds, one per line.
    pub details: Vec<String>,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} [{:>2}] {} ({:.2} s, budget {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )?;
        for d in &self.details {
            writeln!(f, "        {d}")?;
        }
        Ok(())
    }
}

struct Check {
    passed: bool,
    details: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details.push(format!("{} {line}", if ok { "ok " } else { "BAD" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("    {line}"));
    }
}

fn timed(id: u8, name: &'static str, budget_s: u64, body: impl FnOnce(&mut Check) -> Result<()>) -> CriterionOutcome {
    let start = Instant::now();
    let mut check = Check::new();
    if let Err(e) = body(&mut check) {
        check.require(false, format!("error: {e}"));
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_s);
    if elapsed > budget {
        check.require(false, format!("runtime {:.1} s exceeds {budget_s} s", elapsed.as_secs_f64()));
    }
    CriterionOutcome {
        id,
        name,
        passed: check.passed,
        details: check.details,
        elapsed,
        budget,
    }
}

/// Residual tolerance of exact solves.
pub const RESOLVENT_TOL: f64 = 1e-12;

fn resolvent_checks(chain: &PhaseChain<f64>, g: &PhaseField<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for eps in [0.1, 1e-3] {
        let s = solve_resolvent(chain, g, eps)?;
        worst = worst.max(resolvent_residual(chain, g, s.h(), eps));
    }
    let means = chain.stationary_mean(g);
    let mut centered = g.clone();
    let cols: Vec<Vec<f64>> = (0..g.coords())
        .map(|c| centered.column(c).iter().map(|x| x - means[c]).collect())
        .collect();
    centered = PhaseField::from_columns(cols)?;
    let lim = solve_limit(chain, &centered)?;
    worst = worst.max(resolvent_residual(chain, &centered, lim.h(), 0.0));
    let h_mean = chain.stationary_mean(lim.h()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(worst.max(h_mean))
}

/// Criterion 1 on the period-2 oracle plus `chains` (random chains by default).
pub fn resolvent_criterion(chains: &[Matrix<f64>]) -> CriterionOutcome {
    timed(1, "resolvent exactness", 1, |c| {
        let p2 = build_phase_chain::<f64>(&period_two())?;
        let g = p2.centered_drift(&[0.2])?;
        let lim = solve_limit(&p2, &g)?;
        let hand = (lim.h().get(0, 0) - 0.2).abs().max((lim.h().get(0, 1) + 0.2).abs());
        c.require(hand <= RESOLVENT_TOL, format!("period-2 limit corrector vs (0.2, -0.2): {hand:.2e}"));
        let r = resolvent_checks(&p2, &g)?;
        c.require(r <= RESOLVENT_TOL, format!("period-2 max residual {r:.2e} <= {RESOLVENT_TOL:e}"));
        let mut worst = 0.0f64;
        for (i, m) in chains.iter().enumerate() {
            let chain = match PhaseChain::from_transition(m.clone()) {
                Ok(ch) => ch,
                Err(e) => {
                    c.require(false, format!("chain {i}: {e}"));
                    continue;
                }
            };
            let mut s = Stream::new(hash_words(0xC1, [i as u64]));
            let g = PhaseField::scalar((0..chain.states()).map(|_| s.next_normal()).collect());
            worst = worst.max(resolvent_checks(&chain, &g)?);
        }
        c.require(
            worst <= RESOLVENT_TOL,
            format!("{} further chains: max residual / stationary mean of h {worst:.2e} <= {RESOLVENT_TOL:e}", chains.len()),
        );
        Ok(())
    })
}

/// The 50 random chains of criterion 1 (2 to 16 states).
pub fn criterion_1_chains() -> Vec<Matrix<f64>> {
    (0..50u64)
        .map(|i| {
            let key = derive_seed(0xC1, i, Role::Fixture);
            random_chain(key, 2 + (key % 15) as usize)
        })
        .collect()
}

pub fn criterion_1() -> CriterionOutcome {
    resolvent_criterion(&criterion_1_chains())
}

pub fn criterion_2() -> CriterionOutcome {
    timed(2, "decomposition identity", 60, |c| {
        let spec = period_two();
        let chain = build_phase_chain::<f64>(&spec)?;
        let g = chain.centered_drift(&[0.2])?;
        let limit = solve_limit(&chain, &g)?;
        let eps = solve_resolvent(&chain, &g, 1e-3)?;
        let res = (0..1000u64)
            .into_par_iter()
            .map(|r| {
                let traj = simulate_annealed(&spec, 10_000, 0xC2, r)?;
                let a = decompose(&traj, &chain, &eps, &[0.2])?;
                let b = decompose(&traj, &chain, &limit, &[0.2])?;
                Ok((
                    a.identity_residual().max(b.identity_residual()),
                    a.centering_residual(),
                    b.centering_residual(),
                    b.max_remainder(),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let fold = |f: fn(&(f64, f64, f64, f64)) -> f64| res.iter().map(f).fold(0.0f64, f64::max);
        let (id, cen_eps, cen0, rem) = (fold(|x| x.0), fold(|x| x.1), fold(|x| x.2), fold(|x| x.3));
        c.require(id <= 1e-9, format!("1000 paths, n = 1e4: max identity residual {id:.2e} <= 1e-9 (eps = 1e-3 and 0)"));
        c.require(cen0 <= 1e-9, format!("eps = 0: max |X_k - kv - W - M - R| {cen0:.2e} <= 1e-9"));
        c.note(format!("eps = 1e-3: max |X_k - kv - W - M - R - eps S(h)| {cen_eps:.2e}"));
        c.require(rem <= 0.4 + 1e-12, format!("max |R_k| {rem:.4} <= 2 max|h| = 0.4"));
        Ok(())
    })
}

fn exact_diffusion(spec: &EnvironmentSpec) -> Result<(Vec<f64>, Matrix<f64>)> {
    let chain = build_phase_chain::<f64>(spec)?;
    let v = chain.mean_drift()?;
    let sol = solve_limit(&chain, &chain.centered_drift(&v)?)?;
    let m = diffusion_matrix_exact(&chain, &sol, &v)?;
    Ok((v, m))
}

fn oracle_models() -> [(&'static str, EnvironmentSpec); 3] {
    [
        ("period-2", period_two()),
        ("deterministic 0.7/0.3", deterministic_07()),
        ("srw d=2", srw(2)),
    ]
}

pub fn criterion_3() -> CriterionOutcome {
    timed(3, "diffusion matrix oracle equivalence", 300, |c| {
        for (i, (name, spec)) in oracle_models().into_iter().enumerate() {
            let (v, exact) = exact_diffusion(&spec)?;
            let emp = estimate_diffusion_empirical(&spec, 10_000, 10_000, &v, 0xC3 + i as u64)?;
            let z = emp.max_z_score(&exact);
            c.require(
                z <= 4.0,
                format!(
                    "{name}: empirical {:?} vs exact {:?}, max |z| = {z:.2} <= 4",
                    emp.matrix.to_rows(),
                    exact.to_rows()
                ),
            );
        }
        Ok(())
    })
}

pub fn criterion_4() -> CriterionOutcome {
    timed(4, "ergodic trace limit", 120, |c| {
        let n = 100_000;
        for (i, (name, spec)) in oracle_models().into_iter().enumerate() {
            let chain = build_phase_chain::<f64>(&spec)?;
            let v = chain.mean_drift()?;
            let sol = solve_limit(&chain, &chain.centered_drift(&v)?)?;
            let tr = diffusion_matrix_exact(&chain, &sol, &v)?.trace();
            let ratios = (0..20u64)
                .into_par_iter()
                .map(|r| {
                    let master = 0xC4 + i as u64;
                    let traj = simulate_annealed(&spec, n, master, r)?;
                    let env = EnvironmentView::new(spec.with_seed(derive_seed(master, r, Role::Environment)))?;
                    let track = conditional_covariance(&traj, &env, Some((&chain, &sol)))?;
                    Ok(track.trace(n) / n as f64)
                })
                .collect::<Result<Vec<f64>>>()?;
            let worst = ratios.iter().map(|x| (x - tr).abs() / tr).fold(0.0f64, f64::max);
            c.require(worst <= 0.01, format!("{name}: max |v_n^2/n - tr D| / tr D = {worst:.2e} <= 1% (tr D = {tr})"));
        }
        Ok(())
    })
}

/// Odd grid for the period-2 curve: `E X_n - n v` is 0.4 for odd `n` and 0 for even `n`.
pub const QUENCHED_GRID: [usize; 7] = [11, 21, 51, 101, 201, 501, 1001];

pub fn criterion_5() -> CriterionOutcome {
    timed(5, "quenched variance curve", 120, |c| {
        let opts = QuenchedMeanOptions::default();
        let p2 = quenched_variance_curve(&period_two(), &QUENCHED_GRID, 4, &[0.2], 0xC5, opts)?;
        match &p2.fit {
            CurveFit::Fitted(f) => c.require(
                f.alpha() <= 0.1,
                format!("period-2: alpha = {:.4} +/- {:.4} <= 0.1 ({})", f.alpha(), f.half_width / 2.0, p2.measure),
            ),
            other => c.require(false, format!("period-2: {}", other.describe())),
        }
        let det = quenched_variance_curve(&deterministic_07(), &QUENCHED_GRID, 4, &[0.4], 0xC5, opts)?;
        c.require(det.fit == CurveFit::DegenerateZero, format!("deterministic: {}", det.fit.describe()));
        let bal = quenched_variance_curve(&balanced_1d(0), &QUENCHED_GRID, 4, &[0.0], 0xC5, opts)?;
        c.require(bal.fit == CurveFit::DegenerateZero, format!("balanced: {}", bal.fit.describe()));
        Ok(())
    })
}

fn srw_oracle_running_max(key: u64, lo: usize, hi: usize) -> f64 {
    let mut s = Stream::new(key);
    let mut x = 0i64;
    let mut best = 0.0f64;
    for n in 1..=hi {
        x += if s.next_u64() >> 63 == 1 { 1 } else { -1 };
        if n >= lo {
            best = best.max(x.unsigned_abs() as f64 / lil_scale(n));
        }
    }
    best
}

pub const LIL_MEDIAN_RANGE: (f64, f64) = (0.7, 1.1);
pub const LIL_MAX: f64 = 1.35;

pub fn criterion_6() -> CriterionOutcome {
    timed(6, "LIL envelope", 900, |c| {
        let (lo, hi) = (1_000, 1_000_000);
        let envelope = |c: &mut Check, name: &str, xs: &[f64]| {
            let med = median(xs);
            let max = xs.iter().copied().fold(0.0f64, f64::max);
            c.require(
                (LIL_MEDIAN_RANGE.0..=LIL_MEDIAN_RANGE.1).contains(&med),
                format!("{name}: replica median {med:.4} in [0.7, 1.1]"),
            );
            c.require(max <= LIL_MAX, format!("{name}: replica max {max:.4} <= {LIL_MAX}"));
        };
        let stat = |spec: &EnvironmentSpec, v: f64, master: u64| -> Result<Vec<f64>> {
            (0..200u64)
                .into_par_iter()
                .map(|r| lil_running_max(&simulate_annealed(spec, hi, master, r)?, &[v], lo, hi))
                .collect()
        };
        let srw_stats = stat(&srw(1), 0.0, 0xC6)?;
        envelope(c, "srw d=1", &srw_stats);
        let p2: Vec<f64> = stat(&period_two(), 0.2, 0xC6 + 1)?
            .into_iter()
            .map(|x| x / 0.8f64.sqrt())
            .collect();
        envelope(c, "period-2 / sqrt(0.8)", &p2);
        let oracle: Vec<f64> = (0..200u64)
            .into_par_iter()
            .map(|r| srw_oracle_running_max(derive_seed(0xC6, r, Role::Oracle), lo, hi))
            .collect();
        let above = oracle.iter().filter(|&&x| x > LIL_MAX).count();
        c.note(format!(
            "direct coin-flip oracle: median {:.4}, max {:.4}, {above}/200 replicas above {LIL_MAX}",
            median(&oracle),
            oracle.iter().copied().fold(0.0f64, f64::max)
        ));
        Ok(())
    })
}

/// Log-spaced grid, ten points per decade from 10^3 to 10^6.
pub fn strassen_grid() -> Vec<usize> {
    (0..=30).map(|i| 10f64.powf(3.0 + i as f64 / 10.0).round() as usize).collect()
}

pub fn criterion_7() -> CriterionOutcome {
    timed(7, "Strassen containment and density", 900, |c| {
        let grid = strassen_grid();
        let probes = standard_probes(1);
        let rep = strassen_sweep(&srw(1), &[0.0], &grid, 50, 0xC7, &probes)?;
        let med = rep.median_k_distance(1_000_000);
        c.require(med <= 0.35, format!("(a) median k_distance_upper of xi at n = 1e6: {med:.4} <= 0.35"));
        let limits = [10_000, 100_000, 1_000_000];
        for (i, p) in rep.probes.iter().enumerate() {
            let frac = rep.monotone_fraction(i, &limits);
            let strict = rep
                .probe_minima(i, &limits)
                .iter()
                .filter(|m| m.windows(2).all(|w| w[1] < w[0]))
                .count();
            c.require(
                frac >= 0.8,
                format!("(b) probe {p}: nonincreasing minimal distance in {:.0}% of seeds (>= 80%), strictly decreasing in {strict}/50", frac * 100.0),
            );
        }
        Ok(())
    })
}

/// Random piecewise-linear path from 0 scaled to unit energy.
pub fn random_unit_path(key: u64) -> PiecewiseLinear<f64> {
    let mut s = Stream::new(key);
    let d = 1 + s.next_below(3) as usize;
    let k = 1 + s.next_below(40) as usize;
    let mut times: Vec<f64> = (0..k - 1).map(|_| s.next_f64_open0()).collect();
    times.push(0.0);
    times.push(1.0);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut values = vec![0.0; d];
    for i in 1..times.len() {
        let prev: Vec<f64> = values[(i - 1) * d..i * d].to_vec();
        values.extend(prev.iter().map(|x| x + s.next_normal()));
    }
    let p = PiecewiseLinear::new(d, times, values).expect("valid path");
    let e = cm_energy(&p).expect("finite energy");
    p.scale(1.0 / e.sqrt())
}

pub fn criterion_8() -> CriterionOutcome {
    timed(8, "K-geometry property suite", 10, |c| {
        let (mut sqrt_bad, mut sup_bad, mut scale_bad, mut k_bad) = (0, 0, 0, 0);
        let mut worst_scale = 0.0f64;
        for i in 0..10_000u64 {
            let key = derive_seed(0xC8, i, Role::Fixture);
            let f = random_unit_path(key);
            for j in 0..f.len() {
                let t = f.times()[j];
                let norm = f.value(j).iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > t.sqrt() * (1.0 + 1e-12) + 1e-15 {
                    sqrt_bad += 1;
                }
            }
            if f.sup_norm() > 1.0 + 1e-12 {
                sup_bad += 1;
            }
            let e = cm_energy(&f)?;
            let cst = 0.1 + 9.9 * Stream::new(key ^ 1).next_f64();
            let rel = (cm_energy(&f.scale(cst))? - cst * cst * e).abs() / (cst * cst * e);
            worst_scale = worst_scale.max(rel);
            if rel > 1e-12 {
                scale_bad += 1;
            }
            // unit energy is only unit up to rounding, so test strictly inside and outside K
            if k_distance_upper(&f.scale(0.999))? != 0.0 || k_distance_upper(&f.scale(1.5))? <= 0.0 {
                k_bad += 1;
            }
        }
        c.require(sqrt_bad == 0, format!("10^4 unit-energy paths: |f(t)| <= sqrt(t) violations at breakpoints: {sqrt_bad}"));
        c.require(sup_bad == 0, format!("sup |f| <= 1 violations: {sup_bad}"));
        c.require(scale_bad == 0, format!("energy(cf) = c^2 energy(f): max relative error {worst_scale:.2e} <= 1e-12"));
        c.require(k_bad == 0, format!("k_distance_upper zero at energy 0.998, positive at 2.25: {k_bad} violations"));
        Ok(())
    })
}

pub fn criterion_9() -> CriterionOutcome {
    timed(9, "small-set checker", 1, |c| {
        let lazy = build_phase_chain::<f64>(&lazy_period_two())?;
        c.note(format!("lazy fixture transition {:?}", lazy.transition().to_rows()));
        let search = search_small_set(&lazy, 4)?;
        match &search.found {
            Some(f) => {
                let uniform = f.mu.iter().all(|&m| (m - 0.5).abs() < 1e-15);
                c.require(
                    f.l == 2 && (f.lambda - 0.5).abs() < 1e-12 && uniform,
                    format!("lazy period-2: l = {}, lambda = {}, mu = {:?}", f.l, f.lambda, f.mu),
                );
                let re = check_small_set(&lazy, f.l, f.lambda, &f.mu)?;
                c.require(re.holds(), format!("re-verification on {} phase pairs: {} violations", re.pairs_checked, re.violations.len()));
            }
            None => c.require(false, "lazy period-2: no minorization found".into()),
        }
        let strict = build_phase_chain::<f64>(&period_two())?;
        let s = search_small_set(&strict, 2)?;
        c.require(
            s.max_lambda() == 0.0 && s.found.is_none(),
            format!("strict period-2: lambda by l = {:?} (uniform mu)", s.lambda_by_l),
        );
        Ok(())
    })
}

/// Configs rerun by the determinism criterion.
pub fn determinism_configs() -> Vec<ExperimentConfig> {
    let mut drift = ExperimentConfig::new(ExperimentKind::Drift, &deterministic_07(), vec![1000], 1000, 0xCA);
    drift.workers = 1;
    let decomposition = ExperimentConfig::new(ExperimentKind::Decomposition, &period_two(), vec![1000, 10_000], 100, 0xCA);
    let diffusion = ExperimentConfig::new(ExperimentKind::Diffusion, &srw(2), vec![1000], 500, 0xCA);
    let cluster = ExperimentConfig::new(ExperimentKind::Cluster, &srw(1), vec![1000, 3000, 10_000], 10, 0xCA);
    let variance = ExperimentConfig::new(ExperimentKind::QuenchedVariance, &period_two(), QUENCHED_GRID.to_vec(), 2, 0xCA);
    let small = ExperimentConfig::new(ExperimentKind::SmallSet, &lazy_period_two(), vec![1], 1, 0xCA);
    vec![drift, decomposition, diffusion, cluster, variance, small]
}

/// Criterion 10: every config of [`determinism_configs`] run with 1, 4 and 8
/// workers under `base` yields byte-identical result files.
pub fn criterion_10(base: &Path) -> CriterionOutcome {
    timed(10, "determinism across worker counts", 600, |c| {
        for cfg in determinism_configs() {
            let mut bodies = Vec::new();
            for workers in [1, 4, 8] {
                let mut w = cfg.clone();
                w.workers = workers;
                w.output_dir = base.join(format!("workers-{workers}"));
                let out = run(&w, RunOptions { force: true })?;
                let files: Vec<Vec<u8>> = [RESULT_FILE, TABLE_FILE, SEEDS_FILE]
                    .iter()
                    .map(|f| std::fs::read(out.dir.join(f)))
                    .collect::<std::io::Result<_>>()?;
                bodies.push(files);
            }
            let same = bodies.windows(2).all(|w| w[0] == w[1]);
            c.require(
                same,
                format!(
                    "{}: result, table and seeds identical for workers 1, 4, 8 ({} table bytes)",
                    cfg.kind.as_str(),
                    bodies[0][1].len()
                ),
            );
        }
        Ok(())
    })
}

/// Period-2 per-n statistic at `n = 10^6`: replica 95th percentile.
pub fn period_two_q95(replicas: u64) -> Result<f64> {
    let n = 1_000_000;
    let xs = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let t = simulate_annealed(&period_two(), n, 0xC6 + 2, r)?;
            Ok((t.endpoint()[0] as f64 - 0.2 * n as f64).abs() / lil_scale(n))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(quantile(&xs, 0.95))
}
