use super::chain::{tol, PhaseChain, PhaseField};
use super::resolvent::ResolventSolution;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::walk::Trajectory;

/// Pathwise split `X_k - k v = W_k + M_k + R_k + eps S_k(h)` of one trajectory.
///
/// All sequences are flat `(n + 1) * d`, index `k * d + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    dim: usize,
    epsilon: T,
    w: Vec<T>,
    m: Vec<T>,
    r: Vec<T>,
    eps_s_h: Vec<T>,
    s_g: Vec<T>,
    identity_residual: T,
    centering_residual: T,
}

impl<T: Scalar> Decomposition<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.w.len() / self.dim - 1
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// Walk martingale `W_k = X_k - sum_{j<k} D(omega_bar(j))`.
    pub fn w(&self, k: usize) -> &[T] {
        &self.w[k * self.dim..(k + 1) * self.dim]
    }

    /// Corrector martingale `M_k = sum_{j<k} H(omega_bar(j), omega_bar(j + 1))`.
    pub fn m(&self, k: usize) -> &[T] {
        &self.m[k * self.dim..(k + 1) * self.dim]
    }

    /// Remainder `R_k = h(omega_bar(0)) - h(omega_bar(k))`.
    pub fn r(&self, k: usize) -> &[T] {
        &self.r[k * self.dim..(k + 1) * self.dim]
    }

    /// `eps sum_{j<k} h(omega_bar(j))`.
    pub fn eps_s_h(&self, k: usize) -> &[T] {
        &self.eps_s_h[k * self.dim..(k + 1) * self.dim]
    }

    /// `S_k(g) = sum_{j<k} g(omega_bar(j))` with `g = D - v`.
    pub fn s_g(&self, k: usize) -> &[T] {
        &self.s_g[k * self.dim..(k + 1) * self.dim]
    }

    /// `max_k |S_k(g) - M_k - R_k - eps S_k(h)|`.
    pub fn identity_residual(&self) -> T {
        self.identity_residual
    }

    /// `max_k |X_k - k v - W_k - M_k - R_k - eps S_k(h)|`.
    pub fn centering_residual(&self) -> T {
        self.centering_residual
    }

    /// `max_k |R_k|` over all coordinates.
    pub fn max_remainder(&self) -> T {
        self.r.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

/// Decomposes `traj` using the corrector `sol` of `g = D - v` on `chain`.
pub fn decompose<T: Scalar>(
    traj: &Trajectory,
    chain: &PhaseChain<T>,
    sol: &ResolventSolution<T>,
    v: &[T],
) -> Result<Decomposition<T>> {
    let lat = chain.require_lattice()?;
    let d = lat.dim();
    if traj.dim() != d || v.len() != d {
        return Err(Error::usage("trajectory, chain and drift dimensions differ"));
    }
    if sol.h().phases() != chain.states() || sol.h().coords() != d {
        return Err(Error::usage("corrector does not match the chain"));
    }
    let g: PhaseField<T> = chain.centered_drift(v)?;
    if g.max_abs_diff(sol.g()) > tol::<T>(1e-12) {
        return Err(Error::usage("corrector was not solved for g = D - v"));
    }
    let h = sol.h();
    let ph = chain.apply(h);
    let eps = sol.epsilon();
    let n = traj.steps();
    let len = (n + 1) * d;
    let (mut w, mut m, mut r, mut esh, mut sg) = (
        vec![T::zero(); len],
        vec![T::zero(); len],
        vec![T::zero(); len],
        vec![T::zero(); len],
        vec![T::zero(); len],
    );
    let site = |k: usize| -> Vec<i64> {
        traj.position(k)
            .iter()
            .zip(traj.origin())
            .map(|(x, o)| x + o)
            .collect()
    };
    let p0 = lat.phase_of(&site(0));
    let mut p = p0;
    let mut z = vec![0i64; d];
    let (mut id_res, mut cen_res) = (T::zero(), T::zero());
    for k in 1..=n {
        let (prev, cur) = (traj.position(k - 1), traj.position(k));
        for c in 0..d {
            z[c] = cur[c] - prev[c];
        }
        let kernel = lat.kernel(p);
        let i = kernel.index_of(&z).ok_or_else(|| {
            Error::usage(format!(
                "step {k} ({z:?}) has no mass in phase {p}; trajectory is inconsistent with the chain"
            ))
        })?;
        let q = kernel.next_phase(i);
        for c in 0..d {
            let (a, b) = ((k - 1) * d + c, k * d + c);
            w[b] = w[a] + T::of_i64(z[c]) - kernel.drift()[c];
            sg[b] = sg[a] + g.get(c, p);
            m[b] = m[a] + h.get(c, q) - ph.get(c, p);
            r[b] = h.get(c, p0) - h.get(c, q);
            esh[b] = esh[a] + eps * h.get(c, p);
            id_res = id_res.max((sg[b] - m[b] - r[b] - esh[b]).abs());
            let centered = T::of_i64(cur[c]) - T::of_usize(k) * v[c];
            cen_res = cen_res.max((centered - w[b] - m[b] - r[b] - esh[b]).abs());
        }
        p = q;
    }
    Ok(Decomposition {
        dim: d,
        epsilon: eps,
        w,
        m,
        r,
        eps_s_h: esh,
        s_g: sg,
        identity_residual: id_res,
        centering_residual: cen_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::{build_phase_chain, solve_limit, solve_resolvent};
    use crate::env::{EnvironmentSpec, EnvironmentView, JumpKernel};
    use crate::walk::simulate_quenched;

    #[test]
    fn deterministic_model_is_pure_martingale() {
        let spec =
            EnvironmentSpec::deterministic(JumpKernel::nearest_neighbour_1d(0.7).unwrap(), 1)
                .unwrap();
        let chain = build_phase_chain::<f64>(&spec).unwrap();
        let v = chain.mean_drift().unwrap();
        let sol = solve_limit(&chain, &chain.centered_drift(&v).unwrap()).unwrap();
        let traj = simulate_quenched(&EnvironmentView::new(spec).unwrap(), 500, 5);
        let dec = decompose(&traj, &chain, &sol, &v).unwrap();
        for k in 0..=500 {
            assert_eq!(dec.m(k)[0], 0.0);
            assert_eq!(dec.r(k)[0], 0.0);
            let centered = traj.position(k)[0] as f64 - 0.4 * k as f64;
            assert!((centered - dec.w(k)[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn period_two_identity_and_bounded_remainder() {
        let spec = EnvironmentSpec::periodic_1d(&[0.8, 0.4]).unwrap();
        let chain = build_phase_chain::<f64>(&spec).unwrap();
        let g = chain.centered_drift(&[0.2]).unwrap();
        let env = EnvironmentView::new(spec).unwrap();
        let traj = simulate_quenched(&env, 10_000, 17);
        for sol in [solve_limit(&chain, &g).unwrap(), solve_resolvent(&chain, &g, 0.01).unwrap()] {
            let dec = decompose(&traj, &chain, &sol, &[0.2]).unwrap();
            assert!(dec.identity_residual() <= 1e-9);
            assert!(dec.centering_residual() <= 1e-9);
            assert!(dec.max_remainder() <= 0.4 + 1e-12);
        }
    }

    #[test]
    fn foreign_trajectory_is_rejected() {
        let spec = EnvironmentSpec::periodic_1d(&[1.0, 0.5]).unwrap();
        let chain = build_phase_chain::<f64>(&spec).unwrap();
        let v = chain.mean_drift().unwrap();
        let sol = solve_limit(&chain, &chain.centered_drift(&v).unwrap()).unwrap();
        // phase 0 only steps +1
        let traj = Trajectory::from_positions(1, vec![0, -1], 0, 0).unwrap();
        assert!(matches!(decompose(&traj, &chain, &sol, &v), Err(Error::Usage(_))));
    }

    #[test]
    fn wrong_source_is_rejected() {
        let spec = EnvironmentSpec::periodic_1d(&[0.8, 0.4]).unwrap();
        let chain = build_phase_chain::<f64>(&spec).unwrap();
        let sol = solve_resolvent(&chain, &PhaseField::scalar(vec![1.0, 1.0]), 0.1).unwrap();
        let traj = Trajectory::from_positions(1, vec![0, 1], 0, 0).unwrap();
        assert!(decompose(&traj, &chain, &sol, &[0.2]).is_err());
    }
}
