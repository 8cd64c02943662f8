use crate::corrector::{phase_step_covariances, PhaseChain, ResolventSolution};
use crate::env::EnvironmentView;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::walk::Trajectory;

/// Which martingale increment a [`CovarianceTrack`] accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    /// `z_k = w_k + m_k`, the walk plus corrector martingale increment.
    Full,
    /// `w_k` only; used when no corrector is available.
    MartingalePart,
}

impl CovarianceKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Full => "conditional covariance",
            Self::MartingalePart => "martingale-part covariance",
        }
    }
}

/// Cumulative conditional covariances `A_0 = 0, A_1, ..., A_n` and their traces.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTrack<T> {
    dim: usize,
    kind: CovarianceKind,
    cumulative: Vec<T>,
    traces: Vec<T>,
}

impl<T: Scalar> CovarianceTrack<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> CovarianceKind {
        self.kind
    }

    pub fn steps(&self) -> usize {
        self.traces.len() - 1
    }

    /// `A_k`, row-major `d x d`.
    pub fn a(&self, k: usize) -> &[T] {
        let s = self.dim * self.dim;
        &self.cumulative[k * s..(k + 1) * s]
    }

    pub fn a_matrix(&self, k: usize) -> Matrix<T> {
        Matrix::from_row_major(self.dim, self.dim, self.a(k).to_vec())
            .expect("track stores square blocks")
    }

    /// `A_k - A_{k-1}` for `k >= 1`.
    pub fn increment(&self, k: usize) -> Matrix<T> {
        self.a_matrix(k).sub(&self.a_matrix(k - 1))
    }

    /// `v_k^2 = tr(A_k)`.
    pub fn trace(&self, k: usize) -> T {
        self.traces[k]
    }

    pub fn traces(&self) -> &[T] {
        &self.traces
    }

    /// Same track cut at step `m`.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m > self.steps() {
            return Err(Error::usage(format!("prefix {m} exceeds {} steps", self.steps())));
        }
        let s = self.dim * self.dim;
        Ok(Self {
            dim: self.dim,
            kind: self.kind,
            cumulative: self.cumulative[..(m + 1) * s].to_vec(),
            traces: self.traces[..=m].to_vec(),
        })
    }

    fn accumulate(dim: usize, kind: CovarianceKind, steps: usize, mut inc: impl FnMut(usize) -> Result<Vec<T>>) -> Result<Self> {
        let s = dim * dim;
        let mut cumulative = vec![T::zero(); (steps + 1) * s];
        let mut traces = vec![T::zero(); steps + 1];
        for k in 1..=steps {
            let step = inc(k)?;
            for i in 0..s {
                cumulative[k * s + i] = cumulative[(k - 1) * s + i] + step[i];
            }
            traces[k] = (0..dim).map(|c| cumulative[k * s + c * dim + c]).sum();
        }
        Ok(Self {
            dim,
            kind,
            cumulative,
            traces,
        })
    }
}

/// `A_k` of `traj` with `z = w + m`, from the per-phase covariances of the
/// combined increment.
pub fn full_covariance<T: Scalar>(
    traj: &Trajectory,
    chain: &PhaseChain<T>,
    sol: &ResolventSolution<T>,
) -> Result<CovarianceTrack<T>> {
    let lat = chain.require_lattice()?;
    let d = lat.dim();
    if traj.dim() != d {
        return Err(Error::usage("trajectory and chain dimensions differ"));
    }
    let per_phase = phase_step_covariances(chain, sol)?;
    let site = |k: usize| -> Vec<i64> {
        traj.position(k)
            .iter()
            .zip(traj.origin())
            .map(|(x, o)| x + o)
            .collect()
    };
    let mut p = lat.phase_of(&site(0));
    let mut z = vec![0i64; d];
    CovarianceTrack::accumulate(d, CovarianceKind::Full, traj.steps(), |k| {
        let (prev, cur) = (traj.position(k - 1), traj.position(k));
        for c in 0..d {
            z[c] = cur[c] - prev[c];
        }
        let kernel = lat.kernel(p);
        let i = kernel.index_of(&z).ok_or_else(|| {
            Error::usage(format!("step {k} has no mass in phase {p}; trajectory does not match the chain"))
        })?;
        let inc = per_phase[p].as_slice().to_vec();
        p = kernel.next_phase(i);
        Ok(inc)
    })
}

/// `A_k` of the walk martingale `W` alone: sums of the step covariances of
/// the site kernels along `traj`.
pub fn martingale_covariance<T: Scalar>(
    traj: &Trajectory,
    env: &EnvironmentView,
) -> Result<CovarianceTrack<T>> {
    let d = env.dim();
    if traj.dim() != d {
        return Err(Error::usage("trajectory and environment dimensions differ"));
    }
    if traj.origin() != env.origin() || traj.env_seed() != env.seed() {
        return Err(Error::usage("trajectory was not generated in this environment"));
    }
    let mut abs = vec![0i64; d];
    let mut z = vec![0i64; d];
    CovarianceTrack::accumulate(d, CovarianceKind::MartingalePart, traj.steps(), |k| {
        let (prev, cur) = (traj.position(k - 1), traj.position(k));
        for c in 0..d {
            abs[c] = env.origin()[c] + prev[c];
            z[c] = cur[c] - prev[c];
        }
        let kernel = env.kernel_at_absolute(&abs);
        if kernel.prob_of(&z) <= 0.0 {
            return Err(Error::usage(format!(
                "step {k} is outside the kernel support; trajectory does not match the environment"
            )));
        }
        Ok(kernel.step_covariance().into_iter().map(T::of).collect())
    })
}

/// `A_k` with the corrector when one is supplied, otherwise the
/// martingale-part track (labelled as such by [`CovarianceTrack::kind`]).
pub fn conditional_covariance<T: Scalar>(
    traj: &Trajectory,
    env: &EnvironmentView,
    corrector: Option<(&PhaseChain<T>, &ResolventSolution<T>)>,
) -> Result<CovarianceTrack<T>> {
    match corrector {
        Some((chain, sol)) => {
            if traj.dim() != env.dim() {
                return Err(Error::usage("trajectory and environment dimensions differ"));
            }
            full_covariance(traj, chain, sol)
        }
        None => martingale_covariance(traj, env),
    }
}
