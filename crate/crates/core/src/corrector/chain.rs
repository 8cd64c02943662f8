use serde::Serialize;

use crate::env::{EnvironmentSpec, JumpKernel, Model};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Row-sum and stationarity tolerance, widened to the scalar's precision.
pub(crate) fn tol<T: Scalar>(x: f64) -> T {
    T::of(x).max(T::epsilon() * T::of(64.0))
}

/// A real function on phases, one column per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField<T> {
    phases: usize,
    coords: usize,
    data: Vec<T>,
}

impl<T: Scalar> PhaseField<T> {
    pub fn zeros(phases: usize, coords: usize) -> Self {
        Self {
            phases,
            coords,
            data: vec![T::zero(); phases * coords],
        }
    }

    /// From per-coordinate columns, each of length `phases`.
    pub fn from_columns(columns: Vec<Vec<T>>) -> Result<Self> {
        let phases = columns.first().map_or(0, Vec::len);
        if columns.is_empty() || columns.iter().any(|c| c.len() != phases) {
            return Err(Error::usage("phase field columns must be non-empty and equally long"));
        }
        Ok(Self {
            phases,
            coords: columns.len(),
            data: columns.concat(),
        })
    }

    /// Scalar phase function.
    pub fn scalar(values: Vec<T>) -> Self {
        Self {
            phases: values.len(),
            coords: 1,
            data: values,
        }
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn coords(&self) -> usize {
        self.coords
    }

    pub fn column(&self, c: usize) -> &[T] {
        &self.data[c * self.phases..(c + 1) * self.phases]
    }

    pub(crate) fn column_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.phases..(c + 1) * self.phases]
    }

    #[inline]
    pub fn get(&self, c: usize, p: usize) -> T {
        self.data[c * self.phases + p]
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.phases, self.coords), (other.phases, other.coords));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// One phase of a lattice chain: its jump kernel and the phase reached by each offset.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseKernel<T> {
    dim: usize,
    offsets: Vec<i64>,
    probs: Vec<T>,
    next: Vec<usize>,
    drift: Vec<T>,
}

impl<T: Scalar> PhaseKernel<T> {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn offset(&self, i: usize) -> &[i64] {
        &self.offsets[i * self.dim..(i + 1) * self.dim]
    }

    pub fn prob(&self, i: usize) -> T {
        self.probs[i]
    }

    pub fn next_phase(&self, i: usize) -> usize {
        self.next[i]
    }

    pub fn drift(&self) -> &[T] {
        &self.drift
    }

    /// Index of offset `z`, if it carries positive mass.
    pub fn index_of(&self, z: &[i64]) -> Option<usize> {
        (0..self.len()).find(|&i| self.offset(i) == z && self.probs[i] > T::zero())
    }
}

/// Phase structure of a finite lattice environment: `phase(x)` is the
/// mixed-radix index of `x mod period`, first coordinate fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePhases<T> {
    dim: usize,
    period: Vec<u64>,
    strides: Vec<u64>,
    kernels: Vec<PhaseKernel<T>>,
}

impl<T: Scalar> LatticePhases<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> &[u64] {
        &self.period
    }

    pub fn kernel(&self, phase: usize) -> &PhaseKernel<T> {
        &self.kernels[phase]
    }

    #[inline]
    pub fn phase_of(&self, x: &[i64]) -> usize {
        x.iter()
            .zip(&self.period)
            .zip(&self.strides)
            .map(|((&c, &p), &s)| c.rem_euclid(p as i64) as u64 * s)
            .sum::<u64>() as usize
    }

    fn representative(&self, phase: usize) -> Vec<i64> {
        let mut rest = phase as u64;
        self.period
            .iter()
            .map(|&p| {
                let c = rest % p;
                rest /= p;
                c as i64
            })
            .collect()
    }
}

/// The environment chain `T_{X_n} omega` on a finite set of phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseChain<T> {
    transition: Matrix<T>,
    stationary: Vec<T>,
    lattice: Option<LatticePhases<T>>,
}

impl<T: Scalar> PhaseChain<T> {
    /// Chain from a bare row-stochastic matrix (no lattice structure).
    pub fn from_transition(transition: Matrix<T>) -> Result<Self> {
        let stationary = stationary_law(&transition)?;
        Ok(Self {
            transition,
            stationary,
            lattice: None,
        })
    }

    pub fn states(&self) -> usize {
        self.transition.rows()
    }

    pub fn transition(&self) -> &Matrix<T> {
        &self.transition
    }

    pub fn stationary(&self) -> &[T] {
        &self.stationary
    }

    pub fn lattice(&self) -> Option<&LatticePhases<T>> {
        self.lattice.as_ref()
    }

    pub(crate) fn require_lattice(&self) -> Result<&LatticePhases<T>> {
        self.lattice
            .as_ref()
            .ok_or_else(|| Error::usage("operation needs a chain built from a lattice environment"))
    }

    /// Stationary average `sum_p pi_p f(p)` of every coordinate.
    pub fn stationary_mean(&self, f: &PhaseField<T>) -> Vec<T> {
        (0..f.coords())
            .map(|c| {
                f.column(c)
                    .iter()
                    .zip(&self.stationary)
                    .map(|(&x, &p)| x * p)
                    .sum()
            })
            .collect()
    }

    /// `Pi f`, coordinatewise.
    pub fn apply(&self, f: &PhaseField<T>) -> PhaseField<T> {
        let mut out = PhaseField::zeros(f.phases(), f.coords());
        for c in 0..f.coords() {
            let col = self.transition.mul_vec(f.column(c));
            out.column_mut(c).copy_from_slice(&col);
        }
        out
    }

    /// Local drift `D` of every phase.
    pub fn drift_field(&self) -> Result<PhaseField<T>> {
        let lat = self.require_lattice()?;
        let cols = (0..lat.dim)
            .map(|c| lat.kernels.iter().map(|k| k.drift[c]).collect())
            .collect();
        PhaseField::from_columns(cols)
    }

    /// Annealed drift `v = E_stationary D`.
    pub fn mean_drift(&self) -> Result<Vec<T>> {
        Ok(self.stationary_mean(&self.drift_field()?))
    }

    /// `g = D - v`.
    pub fn centered_drift(&self, v: &[T]) -> Result<PhaseField<T>> {
        let mut g = self.drift_field()?;
        if v.len() != g.coords() {
            return Err(Error::usage("drift vector has the wrong dimension"));
        }
        for (c, &vc) in v.iter().enumerate() {
            g.column_mut(c).iter_mut().for_each(|x| *x -= vc);
        }
        Ok(g)
    }

    /// Structured-text audit document: transition matrix, stationary law and
    /// per-phase kernels.
    pub fn audit_toml(&self) -> String {
        #[derive(Serialize)]
        struct Phase {
            index: usize,
            offsets: Vec<Vec<i64>>,
            probs: Vec<f64>,
            next: Vec<usize>,
        }
        #[derive(Serialize)]
        struct Audit {
            states: usize,
            period: Option<Vec<u64>>,
            stationary: Vec<f64>,
            transition: Vec<Vec<f64>>,
            phases: Vec<Phase>,
        }
        let audit = Audit {
            states: self.states(),
            period: self.lattice.as_ref().map(|l| l.period.clone()),
            stationary: self.stationary.iter().map(|x| x.as_f64()).collect(),
            transition: self
                .transition
                .to_rows()
                .into_iter()
                .map(|r| r.into_iter().map(Scalar::as_f64).collect())
                .collect(),
            phases: self
                .lattice
                .iter()
                .flat_map(|l| l.kernels.iter().enumerate())
                .map(|(index, k)| Phase {
                    index,
                    offsets: (0..k.len()).map(|i| k.offset(i).to_vec()).collect(),
                    probs: k.probs.iter().map(|x| x.as_f64()).collect(),
                    next: k.next.clone(),
                })
                .collect(),
        };
        toml::to_string(&audit).expect("audit serializes")
    }
}

/// Builds the finite environment chain of a periodic or homogeneous model.
pub fn build_phase_chain<T: Scalar>(spec: &EnvironmentSpec) -> Result<PhaseChain<T>> {
    spec.validate()?;
    let d = spec.dim;
    let (period, kernels): (Vec<u64>, Vec<&JumpKernel>) = match &spec.model {
        Model::Deterministic { kernel } => (vec![1; d], vec![kernel]),
        Model::Periodic { period, kernels } => (period.clone(), kernels.iter().collect()),
        Model::IidFinite { kernels, weights } => {
            let live: Vec<&JumpKernel> = kernels
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(k, _)| k)
                .collect();
            if live.windows(2).any(|w| w[0] != w[1]) {
                return Err(unsupported(spec));
            }
            (vec![1; d], vec![live[0]])
        }
        Model::Balanced { .. } | Model::IidDirichlet { .. } => return Err(unsupported(spec)),
    };
    let mut strides = Vec::with_capacity(d);
    let mut s = 1u64;
    for &p in &period {
        strides.push(s);
        s *= p;
    }
    let mut lattice = LatticePhases {
        dim: d,
        period,
        strides,
        kernels: Vec::with_capacity(kernels.len()),
    };
    let n = kernels.len();
    let mut transition = Matrix::zeros(n, n);
    for (p, kernel) in kernels.iter().enumerate() {
        let rep = lattice.representative(p);
        let mut next = Vec::with_capacity(kernel.len());
        for (z, prob) in kernel.iter() {
            let y: Vec<i64> = rep.iter().zip(z).map(|(a, b)| a + b).collect();
            let q = lattice.phase_of(&y);
            next.push(q);
            transition[(p, q)] += T::of(prob);
        }
        lattice.kernels.push(PhaseKernel {
            dim: d,
            offsets: kernel.offsets().flatten().copied().collect(),
            probs: kernel.probs().iter().map(|&x| T::of(x)).collect(),
            next,
            drift: kernel.drift().into_iter().map(T::of).collect(),
        });
    }
    let stationary = stationary_law(&transition)?;
    Ok(PhaseChain {
        transition,
        stationary,
        lattice: Some(lattice),
    })
}

fn unsupported(spec: &EnvironmentSpec) -> Error {
    Error::Unsupported {
        what: format!(
            "exact phase chain for model `{}` (the environment chain is not finite-state)",
            spec.model.kind().as_str()
        ),
        alternative: "the Monte-Carlo estimators (corrector_series_mc, estimate_diffusion_empirical)"
            .into(),
    }
}

/// Number of closed communicating classes of the support graph.
fn closed_classes<T: Scalar>(m: &Matrix<T>) -> usize {
    let n = m.rows();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if m[(i, j)] > T::zero() && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen
        })
        .collect();
    let closed: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    let mut classes: Vec<&Vec<bool>> = closed.iter().map(|&i| &reach[i]).collect();
    classes.dedup();
    classes.sort();
    classes.dedup();
    classes.len()
}

/// Unique stationary law of a row-stochastic matrix, from
/// `(I - P + 1 1^t)^t pi = 1`.
pub(crate) fn stationary_law<T: Scalar>(p: &Matrix<T>) -> Result<Vec<T>> {
    let n = p.rows();
    if n == 0 || !p.is_square() {
        return Err(Error::usage("transition matrix must be square and non-empty"));
    }
    if !p.is_finite() {
        return Err(Error::usage("transition matrix has non-finite entries"));
    }
    let row_tol = tol::<T>(1e-12);
    for i in 0..n {
        let row = p.row(i);
        if row.iter().any(|&x| x < T::zero()) {
            return Err(Error::usage(format!("transition row {i} has a negative entry")));
        }
        let s: T = row.iter().copied().sum();
        if (s - T::one()).abs() > row_tol {
            return Err(Error::usage(format!("transition row {i} sums to {s}, not 1")));
        }
    }
    if closed_classes(p) != 1 {
        return Err(Error::Unsupported {
            what: "chain with more than one closed class (no unique stationary law)".into(),
            alternative: "a model whose phases form a single ergodic class".into(),
        });
    }
    let mut a = Matrix::identity(n).sub(p);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += T::one();
        }
    }
    let pi = a.transpose().lu()?.solve(&vec![T::one(); n]);
    let total: T = pi.iter().copied().sum();
    let pi: Vec<T> = pi.into_iter().map(|x| (x / total).max(T::zero())).collect();
    let moved = p.vec_mul(&pi);
    let err = moved
        .iter()
        .zip(&pi)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    if err > tol::<T>(1e-10) {
        return Err(Error::Numerical(format!(
            "stationary law residual {err} exceeds tolerance"
        )));
    }
    Ok(pi)
}
