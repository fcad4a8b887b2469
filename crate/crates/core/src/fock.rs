//! Truncated multi-mode Fock spaces and dense state representations.
//!
//! A `k`-mode truncation with cutoff `c` keeps occupations `0..=c` per mode.
//! Basis state `|n₁,…,n_k⟩` sits at flat index `Σ nᵢ·(c+1)^(k−i)`, so mode 1
//! is the most significant digit and `a ⊗ b` is the Kronecker product.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_MODES: usize = 3;

/// Tolerance used when checking norms, traces and hermiticity.
pub const NORM_TOL: f64 = 1e-9;

/// Largest total dimension for a dense multi-mode density operator (13³).
pub const MAX_DENSITY_DIM: usize = 2197;

/// Largest total dimension for a dense multi-mode pure state (21³).
pub const MAX_PURE_DIM: usize = 9261;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockTruncation {
    cutoff: usize,
    modes: usize,
}

impl FockTruncation {
    pub fn new(cutoff: usize, modes: usize) -> Result<Self> {
        if cutoff < 1 {
            return Err(Error::InvalidParameter("cutoff must be at least 1".into()));
        }
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::TooManyModes { modes, max: MAX_MODES });
        }
        Ok(Self { cutoff, modes })
    }

    pub fn single(cutoff: usize) -> Result<Self> {
        Self::new(cutoff, 1)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn local_dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.modes as u32)
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Self::new(cutoff, self.modes)
    }

    pub fn with_modes(&self, modes: usize) -> Result<Self> {
        Self::new(self.cutoff, modes)
    }

    /// Flat index of `|occ[0],…,occ[k−1]⟩`, or `None` if outside the box.
    pub fn index(&self, occ: &[usize]) -> Option<usize> {
        if occ.len() != self.modes || occ.iter().any(|&n| n > self.cutoff) {
            return None;
        }
        Some(occ.iter().fold(0, |acc, &n| acc * self.local_dim() + n))
    }

    pub fn occupations(&self, index: usize) -> Vec<usize> {
        let d = self.local_dim();
        let mut occ = vec![0; self.modes];
        let mut rest = index;
        for slot in occ.iter_mut().rev() {
            *slot = rest % d;
            rest /= d;
        }
        occ
    }

    /// Occupation of `mode` in the basis state at `index`.
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        let d = self.local_dim();
        let shift = d.pow((self.modes - 1 - mode) as u32);
        (index / shift) % d
    }

    pub fn total_photons(&self, index: usize) -> usize {
        (0..self.modes).map(|m| self.occupation(index, m)).sum()
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes {
            return Err(Error::InvalidMode { mode, modes: self.modes });
        }
        Ok(())
    }

    fn same_cutoff(&self, other: &Self) -> Result<()> {
        if self.cutoff != other.cutoff {
            return Err(Error::CutoffMismatch { left: self.cutoff, right: other.cutoff });
        }
        Ok(())
    }

    fn joined(&self, other: &Self) -> Result<Self> {
        self.same_cutoff(other)?;
        let modes = self.modes + other.modes;
        if modes > MAX_MODES {
            return Err(Error::TooManyModes { modes, max: MAX_MODES });
        }
        Self::new(self.cutoff, modes)
    }
}

/// Probability weight near the cutoff boundary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// Weight on basis states with any occupation `≥ cutoff − 1`.
    pub tail_mass: f64,
}

impl TailReport {
    pub fn within(&self, threshold: f64) -> bool {
        self.tail_mass <= threshold
    }
}

fn tail_from_populations(trunc: &FockTruncation, pops: impl Iterator<Item = f64>) -> TailReport {
    let edge = trunc.cutoff().saturating_sub(1);
    let mass: f64 = pops
        .enumerate()
        .filter(|(i, _)| (0..trunc.modes()).any(|m| trunc.occupation(*i, m) >= edge))
        .map(|(_, p)| p)
        .sum();
    TailReport { tail_mass: mass.clamp(0.0, 1.0) }
}

fn check_dense_budget(trunc: &FockTruncation, mixed: bool) -> Result<()> {
    if trunc.modes() < 3 {
        return Ok(());
    }
    let (limit, what) = if mixed {
        (MAX_DENSITY_DIM, "density operator")
    } else {
        (MAX_PURE_DIM, "pure state")
    };
    if trunc.dim() > limit {
        return Err(Error::Infeasible(format!(
            "3-mode {what} at cutoff {} has dimension {} > {limit}",
            trunc.cutoff(),
            trunc.dim()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockArray {
    trunc: FockTruncation,
    amplitudes: DVector<C64>,
}

impl FockArray {
    pub fn new(trunc: FockTruncation, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != trunc.dim() {
            return Err(Error::DimensionMismatch { expected: trunc.dim(), actual: amplitudes.len() });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        Ok(Self { trunc, amplitudes })
    }

    pub fn from_vec(trunc: FockTruncation, amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(trunc, DVector::from_vec(amplitudes))
    }

    pub fn basis(trunc: FockTruncation, occ: &[usize]) -> Result<Self> {
        let idx = trunc.index(occ).ok_or_else(|| {
            Error::InvalidParameter(format!("occupation {occ:?} outside cutoff {}", trunc.cutoff()))
        })?;
        let mut amps = DVector::zeros(trunc.dim());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { trunc, amplitudes: amps })
    }

    pub fn vacuum(trunc: FockTruncation) -> Self {
        let mut amps = DVector::zeros(trunc.dim());
        amps[0] = C64::new(1.0, 0.0);
        Self { trunc, amplitudes: amps }
    }

    pub fn truncation(&self) -> FockTruncation {
        self.trunc
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, occ: &[usize]) -> C64 {
        self.trunc.index(occ).map_or(C64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(Error::InvalidParameter("cannot normalize the zero vector".into()));
        }
        Ok(Self { trunc: self.trunc, amplitudes: self.amplitudes.unscale(n) })
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.trunc != other.trunc {
            return Err(Error::DimensionMismatch { expected: self.trunc.dim(), actual: other.trunc.dim() });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityOp {
        DensityOp { trunc: self.trunc, matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let trunc = self.trunc.joined(&other.trunc)?;
        check_dense_budget(&trunc, false)?;
        Ok(Self { trunc, amplitudes: self.amplitudes.kronecker(&other.amplitudes) })
    }

    pub fn tail(&self) -> TailReport {
        tail_from_populations(&self.trunc, self.amplitudes.iter().map(|a| a.norm_sqr()))
    }

    /// Re-expresses the state at a different cutoff. Amplitudes outside the
    /// new box are dropped; the dropped weight is returned alongside.
    pub fn recut(&self, cutoff: usize) -> Result<(Self, f64)> {
        let trunc = self.trunc.with_cutoff(cutoff)?;
        let mut amps = DVector::zeros(trunc.dim());
        let mut dropped = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            match trunc.index(&self.trunc.occupations(i)) {
                Some(j) => amps[j] = *a,
                None => dropped += a.norm_sqr(),
            }
        }
        Ok((Self { trunc, amplitudes: amps }, dropped))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    trunc: FockTruncation,
    matrix: DMatrix<C64>,
}

impl DensityOp {
    /// Checks shape, hermiticity and unit trace (within [`NORM_TOL`]).
    pub fn new(trunc: FockTruncation, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(trunc, matrix)?;
        let herm = rho.hermiticity_defect();
        if herm > NORM_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("trace {tr} is not 1")));
        }
        Ok(rho)
    }

    /// Shape check only; used for intermediate, possibly unnormalized operators.
    pub fn from_matrix_unchecked(trunc: FockTruncation, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != trunc.dim() || matrix.ncols() != trunc.dim() {
            return Err(Error::DimensionMismatch { expected: trunc.dim(), actual: matrix.nrows() });
        }
        Ok(Self { trunc, matrix })
    }

    pub fn diagonal(trunc: FockTruncation, probs: &[f64]) -> Result<Self> {
        if probs.len() != trunc.dim() {
            return Err(Error::DimensionMismatch { expected: trunc.dim(), actual: probs.len() });
        }
        let diag = DVector::from_iterator(probs.len(), probs.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(trunc, DMatrix::from_diagonal(&diag))
    }

    pub fn truncation(&self) -> FockTruncation {
        self.trunc
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue; negative values beyond tolerance flag an unphysical operator.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.matrix.clone());
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn renormalize(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 {
            return Err(Error::InvalidParameter("cannot renormalize a traceless operator".into()));
        }
        Ok(Self { trunc: self.trunc, matrix: self.matrix.unscale(tr) })
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let trunc = self.trunc.joined(&other.trunc)?;
        check_dense_budget(&trunc, true)?;
        Ok(Self { trunc, matrix: self.matrix.kronecker(&other.matrix) })
    }

    pub fn tail(&self) -> TailReport {
        tail_from_populations(&self.trunc, self.matrix.diagonal().iter().map(|z| z.re))
    }

    pub fn recut(&self, cutoff: usize) -> Result<(Self, f64)> {
        let trunc = self.trunc.with_cutoff(cutoff)?;
        let map: Vec<Option<usize>> =
            (0..self.trunc.dim()).map(|i| trunc.index(&self.trunc.occupations(i))).collect();
        let mut m = DMatrix::zeros(trunc.dim(), trunc.dim());
        let mut dropped = 0.0;
        for (j, mj) in map.iter().enumerate() {
            match mj {
                Some(jj) => {
                    for (i, mi) in map.iter().enumerate() {
                        if let Some(ii) = mi {
                            m[(*ii, *jj)] = self.matrix[(i, j)];
                        }
                    }
                }
                None => dropped += self.matrix[(j, j)].re,
            }
        }
        Ok((Self { trunc, matrix: m }, dropped))
    }

    /// Reduced operator on the modes in `keep` (0-based, any order; result
    /// keeps them in ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let modes = self.trunc.modes();
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if keep.is_empty() {
            return Err(Error::InvalidModeSet("keep set is empty".into()));
        }
        if let Some(&bad) = keep.iter().find(|&&m| m >= modes) {
            return Err(Error::InvalidMode { mode: bad, modes });
        }
        let traced: Vec<usize> = (0..modes).filter(|m| !keep.contains(m)).collect();
        let kept_trunc = self.trunc.with_modes(keep.len())?;
        if traced.is_empty() {
            return Ok(self.clone());
        }
        let traced_trunc = self.trunc.with_modes(traced.len())?;
        let full_index = |k: usize, t: usize| {
            let kocc = kept_trunc.occupations(k);
            let tocc = traced_trunc.occupations(t);
            let mut occ = vec![0; modes];
            for (slot, &m) in keep.iter().enumerate() {
                occ[m] = kocc[slot];
            }
            for (slot, &m) in traced.iter().enumerate() {
                occ[m] = tocc[slot];
            }
            self.trunc.index(&occ).expect("occupations inside the box")
        };
        let kd = kept_trunc.dim();
        let td = traced_trunc.dim();
        let table: Vec<Vec<usize>> = (0..kd).map(|k| (0..td).map(|t| full_index(k, t)).collect()).collect();
        let mut out = DMatrix::zeros(kd, kd);
        for j in 0..kd {
            for i in 0..kd {
                let mut acc = C64::new(0.0, 0.0);
                for (&r, &c) in table[i].iter().zip(&table[j]).take(td) {
                    acc += self.matrix[(r, c)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(Self { trunc: kept_trunc, matrix: out })
    }
}

/// Either a pure or a mixed state on a truncated space.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Pure(FockArray),
    Mixed(DensityOp),
}

impl State {
    pub fn truncation(&self) -> FockTruncation {
        match self {
            State::Pure(psi) => psi.truncation(),
            State::Mixed(rho) => rho.truncation(),
        }
    }

    pub fn to_density(&self) -> DensityOp {
        match self {
            State::Pure(psi) => psi.to_density(),
            State::Mixed(rho) => rho.clone(),
        }
    }

    pub fn populations(&self) -> Vec<f64> {
        match self {
            State::Pure(psi) => psi.populations(),
            State::Mixed(rho) => rho.populations(),
        }
    }

    /// Squared norm for pure states, trace for mixed ones.
    pub fn weight(&self) -> f64 {
        match self {
            State::Pure(psi) => psi.norm_sqr(),
            State::Mixed(rho) => rho.trace(),
        }
    }

    pub fn tail(&self) -> TailReport {
        match self {
            State::Pure(psi) => psi.tail(),
            State::Mixed(rho) => rho.tail(),
        }
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (State::Pure(a), State::Pure(b)) => Ok(State::Pure(a.tensor(b)?)),
            _ => Ok(State::Mixed(self.to_density().tensor(&other.to_density())?)),
        }
    }

    pub fn recut(&self, cutoff: usize) -> Result<(Self, f64)> {
        match self {
            State::Pure(psi) => psi.recut(cutoff).map(|(s, d)| (State::Pure(s), d)),
            State::Mixed(rho) => rho.recut(cutoff).map(|(s, d)| (State::Mixed(s), d)),
        }
    }

    pub fn renormalize(&self) -> Result<Self> {
        match self {
            State::Pure(psi) => psi.normalize().map(State::Pure),
            State::Mixed(rho) => rho.renormalize().map(State::Mixed),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, State::Pure(_))
    }

    /// `k` identical copies, `|ψ⟩^{⊗k}` or `ρ^{⊗k}`.
    pub fn copies(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("need at least one copy".into()));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.tensor(self)?;
        }
        Ok(acc)
    }
}

impl From<FockArray> for State {
    fn from(psi: FockArray) -> Self {
        State::Pure(psi)
    }
}

impl From<DensityOp> for State {
    fn from(rho: DensityOp) -> Self {
        State::Mixed(rho)
    }
}

pub fn tensor_product(a: &State, b: &State) -> Result<State> {
    a.tensor(b)
}

pub fn partial_trace(rho: &DensityOp, keep: &[usize]) -> Result<DensityOp> {
    rho.partial_trace(keep)
}

pub fn tail_mass(state: &State) -> TailReport {
    state.tail()
}
