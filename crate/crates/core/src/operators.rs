//! Sparse ladder, number and quadrature operators on a truncated space.
//!
//! Quadratures follow `â = (x̂ + i p̂)/√2` with ħ = 1. Products of truncated
//! matrices are exact only away from the cutoff, so identity checks compare
//! matrix elements on an interior block (see [`interior_total`]).

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{FockTruncation, State};

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ModeOperator {
    trunc: FockTruncation,
    matrix: CsrMatrix<C64>,
    hermitian: bool,
}

impl ModeOperator {
    pub fn from_csr(trunc: FockTruncation, matrix: CsrMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != trunc.dim() || matrix.ncols() != trunc.dim() {
            return Err(Error::DimensionMismatch { expected: trunc.dim(), actual: matrix.nrows() });
        }
        Ok(Self { trunc, matrix, hermitian: false })
    }

    pub fn from_triplets(trunc: FockTruncation, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let d = trunc.dim();
        let mut coo = CooMatrix::new(d, d);
        for (i, j, v) in entries {
            coo.push(i, j, v);
        }
        Self { trunc, matrix: CsrMatrix::from(&coo), hermitian: false }
    }

    pub fn zero(trunc: FockTruncation) -> Self {
        Self::from_triplets(trunc, std::iter::empty())
    }

    pub fn identity(trunc: FockTruncation) -> Self {
        let d = trunc.dim();
        Self { trunc, matrix: CsrMatrix::identity(d), hermitian: true }
    }

    pub fn annihilation(trunc: FockTruncation, mode: usize) -> Result<Self> {
        trunc.check_mode(mode)?;
        let shift = trunc.local_dim().pow((trunc.modes() - 1 - mode) as u32);
        let entries = (0..trunc.dim()).filter_map(|idx| {
            let n = trunc.occupation(idx, mode);
            (n > 0).then(|| (idx - shift, idx, C64::new((n as f64).sqrt(), 0.0)))
        });
        Ok(Self::from_triplets(trunc, entries))
    }

    pub fn creation(trunc: FockTruncation, mode: usize) -> Result<Self> {
        Ok(Self::annihilation(trunc, mode)?.adjoint())
    }

    pub fn number(trunc: FockTruncation, mode: usize) -> Result<Self> {
        trunc.check_mode(mode)?;
        let entries = (0..trunc.dim()).map(|idx| (idx, idx, C64::new(trunc.occupation(idx, mode) as f64, 0.0)));
        Ok(Self::from_triplets(trunc, entries).assume_hermitian())
    }

    pub fn quadrature_x(trunc: FockTruncation, mode: usize) -> Result<Self> {
        let a = Self::annihilation(trunc, mode)?;
        let x = (&a + &a.adjoint()).scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        Ok(x.assume_hermitian())
    }

    pub fn quadrature_p(trunc: FockTruncation, mode: usize) -> Result<Self> {
        let a = Self::annihilation(trunc, mode)?;
        let p = (&a - &a.adjoint()).scale(C64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2));
        Ok(p.assume_hermitian())
    }

    pub fn truncation(&self) -> FockTruncation {
        self.trunc
    }

    pub fn csr(&self) -> &CsrMatrix<C64> {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Sets the Hermitian flag after verifying it.
    pub fn with_hermitian_flag(mut self) -> Result<Self> {
        let defect = self.max_abs_diff(&self.adjoint());
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        self.hermitian = true;
        Ok(self)
    }

    fn assume_hermitian(mut self) -> Self {
        self.hermitian = true;
        self
    }

    pub fn adjoint(&self) -> Self {
        let mut t = self.matrix.transpose();
        t.values_mut().iter_mut().for_each(|v| *v = v.conj());
        Self { trunc: self.trunc, matrix: t, hermitian: self.hermitian }
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut m = self.matrix.clone();
        m.values_mut().iter_mut().for_each(|v| *v *= factor);
        Self { trunc: self.trunc, matrix: m, hermitian: self.hermitian && factor.im == 0.0 }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from(&self.matrix)
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.matrix.nrows());
        for (i, row) in self.matrix.row_iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (&j, &x) in row.col_indices().iter().zip(row.values()) {
                acc += x * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// `Σ_ij O_ij ρ_ji`, i.e. `Tr(ρ O)`.
    pub fn trace_with(&self, rho: &DMatrix<C64>) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (i, row) in self.matrix.row_iter().enumerate() {
            for (&j, &x) in row.col_indices().iter().zip(row.values()) {
                acc += x * rho[(j, i)];
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.max_abs_diff_on(other, |_| true)
    }

    /// Largest `|A_ij − B_ij|` over rows and columns accepted by `keep`.
    pub fn max_abs_diff_on(&self, other: &Self, keep: impl Fn(usize) -> bool) -> f64 {
        let diff = self - other;
        let mut worst: f64 = 0.0;
        for (i, row) in diff.matrix.row_iter().enumerate() {
            if !keep(i) {
                continue;
            }
            for (&j, x) in row.col_indices().iter().zip(row.values()) {
                if keep(j) {
                    worst = worst.max(x.norm());
                }
            }
        }
        worst
    }

    /// Matrix element `⟨row|O|col⟩`.
    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.matrix.get_entry(row, col).map_or(C64::new(0.0, 0.0), |e| e.into_value())
    }
}

fn check_same(a: &ModeOperator, b: &ModeOperator) {
    assert_eq!(a.trunc, b.trunc, "operators act on different truncations");
}

impl Add for &ModeOperator {
    type Output = ModeOperator;
    fn add(self, rhs: &ModeOperator) -> ModeOperator {
        check_same(self, rhs);
        ModeOperator { trunc: self.trunc, matrix: &self.matrix + &rhs.matrix, hermitian: self.hermitian && rhs.hermitian }
    }
}

impl Sub for &ModeOperator {
    type Output = ModeOperator;
    fn sub(self, rhs: &ModeOperator) -> ModeOperator {
        check_same(self, rhs);
        ModeOperator { trunc: self.trunc, matrix: &self.matrix - &rhs.matrix, hermitian: self.hermitian && rhs.hermitian }
    }
}

impl Mul for &ModeOperator {
    type Output = ModeOperator;
    fn mul(self, rhs: &ModeOperator) -> ModeOperator {
        check_same(self, rhs);
        ModeOperator { trunc: self.trunc, matrix: &self.matrix * &rhs.matrix, hermitian: false }
    }
}

impl Neg for &ModeOperator {
    type Output = ModeOperator;
    fn neg(self) -> ModeOperator {
        self.scale_re(-1.0)
    }
}

/// `⟨ψ|O|ψ⟩` or `Tr(ρ O)`.
pub fn expectation(op: &ModeOperator, state: &State) -> Result<C64> {
    if op.truncation() != state.truncation() {
        return Err(Error::DimensionMismatch { expected: op.truncation().dim(), actual: state.truncation().dim() });
    }
    Ok(match state {
        State::Pure(psi) => psi.amplitudes().dotc(&op.apply(psi.amplitudes())),
        State::Mixed(rho) => op.trace_with(rho.matrix()),
    })
}

/// Basis states whose total photon number is at most `cutoff − margin`.
pub fn interior_total(trunc: FockTruncation, margin: usize) -> impl Fn(usize) -> bool {
    let limit = trunc.cutoff().saturating_sub(margin);
    move |idx| trunc.total_photons(idx) <= limit
}

/// Basis states whose every occupation is at most `cutoff − margin`.
pub fn interior_per_mode(trunc: FockTruncation, margin: usize) -> impl Fn(usize) -> bool {
    let limit = trunc.cutoff().saturating_sub(margin);
    move |idx| (0..trunc.modes()).all(|m| trunc.occupation(idx, m) <= limit)
}

/// Ladder and quadrature operators for every mode of a truncation.
#[derive(Clone, Debug)]
pub struct ModeSet {
    pub a: Vec<ModeOperator>,
    pub a_dag: Vec<ModeOperator>,
    pub n: Vec<ModeOperator>,
    pub x: Vec<ModeOperator>,
    pub p: Vec<ModeOperator>,
}

impl ModeSet {
    pub fn new(trunc: FockTruncation) -> Result<Self> {
        let modes = 0..trunc.modes();
        let a: Vec<_> = modes.clone().map(|m| ModeOperator::annihilation(trunc, m)).collect::<Result<_>>()?;
        let a_dag = a.iter().map(ModeOperator::adjoint).collect();
        let n = modes.clone().map(|m| ModeOperator::number(trunc, m)).collect::<Result<_>>()?;
        let x = modes.clone().map(|m| ModeOperator::quadrature_x(trunc, m)).collect::<Result<_>>()?;
        let p = modes.map(|m| ModeOperator::quadrature_p(trunc, m)).collect::<Result<_>>()?;
        Ok(Self { a, a_dag, n, x, p })
    }

    /// `½ Σ_ij a_i† K_ij a_j` for a `k×k` coefficient matrix `K`.
    pub fn bilinear(&self, k: &DMatrix<C64>) -> ModeOperator {
        let trunc = self.a[0].truncation();
        let mut acc = ModeOperator::zero(trunc);
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                if k[(i, j)].norm() > 0.0 {
                    acc = &acc + &(&self.a_dag[i] * &self.a[j]).scale(k[(i, j)] * 0.5);
                }
            }
        }
        acc
    }
}
