//! Two-copy angular momentum: `L_z = ½(x₁p₂ − p₁x₂)` and its partners built
//! from two replicas of a single-mode state.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::distribution::{AngularOutcome, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::fock::{FockArray, FockTruncation, State};
use crate::operators::{ModeOperator, ModeSet};
use crate::sector::{product_density, product_vector, prune_sectors, total_photon_weights, SectorBasis};

/// Sectors whose combined weight stays below this are skipped.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-13;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn pauli() -> [DMatrix<C64>; 3] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    [
        DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        DMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
        DMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

fn require_modes(trunc: FockTruncation, modes: usize) -> Result<()> {
    if trunc.modes() != modes {
        return Err(Error::ModeCountMismatch { expected: modes, actual: trunc.modes() });
    }
    Ok(())
}

/// `L_x, L_y, L_z`, the ladder operators, `L²` and the Casimir `L₀ = ½(n₁+n₂)`.
#[derive(Clone, Debug)]
pub struct AngularComponents {
    pub lx: ModeOperator,
    pub ly: ModeOperator,
    pub lz: ModeOperator,
    pub l_plus: ModeOperator,
    pub l_minus: ModeOperator,
    pub l_sq: ModeOperator,
    pub l0: ModeOperator,
}

/// Mode-operator forms:
/// `L_x = ½(n₁ − n₂)`, `L_y = ½(a₁†a₂ + a₁a₂†)`, `L_z = (i/2)(a₁a₂† − a₁†a₂)`.
pub fn build_angular_components(trunc: FockTruncation) -> Result<AngularComponents> {
    require_modes(trunc, 2)?;
    let m = ModeSet::new(trunc)?;
    let lx = (&m.n[0] - &m.n[1]).scale_re(0.5);
    let ly = (&(&m.a_dag[0] * &m.a[1]) + &(&m.a[0] * &m.a_dag[1])).scale_re(0.5);
    let lz = (&(&m.a[0] * &m.a_dag[1]) - &(&m.a_dag[0] * &m.a[1])).scale(c(0.0, 0.5));
    let l_plus = &lx + &ly.scale(I);
    let l_minus = &lx - &ly.scale(I);
    let l_sq = &(&(&lx * &lx) + &(&ly * &ly)) + &(&lz * &lz);
    let l0 = (&m.n[0] + &m.n[1]).scale_re(0.5);
    Ok(AngularComponents {
        lx: lx.with_hermitian_flag()?,
        ly: ly.with_hermitian_flag()?,
        lz: lz.with_hermitian_flag()?,
        l_plus,
        l_minus,
        l_sq: l_sq.with_hermitian_flag()?,
        l0: l0.with_hermitian_flag()?,
    })
}

/// Quadrature forms: `L_x = ¼(x₁²+p₁²−x₂²−p₂²)`, `L_y = ½(x₁x₂+p₁p₂)`,
/// `L_z = ½(x₁p₂ − p₁x₂)`.
pub fn quadrature_forms(trunc: FockTruncation) -> Result<[ModeOperator; 3]> {
    require_modes(trunc, 2)?;
    let m = ModeSet::new(trunc)?;
    let (x, p) = (&m.x, &m.p);
    let lx = (&(&(&x[0] * &x[0]) + &(&p[0] * &p[0])) - &(&(&x[1] * &x[1]) + &(&p[1] * &p[1]))).scale_re(0.25);
    let ly = (&(&x[0] * &x[1]) + &(&p[0] * &p[1])).scale_re(0.5);
    let lz = (&(&x[0] * &p[1]) - &(&p[0] * &x[1])).scale_re(0.5);
    Ok([lx, ly, lz])
}

/// Pauli forms `½A†σA` with `A = (a₁, a₂)`: `L_x ↔ σ_z`, `L_y ↔ σ_x`, `L_z ↔ σ_y`.
pub fn pauli_forms(trunc: FockTruncation) -> Result<[ModeOperator; 3]> {
    require_modes(trunc, 2)?;
    let m = ModeSet::new(trunc)?;
    let [sx, sy, sz] = pauli();
    Ok([m.bilinear(&sz), m.bilinear(&sx), m.bilinear(&sy)])
}

/// Permutation swapping the two replicas, `|n₁,n₂⟩ → |n₂,n₁⟩`.
pub fn exchange_operator(trunc: FockTruncation) -> Result<ModeOperator> {
    require_modes(trunc, 2)?;
    let entries = (0..trunc.dim()).map(|i| {
        let occ = trunc.occupations(i);
        let j = trunc.index(&[occ[1], occ[0]]).expect("same box");
        (j, i, c(1.0, 0.0))
    });
    ModeOperator::from_triplets(trunc, entries).with_hermitian_flag()
}

/// `½A†σ_yA` restricted to `n₁+n₂ = N`.
fn lz_sector_matrix(basis: &SectorBasis) -> DMatrix<C64> {
    basis.bilinear(&pauli()[1].scale(0.5))
}

/// Eigenvectors `‖l,m⟫` of `L_z` on the two-mode sector with `2l` photons.
#[derive(Clone, Debug)]
pub struct SectorEigenbasis {
    basis: SectorBasis,
    twice_m: Vec<i64>,
    /// Columns are eigenvectors in the sector's lexicographic basis, sorted by `m`.
    vectors: DMatrix<C64>,
}

impl SectorEigenbasis {
    pub fn twice_l(&self) -> usize {
        self.basis.total()
    }

    pub fn l(&self) -> f64 {
        self.basis.total() as f64 / 2.0
    }

    pub fn basis(&self) -> &SectorBasis {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.twice_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.twice_m.is_empty()
    }

    pub fn outcome(&self, k: usize) -> AngularOutcome {
        AngularOutcome::from_twice(self.twice_m[k])
    }

    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }

    /// Eigenvector for `m = twice_m / 2`.
    pub fn vector_for(&self, twice_m: i64) -> Option<DVector<C64>> {
        self.twice_m.iter().position(|&t| t == twice_m).map(|k| self.vector(k))
    }

    /// Eigenvectors as two-mode states in a box truncation.
    pub fn to_fock_arrays(&self, trunc: FockTruncation) -> Result<Vec<FockArray>> {
        require_modes(trunc, 2)?;
        if self.twice_l() > trunc.cutoff() {
            return Err(Error::InvalidParameter(format!(
                "sector with {} photons does not fit below cutoff {}",
                self.twice_l(),
                trunc.cutoff()
            )));
        }
        (0..self.len())
            .map(|k| sector_to_fock(&self.basis, &self.vector(k), trunc))
            .collect()
    }
}

/// Embeds a sector vector into a box truncation that contains the sector.
pub fn sector_to_fock(basis: &SectorBasis, v: &DVector<C64>, trunc: FockTruncation) -> Result<FockArray> {
    let mut amps = DVector::zeros(trunc.dim());
    for (k, idx) in basis.box_indices(trunc).into_iter().enumerate() {
        match idx {
            Some(i) => amps[i] = v[k],
            None if v[k].norm() > 0.0 => {
                return Err(Error::InvalidParameter("sector vector leaves the truncation box".into()))
            }
            None => {}
        }
    }
    FockArray::new(trunc, amps)
}

/// Rotates `v` so its first non-negligible entry is real and positive.
pub fn fix_phase(v: &mut DVector<C64>) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-10 * scale.max(f64::MIN_POSITIVE)).copied() {
        let phase = lead.conj() / lead.norm();
        *v *= phase;
    }
}

/// Exact diagonalization of `L_z` on the sector with `twice_l` photons.
pub fn sector_eigenbasis(twice_l: usize) -> SectorEigenbasis {
    let basis = SectorBasis::new(2, twice_l).expect("two modes");
    let eig = SymmetricEigen::new(lz_sector_matrix(&basis));
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = DMatrix::zeros(basis.len(), basis.len());
    let mut twice_m = Vec::with_capacity(basis.len());
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned();
        fix_phase(&mut v);
        vectors.set_column(col, &v);
        twice_m.push((2.0 * eig.eigenvalues[k]).round() as i64);
    }
    SectorEigenbasis { basis, twice_m, vectors }
}

/// Shared read-only cache of sector eigenbases.
pub fn cached_sector_eigenbasis(twice_l: usize) -> Arc<SectorEigenbasis> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SectorEigenbasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("cache poisoned").get(&twice_l) {
        return hit.clone();
    }
    let fresh = Arc::new(sector_eigenbasis(twice_l));
    cache.lock().expect("cache poisoned").entry(twice_l).or_insert(fresh).clone()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn i_pow(k: usize) -> C64 {
    [c(1.0, 0.0), I, c(-1.0, 0.0), -I][k % 4]
}

/// Closed-form lowest-weight vector `‖l,−l⟫`, normalized, on the sector basis:
/// `Σ_k i^k √C(2l,k) (|k,2l−k⟩ + (−1)^k i^{2l} |2l−k,k⟩) + [2l even] i^l √C(2l,l) |l,l⟩`.
pub fn closed_form_lowest_weight(twice_l: usize) -> DVector<C64> {
    let basis = SectorBasis::new(2, twice_l).expect("two modes");
    let n = twice_l;
    let mut v = DVector::zeros(basis.len());
    // ⌊l − ½⌋ = ⌊(2l − 1)/2⌋, empty for l = 0
    if n >= 1 {
        for k in 0..=(n - 1) / 2 {
            let w = i_pow(k) * binomial(n, k).sqrt();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            v[basis.index(&[k, n - k]).expect("in sector")] += w;
            v[basis.index(&[n - k, k]).expect("in sector")] += w * i_pow(n) * sign;
        }
    }
    if n.is_multiple_of(2) {
        let l = n / 2;
        v[basis.index(&[l, l]).expect("in sector")] += i_pow(l) * binomial(n, l).sqrt();
    }
    v.normalize()
}

fn double_factorial(n: i64) -> f64 {
    if n <= 0 {
        return 1.0;
    }
    (1..=n).rev().step_by(2).map(|k| k as f64).product()
}

/// Closed-form `‖l,0⟫` for integer `l`, normalized, on the sector basis with `2l` photons.
pub fn closed_form_m0(l: usize) -> DVector<C64> {
    let basis = SectorBasis::new(2, 2 * l).expect("two modes");
    let df = |n: usize| double_factorial(n as i64);
    let dfm = |n: i64| double_factorial(n);
    let mut v = DVector::zeros(basis.len());
    if l.is_multiple_of(2) {
        let beta = (df(2 * l) * dfm(l as i64 - 1).powi(2) / (df(l).powi(2) * dfm(2 * l as i64 - 1))).sqrt();
        v[basis.index(&[l, l]).expect("in sector")] += c(beta, 0.0);
    }
    // ⌊l/2 − ½⌋, empty for l = 0
    if l >= 1 {
        for i in 0..=(l - 1) / 2 {
            let alpha = (df(2 * l) * dfm(2 * l as i64 - 2 * i as i64 - 1) * dfm(2 * i as i64 - 1)
                / (df(2 * l - 2 * i) * dfm(2 * l as i64 - 1) * df(2 * i)))
                .sqrt();
            v[basis.index(&[2 * i, 2 * l - 2 * i]).expect("in sector")] += c(alpha, 0.0);
            v[basis.index(&[2 * l - 2 * i, 2 * i]).expect("in sector")] += c(alpha, 0.0);
        }
    }
    v.normalize()
}

/// `L₊` on the sector basis (it preserves the photon number).
pub fn raising_sector_matrix(twice_l: usize) -> DMatrix<C64> {
    let basis = SectorBasis::new(2, twice_l).expect("two modes");
    let [sx, _, sz] = pauli();
    basis.bilinear(&(sz + sx * I).scale(0.5))
}

/// Full ladder `‖l,−l⟫, …, ‖l,l⟫` generated from the lowest weight by `L₊`.
pub fn ladder_from_lowest_weight(twice_l: usize) -> Vec<DVector<C64>> {
    let raise = raising_sector_matrix(twice_l);
    let l = twice_l as f64 / 2.0;
    let mut out = vec![closed_form_lowest_weight(twice_l)];
    for step in 0..twice_l {
        let m = -l + step as f64;
        let next = &raise * out.last().expect("nonempty") / c((l * (l + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        out.push(next);
    }
    out
}

/// Options for the projector route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistributionOptions {
    pub prune_tol: f64,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        Self { prune_tol: DEFAULT_PRUNE_TOL }
    }
}

pub(crate) fn single_mode(state: &State) -> Result<()> {
    require_modes(state.truncation(), 1)
}

/// Sector blocks of `k` copies of a one-mode state.
pub(crate) enum CopyBlocks {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

pub(crate) fn copy_block(state: &State, basis: &SectorBasis) -> CopyBlocks {
    let k = basis.modes();
    match state {
        State::Pure(psi) => CopyBlocks::Pure(product_vector(&vec![psi.amplitudes(); k], basis)),
        State::Mixed(rho) => CopyBlocks::Mixed(product_density(&vec![rho.matrix(); k], basis)),
    }
}

/// Highest sector worth visiting for `copies` replicas and the weight skipped beyond it.
pub(crate) fn sector_range(state: &State, copies: usize, prune_tol: f64) -> (usize, f64) {
    let pops = state.populations();
    let max_total = copies * state.truncation().cutoff();
    let weights = total_photon_weights(&vec![pops.as_slice(); copies], max_total);
    prune_sectors(&weights, prune_tol)
}

/// `p_m = Σ_l ⟪l,m‖ρ⊗ρ‖l,m⟫`, evaluated sector by sector.
pub fn outcome_distribution_lz(state: &State) -> Result<OutcomeDistribution> {
    outcome_distribution_lz_with(state, DistributionOptions::default())
}

pub fn outcome_distribution_lz_with(state: &State, options: DistributionOptions) -> Result<OutcomeDistribution> {
    single_mode(state)?;
    let (last, skipped) = sector_range(state, 2, options.prune_tol);
    let mut dist = OutcomeDistribution::new();
    for n in 0..=last {
        let eig = cached_sector_eigenbasis(n);
        let block = copy_block(state, eig.basis());
        let v = eig.vectors();
        match block {
            CopyBlocks::Pure(psi) => {
                let amps = v.adjoint() * psi;
                for (k, a) in amps.iter().enumerate() {
                    dist.add(eig.outcome(k), a.norm_sqr());
                }
            }
            CopyBlocks::Mixed(rho) => {
                let rv = rho * v;
                for k in 0..eig.len() {
                    dist.add(eig.outcome(k), v.column(k).dotc(&rv.column(k)).re);
                }
            }
        }
    }
    Ok(dist.with_truncation_loss(skipped).with_tail_mass(state.tail().tail_mass))
}

/// Entropy (nats) and variance of an outcome distribution.
#[derive(Clone, Debug)]
pub struct ObservableReport {
    pub distribution: OutcomeDistribution,
    pub entropy: f64,
    pub variance: f64,
}

impl ObservableReport {
    pub fn from_distribution(distribution: OutcomeDistribution) -> Self {
        let entropy = distribution.entropy();
        let variance = distribution.second_moment();
        Self { distribution, entropy, variance }
    }
}

/// Entropy and variance `Σ m² p_m` of the two-copy observable.
pub fn entropy_and_variance_lz(state: &State) -> Result<ObservableReport> {
    Ok(ObservableReport::from_distribution(outcome_distribution_lz(state)?))
}
