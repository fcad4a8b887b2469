//! Three-copy observable `M = (M_x + M_y + M_z)/√3`, where `M_x, M_y, M_z`
//! are the two-copy angular momenta on the pairs (2,3), (3,1) and (1,2).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::circuits::{copies_readout, CircuitPreset};
use crate::distribution::{AngularOutcome, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::fock::{FockTruncation, State};
use crate::gaussian::{apply_unitary, compose_circuit_mode_matrix, BeamSplitterConvention, GaussianUnitarySpec};
use crate::operators::{ModeOperator, ModeSet};
use crate::sector::{PassiveStep, SectorBasis, SectorPropagator};
use crate::two_copy::{copy_block, sector_range, single_mode, CopyBlocks, ObservableReport};

/// Default tolerance for skipping high photon-number sectors of three copies.
pub const THREE_COPY_PRUNE_TOL: f64 = 1e-11;

/// Largest sector dimension handled by the diagonalization route.
pub const MAX_DIAGONAL_SECTOR_DIM: usize = 1300;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn antisymmetric(i: usize, j: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(3, 3);
    m[(i, j)] = c(0.0, -1.0);
    m[(j, i)] = c(0.0, 1.0);
    m
}

/// `S_x = λ₇`, `S_y = −λ₅`, `S_z = λ₂`, so that `M_i = ½A†S_iA`.
pub fn gell_mann_generators() -> [DMatrix<C64>; 3] {
    [antisymmetric(1, 2), antisymmetric(2, 0), antisymmetric(0, 1)]
}

/// `(S_x + S_y + S_z)/√3`.
pub fn combined_generator() -> DMatrix<C64> {
    let [sx, sy, sz] = gell_mann_generators();
    (sx + sy + sz) / c(3f64.sqrt(), 0.0)
}

#[derive(Clone, Debug)]
pub struct ThreeCopyOperators {
    pub mx: ModeOperator,
    pub my: ModeOperator,
    pub mz: ModeOperator,
    pub m: ModeOperator,
}

fn require_three(trunc: FockTruncation) -> Result<()> {
    if trunc.modes() != 3 {
        return Err(Error::ModeCountMismatch { expected: 3, actual: trunc.modes() });
    }
    Ok(())
}

/// `(i/2)(a_j a_k† − a_j† a_k)`.
fn pair_momentum(set: &ModeSet, j: usize, k: usize) -> ModeOperator {
    (&(&set.a[j] * &set.a_dag[k]) - &(&set.a_dag[j] * &set.a[k])).scale(c(0.0, 0.5))
}

fn assemble(mx: ModeOperator, my: ModeOperator, mz: ModeOperator) -> Result<ThreeCopyOperators> {
    let m = (&(&mx + &my) + &mz).scale_re(1.0 / 3f64.sqrt());
    Ok(ThreeCopyOperators {
        mx: mx.with_hermitian_flag()?,
        my: my.with_hermitian_flag()?,
        mz: mz.with_hermitian_flag()?,
        m: m.with_hermitian_flag()?,
    })
}

/// Mode-operator construction.
pub fn build_three_copy(trunc: FockTruncation) -> Result<ThreeCopyOperators> {
    require_three(trunc)?;
    let set = ModeSet::new(trunc)?;
    assemble(pair_momentum(&set, 1, 2), pair_momentum(&set, 2, 0), pair_momentum(&set, 0, 1))
}

/// `M_x = ½(x₂p₃ − p₂x₃)` and cyclic.
pub fn build_three_copy_quadrature(trunc: FockTruncation) -> Result<ThreeCopyOperators> {
    require_three(trunc)?;
    let set = ModeSet::new(trunc)?;
    let l = |j: usize, k: usize| (&(&set.x[j] * &set.p[k]) - &(&set.p[j] * &set.x[k])).scale_re(0.5);
    assemble(l(1, 2), l(2, 0), l(0, 1))
}

/// `M_i = ½A†S_iA` with the Gell-Mann generators.
pub fn build_three_copy_gell_mann(trunc: FockTruncation) -> Result<ThreeCopyOperators> {
    require_three(trunc)?;
    let set = ModeSet::new(trunc)?;
    let [sx, sy, sz] = gell_mann_generators();
    assemble(set.bilinear(&sx), set.bilinear(&sy), set.bilinear(&sz))
}

/// `¼(N(N+1) − (Σa†²)(Σa²))`, which equals `M_x² + M_y² + M_z²`.
pub fn casimir_closed_form(trunc: FockTruncation) -> Result<ModeOperator> {
    require_three(trunc)?;
    let set = ModeSet::new(trunc)?;
    let total = (0..3).fold(ModeOperator::zero(trunc), |acc, i| &acc + &set.n[i]);
    let pair_create = (0..3).fold(ModeOperator::zero(trunc), |acc, i| &acc + &(&set.a_dag[i] * &set.a_dag[i]));
    let pair_destroy = pair_create.adjoint();
    let nn = &total * &(&total + &ModeOperator::identity(trunc));
    Ok((&nn - &(&pair_create * &pair_destroy)).scale_re(0.25))
}

/// `M` restricted to the three-mode sector `basis`.
pub fn m_sector_matrix(basis: &SectorBasis) -> DMatrix<C64> {
    basis.bilinear(&(combined_generator() * c(0.5, 0.0)))
}

/// Eigendecomposition of `M` on one sector; eigenvalues are multiples of ½.
#[derive(Clone, Debug)]
pub struct MSectorEigenbasis {
    pub basis: SectorBasis,
    pub twice_m: Vec<i64>,
    pub vectors: DMatrix<C64>,
}

pub fn m_sector_eigenbasis(total: usize) -> Result<MSectorEigenbasis> {
    let basis = SectorBasis::new(3, total)?;
    if basis.len() > MAX_DIAGONAL_SECTOR_DIM {
        return Err(Error::Infeasible(format!(
            "diagonalizing a sector of dimension {} exceeds the limit {MAX_DIAGONAL_SECTOR_DIM}",
            basis.len()
        )));
    }
    let eig = SymmetricEigen::new(m_sector_matrix(&basis));
    let twice_m = eig.eigenvalues.iter().map(|&v| (2.0 * v).round() as i64).collect();
    Ok(MSectorEigenbasis { basis, twice_m, vectors: eig.eigenvectors })
}

fn cached_m_eigenbasis(total: usize) -> Result<Arc<MSectorEigenbasis>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<MSectorEigenbasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("cache poisoned").get(&total) {
        return Ok(hit.clone());
    }
    let fresh = Arc::new(m_sector_eigenbasis(total)?);
    Ok(cache.lock().expect("cache poisoned").entry(total).or_insert(fresh).clone())
}

/// Distribution of `M` on `ρ⊗ρ⊗ρ` through the three-copy circuit readout.
pub fn outcome_distribution_m(state: &State) -> Result<OutcomeDistribution> {
    outcome_distribution_m_with(state, THREE_COPY_PRUNE_TOL)
}

pub fn outcome_distribution_m_with(state: &State, prune_tol: f64) -> Result<OutcomeDistribution> {
    let p = CircuitPreset::ThreeCopy;
    copies_readout(state, 3, &p.elements(), p.readout_pair(), prune_tol)
}

/// Distribution of `M` by diagonalizing it on every photon-number sector.
pub fn outcome_distribution_m_diagonal(state: &State) -> Result<OutcomeDistribution> {
    single_mode(state)?;
    let (last, skipped) = sector_range(state, 3, THREE_COPY_PRUNE_TOL);
    let mut dist = OutcomeDistribution::new();
    for n in 0..=last {
        let eig = cached_m_eigenbasis(n)?;
        let v = &eig.vectors;
        match copy_block(state, &eig.basis) {
            CopyBlocks::Pure(psi) => {
                let amps = v.adjoint() * psi;
                for (k, a) in amps.iter().enumerate() {
                    dist.add(AngularOutcome::from_twice(eig.twice_m[k]), a.norm_sqr());
                }
            }
            CopyBlocks::Mixed(rho) => {
                let rv = rho * v;
                for k in 0..v.ncols() {
                    dist.add(AngularOutcome::from_twice(eig.twice_m[k]), v.column(k).dotc(&rv.column(k)).re);
                }
            }
        }
    }
    Ok(dist.with_truncation_loss(skipped).with_tail_mass(state.tail().tail_mass))
}

pub fn entropy_and_variance_m(state: &State) -> Result<ObservableReport> {
    Ok(ObservableReport::from_distribution(outcome_distribution_m(state)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct DisplacementReport {
    pub total_variation: f64,
    /// Weight lost when displacing the truncated state.
    pub dropped: f64,
    pub displaced_tail: f64,
    /// Image of the uniform displacement `(α, α, α)` under the merging stage.
    #[serde(skip)]
    pub merged: [C64; 3],
    /// Distance of that image from `(√3α, 0, 0)`.
    pub merged_defect: f64,
}

/// Compares the distribution of `M` for `ρ` and for `D(α)ρD(α)†`.
pub fn displacement_invariance_check(state: &State, alpha: C64) -> Result<DisplacementReport> {
    single_mode(state)?;
    let evolved = apply_unitary(&GaussianUnitarySpec::displace(0, alpha), state)?;
    let displaced = evolved.state.renormalize()?;
    let total_variation = outcome_distribution_m(state)?.total_variation(&outcome_distribution_m(&displaced)?);
    let t = compose_circuit_mode_matrix(&CircuitPreset::merging_stage(), 3)?;
    let image = t * nalgebra::DVector::from_element(3, alpha);
    let target = [alpha * 3f64.sqrt(), c(0.0, 0.0), c(0.0, 0.0)];
    let merged_defect = (0..3).map(|i| (image[i] - target[i]).norm()).fold(0.0, f64::max);
    Ok(DisplacementReport {
        total_variation,
        dropped: evolved.dropped,
        displaced_tail: displaced.tail().tail_mass,
        merged: [image[0], image[1], image[2]],
        merged_defect,
    })
}

/// Largest entry of `R M_x R† − M_x` over sectors up to `max_total` photons,
/// where `R` is a real rotation by `theta` between modes 2 and 3.
pub fn mx_rotation_residual(theta: f64, max_total: usize) -> Result<f64> {
    let rotation = GaussianUnitarySpec::beam_splitter(1, 2, theta.cos().powi(2)).with_convention(BeamSplitterConvention::Rotation);
    let step: PassiveStep = rotation.passive_step()?;
    let prop = SectorPropagator::new(3, vec![step], max_total)?;
    let sx = &gell_mann_generators()[0] * c(0.5, 0.0);
    let mut worst: f64 = 0.0;
    for n in 0..=max_total {
        let basis = SectorBasis::new(3, n)?;
        let mx = basis.bilinear(&sx);
        let moved = prop.conjugate_block(&basis, &basis, &mx);
        worst = worst.max(crate::linalg::max_abs(&(moved - mx)));
    }
    Ok(worst)
}
