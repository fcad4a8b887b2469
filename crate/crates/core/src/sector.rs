//! Fixed-total-photon-number subspaces of up to three modes.
//!
//! Every observable in this crate and every passive optical element commutes
//! with the total photon number, so outcome distributions can be assembled one
//! sector at a time. A sector basis has no per-mode cutoff: a state that lives
//! in a truncated box simply has zero amplitude on out-of-box sector states.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{DensityOp, FockArray, FockTruncation, MAX_MODES};
use crate::linalg::exp_minus_i;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Number of occupation tuples of `modes` modes summing to `total`.
pub fn sector_dim(modes: usize, total: usize) -> usize {
    match modes {
        0 => usize::from(total == 0),
        1 => 1,
        2 => total + 1,
        3 => (total + 1) * (total + 2) / 2,
        _ => unreachable!("at most three modes"),
    }
}

/// Occupation tuples with a fixed total, in lexicographic order.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    modes: usize,
    total: usize,
    states: Vec<[usize; MAX_MODES]>,
}

impl SectorBasis {
    pub fn new(modes: usize, total: usize) -> Result<Self> {
        if modes == 0 || modes > MAX_MODES {
            return Err(Error::TooManyModes { modes, max: MAX_MODES });
        }
        let mut states = Vec::with_capacity(sector_dim(modes, total));
        match modes {
            1 => states.push([total, 0, 0]),
            2 => states.extend((0..=total).map(|n1| [n1, total - n1, 0])),
            _ => {
                for n1 in 0..=total {
                    for n2 in 0..=total - n1 {
                        states.push([n1, n2, total - n1 - n2]);
                    }
                }
            }
        }
        Ok(Self { modes, total, states })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn occupations(&self, idx: usize) -> &[usize] {
        &self.states[idx][..self.modes]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.states.iter().map(move |s| &s[..self.modes])
    }

    pub fn index(&self, occ: &[usize]) -> Option<usize> {
        if occ.len() != self.modes || occ.iter().sum::<usize>() != self.total {
            return None;
        }
        Some(match self.modes {
            1 => 0,
            2 => occ[0],
            _ => {
                // rows n1' < n1 hold (N - n1' + 1) states each
                let n1 = occ[0];
                n1 * (self.total + 1) - n1 * n1.saturating_sub(1) / 2 + occ[1]
            }
        })
    }

    /// Position of each sector state inside a box truncation, if it fits.
    pub fn box_indices(&self, trunc: FockTruncation) -> Vec<Option<usize>> {
        self.iter().map(|occ| trunc.index(occ)).collect()
    }

    /// Matrix of `Σ_ij K_ij a_i† a_j` on this sector.
    pub fn bilinear(&self, k: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(k.nrows(), self.modes, "coefficient matrix must match the mode count");
        let d = self.len();
        let mut out = DMatrix::zeros(d, d);
        let mut target = [0usize; MAX_MODES];
        for (col, occ) in self.iter().enumerate() {
            for i in 0..self.modes {
                out[(col, col)] += k[(i, i)] * occ[i] as f64;
                for j in 0..self.modes {
                    if i == j || occ[j] == 0 || k[(i, j)] == ZERO {
                        continue;
                    }
                    target[..self.modes].copy_from_slice(occ);
                    target[j] -= 1;
                    target[i] += 1;
                    let row = self.index(&target[..self.modes]).expect("same sector");
                    out[(row, col)] += k[(i, j)] * (((occ[i] + 1) * occ[j]) as f64).sqrt();
                }
            }
        }
        out
    }
}

/// A passive element acting on one or two modes: `exp(−i Σ h_ij a_i† a_j)`
/// with `i, j` running over `targets`.
#[derive(Clone, Debug)]
pub struct PassiveStep {
    targets: Vec<usize>,
    generator: DMatrix<C64>,
}

impl PassiveStep {
    pub fn new(targets: Vec<usize>, generator: DMatrix<C64>) -> Result<Self> {
        if targets.is_empty() || targets.len() > 2 || generator.nrows() != targets.len() || !generator.is_square() {
            return Err(Error::InvalidModeSet(format!("passive step on {:?}", targets)));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::InvalidModeSet("beam splitter modes must differ".into()));
        }
        Ok(Self { targets, generator })
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn generator(&self) -> &DMatrix<C64> {
        &self.generator
    }

    /// The element restricted to `k` photons in its target modes, in the
    /// lexicographic order of the target pair.
    pub fn local_unitary(&self, k: usize) -> DMatrix<C64> {
        let basis = SectorBasis::new(self.targets.len(), k).expect("one or two modes");
        exp_minus_i(&basis.bilinear(&self.generator))
    }
}

/// Index groups of a sector that a step mixes among themselves.
struct Group {
    local_total: usize,
    members: Vec<usize>,
}

fn groups(basis: &SectorBasis, targets: &[usize]) -> Vec<Group> {
    let mut by_key: BTreeMap<[usize; MAX_MODES], usize> = BTreeMap::new();
    let mut out: Vec<Group> = Vec::new();
    for (idx, occ) in basis.iter().enumerate() {
        let mut key = [usize::MAX; MAX_MODES];
        for (m, &n) in occ.iter().enumerate() {
            if !targets.contains(&m) {
                key[m] = n;
            }
        }
        let local_total: usize = targets.iter().map(|&m| occ[m]).sum();
        let slot = *by_key.entry(key).or_insert_with(|| {
            out.push(Group { local_total, members: vec![usize::MAX; local_total + 1] });
            out.len() - 1
        });
        let position = if targets.len() == 1 { 0 } else { occ[targets[0]] };
        out[slot].members[position] = idx;
    }
    for g in &mut out {
        if targets.len() == 1 {
            g.members.truncate(1);
        }
    }
    out
}

/// A sequence of passive steps with cached sector unitaries.
#[derive(Clone, Debug)]
pub struct SectorPropagator {
    modes: usize,
    steps: Vec<PassiveStep>,
    cache: Vec<Vec<DMatrix<C64>>>,
}

impl SectorPropagator {
    /// Precomputes local unitaries for all sectors up to `max_total` photons.
    pub fn new(modes: usize, steps: Vec<PassiveStep>, max_total: usize) -> Result<Self> {
        for s in &steps {
            for &m in s.targets() {
                if m >= modes {
                    return Err(Error::InvalidMode { mode: m, modes });
                }
            }
        }
        let cache = steps.iter().map(|s| (0..=max_total).map(|k| s.local_unitary(k)).collect()).collect();
        Ok(Self { modes, steps, cache })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn max_total(&self) -> usize {
        self.cache.first().map_or(usize::MAX, |c| c.len() - 1)
    }

    fn check(&self, basis: &SectorBasis) {
        assert_eq!(basis.modes(), self.modes, "sector mode count");
        assert!(basis.total() <= self.max_total(), "sector beyond the precomputed range");
    }

    /// Applies the whole sequence to the rows of `block` (vectors are single columns).
    pub fn apply_left(&self, basis: &SectorBasis, block: &mut DMatrix<C64>) {
        self.check(basis);
        for (s, step) in self.steps.iter().enumerate() {
            apply_step(basis, step.targets(), &self.cache[s], block);
        }
    }

    pub fn apply_vector(&self, basis: &SectorBasis, v: &DVector<C64>) -> DVector<C64> {
        let mut m = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
        self.apply_left(basis, &mut m);
        DVector::from_column_slice(m.as_slice())
    }

    /// `U_row · block · U_col†` for a block between sectors `rows` and `cols`.
    pub fn conjugate_block(&self, rows: &SectorBasis, cols: &SectorBasis, block: &DMatrix<C64>) -> DMatrix<C64> {
        let mut left = block.clone();
        self.apply_left(rows, &mut left);
        let mut adj = left.adjoint();
        self.apply_left(cols, &mut adj);
        adj.adjoint()
    }

    /// Diagonal of `U ρ U†` for a density block on one sector.
    pub fn output_diagonal(&self, basis: &SectorBasis, rho: &DMatrix<C64>) -> Vec<f64> {
        self.check(basis);
        let Some((last, init)) = self.steps.split_last() else {
            return rho.diagonal().iter().map(|z| z.re).collect();
        };
        if is_scalar_multiple_of_identity(rho) {
            return rho.diagonal().iter().map(|z| z.re).collect();
        }
        let n_init = init.len();
        let mut work = rho.clone();
        for (s, step) in init.iter().enumerate() {
            apply_step(basis, step.targets(), &self.cache[s], &mut work);
        }
        let mut adj = work.adjoint();
        for (s, step) in init.iter().enumerate() {
            apply_step(basis, step.targets(), &self.cache[s], &mut adj);
        }
        // adj = (U_init ρ U_init†)†; Hermitian, so reuse it directly
        let mut diag = vec![0.0; basis.len()];
        for g in groups(basis, last.targets()) {
            let v = &self.cache[n_init][g.local_total];
            let sub = DMatrix::from_fn(g.members.len(), g.members.len(), |a, b| adj[(g.members[a], g.members[b])]);
            let out = v * sub * v.adjoint();
            for (a, &idx) in g.members.iter().enumerate() {
                diag[idx] = out[(a, a)].re;
            }
        }
        diag
    }

    /// Output populations for a pure sector vector.
    pub fn output_populations(&self, basis: &SectorBasis, v: &DVector<C64>) -> Vec<f64> {
        self.apply_vector(basis, v).iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Passive unitaries leave such blocks unchanged. Entries are compared to
/// rounding precision because products of populations are not bit-identical.
fn is_scalar_multiple_of_identity(m: &DMatrix<C64>) -> bool {
    let d = m[(0, 0)];
    let tol = 1e-13 * d.norm();
    m.iter().enumerate().all(|(k, z)| {
        let target = if k % (m.nrows() + 1) == 0 { d } else { ZERO };
        (*z - target).norm() <= tol
    })
}

fn apply_step(basis: &SectorBasis, targets: &[usize], unitaries: &[DMatrix<C64>], block: &mut DMatrix<C64>) {
    let groups = groups(basis, targets);
    let mut out = Vec::new();
    for col in 0..block.ncols() {
        let mut column = block.column_mut(col);
        for g in &groups {
            let u = unitaries[g.local_total].as_slice();
            let b = g.members.len();
            if b == 1 {
                column[g.members[0]] *= u[0];
                continue;
            }
            out.clear();
            out.resize(b, ZERO);
            let mut touched = false;
            for (c, &src) in g.members.iter().enumerate() {
                let x = column[src];
                if x == ZERO {
                    continue;
                }
                touched = true;
                // column-major: u[(a, c)] sits at c·b + a
                for (acc, &uac) in out.iter_mut().zip(&u[c * b..(c + 1) * b]) {
                    *acc += uac * x;
                }
            }
            if touched {
                for (&row, &v) in g.members.iter().zip(&out) {
                    column[row] = v;
                }
            }
        }
    }
}

/// Sector component of a product of single-mode pure states.
pub fn product_vector(factors: &[&DVector<C64>], basis: &SectorBasis) -> DVector<C64> {
    assert_eq!(factors.len(), basis.modes());
    DVector::from_iterator(
        basis.len(),
        basis.iter().map(|occ| {
            occ.iter()
                .zip(factors)
                .map(|(&n, f)| f.get(n).copied().unwrap_or(ZERO))
                .product()
        }),
    )
}

/// Diagonal sector block of a product of single-mode density matrices.
pub fn product_density(factors: &[&DMatrix<C64>], basis: &SectorBasis) -> DMatrix<C64> {
    assert_eq!(factors.len(), basis.modes());
    let d = basis.len();
    let local = factors[0].nrows();
    let occs: Vec<&[usize]> = basis.iter().collect();
    DMatrix::from_fn(d, d, |r, c| {
        let (a, b) = (occs[r], occs[c]);
        let mut acc = C64::new(1.0, 0.0);
        for m in 0..factors.len() {
            if a[m] >= local || b[m] >= local {
                return ZERO;
            }
            acc *= factors[m][(a[m], b[m])];
            if acc == ZERO {
                return ZERO;
            }
        }
        acc
    })
}

/// Sector component of a box-truncated pure state.
pub fn restrict_vector(state: &FockArray, basis: &SectorBasis) -> DVector<C64> {
    let amps = state.amplitudes();
    DVector::from_iterator(
        basis.len(),
        basis.box_indices(state.truncation()).into_iter().map(|i| i.map_or(ZERO, |i| amps[i])),
    )
}

/// Block of a box-truncated density operator between two sectors.
pub fn restrict_density(rho: &DensityOp, rows: &SectorBasis, cols: &SectorBasis) -> DMatrix<C64> {
    let r = rows.box_indices(rho.truncation());
    let c = cols.box_indices(rho.truncation());
    let m = rho.matrix();
    DMatrix::from_fn(r.len(), c.len(), |a, b| match (r[a], c[b]) {
        (Some(i), Some(j)) => m[(i, j)],
        _ => ZERO,
    })
}

/// Distribution of the total photon number of `populations.len()` independent
/// modes, truncated at `max_total`.
pub fn total_photon_weights(populations: &[&[f64]], max_total: usize) -> Vec<f64> {
    let mut acc = vec![0.0; max_total + 1];
    acc[0] = 1.0;
    for pops in populations {
        let mut next = vec![0.0; max_total + 1];
        for (n, &w) in acc.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (k, &p) in pops.iter().enumerate() {
                if n + k > max_total {
                    break;
                }
                next[n + k] += w * p;
            }
        }
        acc = next;
    }
    acc
}

/// Largest sector worth keeping: drops the high-photon tail whose total
/// weight stays below `prune_tol`. Returns the last kept total and the dropped weight.
pub fn prune_sectors(weights: &[f64], prune_tol: f64) -> (usize, f64) {
    let mut dropped = 0.0;
    let mut last = weights.len().saturating_sub(1);
    while last > 0 && dropped + weights[last].max(0.0) < prune_tol {
        dropped += weights[last].max(0.0);
        last -= 1;
    }
    (last, dropped)
}
