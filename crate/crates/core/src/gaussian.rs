//! Gaussian unitaries: phase rotations, squeezers, displacements and beam
//! splitters, applied to truncated states by exponentiating their quadratic
//! generators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityOp, FockArray, FockTruncation, State, TailReport};
use crate::linalg::{exp_minus_i_blockwise, unitary_generator};
use crate::sector::{restrict_density, restrict_vector, PassiveStep, SectorBasis, SectorPropagator};
use crate::serde_util::{complex_pair, one_based, one_based_pair};

/// Largest padded single-mode space used when exponentiating a squeezer or
/// displacement.
pub const MAX_WORK_CUTOFF: usize = 2000;

/// Sign convention of the beam-splitter mode matrix on `(a_i, a_j)`.
///
/// `Reflection` is `[[√t, √(1−t)], [√(1−t), −√t]]`, the convention under
/// which the two-copy and three-copy circuits produce the expected output
/// modes. `Rotation` is `[[√t, −√(1−t)], [√(1−t), √t]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamSplitterConvention {
    #[default]
    Reflection,
    Rotation,
}

/// One Gaussian element. Mode labels are 0-based in Rust and 1-based in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GaussianUnitarySpec {
    /// `exp(−iθ n)`, so `a → e^{−iθ} a`.
    PhaseRotation {
        #[serde(with = "one_based")]
        mode: usize,
        theta: f64,
    },
    /// `exp(½(s* a² − s a†²))`.
    Squeeze {
        #[serde(with = "one_based")]
        mode: usize,
        #[serde(with = "complex_pair")]
        s: C64,
    },
    /// `exp(α a† − α* a)`.
    Displace {
        #[serde(with = "one_based")]
        mode: usize,
        #[serde(with = "complex_pair")]
        alpha: C64,
    },
    BeamSplitter {
        #[serde(with = "one_based_pair")]
        modes: [usize; 2],
        transmittance: f64,
        #[serde(default)]
        convention: BeamSplitterConvention,
    },
}

impl GaussianUnitarySpec {
    pub fn phase_rotation(mode: usize, theta: f64) -> Self {
        Self::PhaseRotation { mode, theta }
    }

    pub fn squeeze(mode: usize, r: f64, phi: f64) -> Self {
        Self::Squeeze { mode, s: C64::from_polar(r, phi) }
    }

    pub fn displace(mode: usize, alpha: C64) -> Self {
        Self::Displace { mode, alpha }
    }

    pub fn beam_splitter(first: usize, second: usize, transmittance: f64) -> Self {
        Self::BeamSplitter { modes: [first, second], transmittance, convention: BeamSplitterConvention::default() }
    }

    pub fn with_convention(self, convention: BeamSplitterConvention) -> Self {
        match self {
            Self::BeamSplitter { modes, transmittance, .. } => Self::BeamSplitter { modes, transmittance, convention },
            other => other,
        }
    }

    pub fn is_passive(&self) -> bool {
        matches!(self, Self::PhaseRotation { .. } | Self::BeamSplitter { .. })
    }

    pub fn targets(&self) -> Vec<usize> {
        match *self {
            Self::PhaseRotation { mode, .. } | Self::Squeeze { mode, .. } | Self::Displace { mode, .. } => vec![mode],
            Self::BeamSplitter { modes, .. } => modes.to_vec(),
        }
    }

    pub fn validate(&self, modes: usize) -> Result<()> {
        for m in self.targets() {
            if m >= modes {
                return Err(Error::InvalidMode { mode: m, modes });
            }
        }
        let finite = match *self {
            Self::PhaseRotation { theta, .. } => theta.is_finite(),
            Self::Squeeze { s, .. } => s.is_finite(),
            Self::Displace { alpha, .. } => alpha.is_finite(),
            Self::BeamSplitter { modes: [a, b], transmittance, .. } => {
                if a == b {
                    return Err(Error::InvalidModeSet(format!("beam splitter needs two distinct modes, got {a} twice")));
                }
                if !(0.0..=1.0).contains(&transmittance) {
                    return Err(Error::InvalidParameter(format!("transmittance {transmittance} outside [0, 1]")));
                }
                true
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidParameter("non-finite element parameter".into()))
        }
    }

    /// Heisenberg-picture matrix `T` with `U† a_i U = Σ_j T_ij a_j` on the
    /// element's own modes.
    fn local_mode_matrix(&self) -> Result<DMatrix<C64>> {
        match *self {
            Self::PhaseRotation { theta, .. } => Ok(DMatrix::from_element(1, 1, C64::from_polar(1.0, -theta))),
            Self::BeamSplitter { transmittance, convention, .. } => {
                let t = transmittance.sqrt();
                let r = (1.0 - transmittance).max(0.0).sqrt();
                let entries = match convention {
                    BeamSplitterConvention::Reflection => [t, r, r, -t],
                    BeamSplitterConvention::Rotation => [t, -r, r, t],
                };
                Ok(DMatrix::from_row_iterator(2, 2, entries.into_iter().map(|x| C64::new(x, 0.0))))
            }
            _ => Err(Error::NotPassive(format!("{self:?}"))),
        }
    }

    /// The element's mode matrix embedded in `modes` modes.
    pub fn mode_matrix(&self, modes: usize) -> Result<DMatrix<C64>> {
        self.validate(modes)?;
        let local = self.local_mode_matrix()?;
        let targets = self.targets();
        let mut full = DMatrix::identity(modes, modes);
        for (a, &i) in targets.iter().enumerate() {
            for (b, &j) in targets.iter().enumerate() {
                full[(i, j)] = local[(a, b)];
            }
        }
        Ok(full)
    }

    /// Local Hermitian generator `h` with `U = exp(−i Σ h_ij a_i† a_j)`.
    pub fn passive_step(&self) -> Result<PassiveStep> {
        let local = self.local_mode_matrix()?;
        let h = match *self {
            Self::PhaseRotation { theta, .. } => DMatrix::from_element(1, 1, C64::new(theta, 0.0)),
            _ => unitary_generator(&local)?,
        };
        PassiveStep::new(self.targets(), h)
    }

    /// Padded single-mode cutoff on which a squeezer or displacement acting
    /// on states supported below `cutoff` can be exponentiated without the
    /// boundary being felt.
    pub fn working_cutoff(&self, cutoff: usize) -> Result<usize> {
        let w = match *self {
            Self::Squeeze { s, .. } => {
                let r = s.norm();
                if r == 0.0 {
                    cutoff
                } else {
                    let spread = ((cutoff + 2) as f64 * (2.0 * r).exp()).ceil();
                    let decay = (80.0 / -(r.tanh().ln())).ceil();
                    cutoff.max((spread + decay) as usize + 10)
                }
            }
            Self::Displace { alpha, .. } => {
                let a = alpha.norm();
                cutoff + (6.0 * a * a + 12.0 * a * ((cutoff + 1) as f64).sqrt()).ceil() as usize + 40
            }
            _ => cutoff,
        };
        if w > MAX_WORK_CUTOFF {
            return Err(Error::Infeasible(format!(
                "element {self:?} needs a padded space of {w} photons (limit {MAX_WORK_CUTOFF})"
            )));
        }
        Ok(w)
    }

    /// Dense single-mode unitary on a `work_cutoff` truncation.
    pub fn single_mode_unitary(&self, work_cutoff: usize) -> Result<DMatrix<C64>> {
        let d = work_cutoff + 1;
        let a = DMatrix::from_fn(d, d, |r, c| if c == r + 1 { C64::new((c as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) });
        let ad = a.adjoint();
        let i = C64::new(0.0, 1.0);
        let h = match *self {
            Self::PhaseRotation { theta, .. } => {
                return Ok(DMatrix::from_diagonal(&DVector::from_fn(d, |n, _| C64::from_polar(1.0, -theta * n as f64))));
            }
            Self::Squeeze { s, .. } => (&a * &a * s.conj() - &ad * &ad * s) * (i * 0.5),
            Self::Displace { alpha, .. } => (&ad * alpha - &a * alpha.conj()) * i,
            Self::BeamSplitter { .. } => return Err(Error::InvalidParameter("beam splitter acts on two modes".into())),
        };
        Ok(exp_minus_i_blockwise(&h))
    }
}

/// Heisenberg mode matrix of a passive sequence, `T_n ⋯ T_1`.
pub fn compose_circuit_mode_matrix(specs: &[GaussianUnitarySpec], modes: usize) -> Result<DMatrix<C64>> {
    let mut total = DMatrix::identity(modes, modes);
    for spec in specs {
        total = spec.mode_matrix(modes)? * total;
    }
    Ok(total)
}

/// Result of applying a unitary to a truncated state.
#[derive(Clone, Debug)]
pub struct Evolved {
    pub state: State,
    /// Probability that left the truncation box.
    pub dropped: f64,
    pub tail: TailReport,
}

/// Applies one Gaussian element to a state; nothing is renormalized.
pub fn apply_unitary(spec: &GaussianUnitarySpec, state: &State) -> Result<Evolved> {
    apply_sequence(std::slice::from_ref(spec), state)
}

/// Applies a list of elements in order.
pub fn apply_sequence(specs: &[GaussianUnitarySpec], state: &State) -> Result<Evolved> {
    let trunc = state.truncation();
    let before = state.weight();
    let mut current = state.clone();
    let mut i = 0;
    while i < specs.len() {
        specs[i].validate(trunc.modes())?;
        if specs[i].is_passive() {
            let mut j = i;
            while j < specs.len() && specs[j].is_passive() {
                specs[j].validate(trunc.modes())?;
                j += 1;
            }
            current = apply_passive(&specs[i..j], &current)?;
            i = j;
        } else {
            let spec = &specs[i];
            let work = spec.working_cutoff(trunc.cutoff())?;
            let u = spec.single_mode_unitary(work)?;
            let block = u.view((0, 0), (trunc.local_dim(), trunc.local_dim())).into_owned();
            current = apply_local(&current, spec.targets()[0], &block);
            i += 1;
        }
    }
    let dropped = (before - current.weight()).max(0.0);
    let tail = current.tail();
    Ok(Evolved { state: current, dropped, tail })
}

/// Applies a passive sequence sector by sector; out-of-box amplitude is dropped.
pub fn apply_passive(specs: &[GaussianUnitarySpec], state: &State) -> Result<State> {
    let trunc = state.truncation();
    let steps = specs.iter().map(|s| s.passive_step()).collect::<Result<Vec<_>>>()?;
    let max_total = trunc.modes() * trunc.cutoff();
    let prop = SectorPropagator::new(trunc.modes(), steps, max_total)?;
    let bases = (0..=max_total).map(|n| SectorBasis::new(trunc.modes(), n)).collect::<Result<Vec<_>>>()?;
    match state {
        State::Pure(psi) => {
            let mut out = DVector::zeros(trunc.dim());
            for basis in &bases {
                let v = restrict_vector(psi, basis);
                if v.iter().all(|z| z.norm_sqr() == 0.0) {
                    continue;
                }
                let w = prop.apply_vector(basis, &v);
                for (k, idx) in basis.box_indices(trunc).into_iter().enumerate() {
                    if let Some(idx) = idx {
                        out[idx] = w[k];
                    }
                }
            }
            Ok(State::Pure(FockArray::new(trunc, out)?))
        }
        State::Mixed(rho) => {
            let d = trunc.dim();
            let mut out = DMatrix::zeros(d, d);
            let positions: Vec<Vec<Option<usize>>> = bases.iter().map(|b| b.box_indices(trunc)).collect();
            for (r, rows) in bases.iter().enumerate() {
                for (c, cols) in bases.iter().enumerate() {
                    let block = restrict_density(rho, rows, cols);
                    if block.iter().all(|z| z.norm_sqr() == 0.0) {
                        continue;
                    }
                    let moved = prop.conjugate_block(rows, cols, &block);
                    for (a, ia) in positions[r].iter().enumerate() {
                        let Some(ia) = ia else { continue };
                        for (b, ib) in positions[c].iter().enumerate() {
                            if let Some(ib) = ib {
                                out[(*ia, *ib)] = moved[(a, b)];
                            }
                        }
                    }
                }
            }
            Ok(State::Mixed(DensityOp::from_matrix_unchecked(trunc, out)?))
        }
    }
}

/// Applies a single-mode operator (a `(cutoff+1)`-square block) to one mode.
pub fn apply_local(state: &State, mode: usize, op: &DMatrix<C64>) -> State {
    let trunc = state.truncation();
    match state {
        State::Pure(psi) => {
            let v = apply_local_columns(trunc, mode, op, &DMatrix::from_column_slice(trunc.dim(), 1, psi.amplitudes().as_slice()));
            State::Pure(FockArray::new(trunc, DVector::from_column_slice(v.as_slice())).expect("same dimension"))
        }
        State::Mixed(rho) => {
            let left = apply_local_columns(trunc, mode, op, rho.matrix());
            let both = apply_local_columns(trunc, mode, op, &left.adjoint()).adjoint();
            State::Mixed(DensityOp::from_matrix_unchecked(trunc, both).expect("same dimension"))
        }
    }
}

fn apply_local_columns(trunc: FockTruncation, mode: usize, op: &DMatrix<C64>, m: &DMatrix<C64>) -> DMatrix<C64> {
    let local = trunc.local_dim();
    let stride = local.pow((trunc.modes() - 1 - mode) as u32);
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for col in 0..m.ncols() {
        let src = m.column(col);
        let mut dst = out.column_mut(col);
        for base in 0..trunc.dim() {
            if !(base / stride).is_multiple_of(local) {
                continue;
            }
            for j in 0..local {
                let x = src[base + j * stride];
                if x.norm_sqr() == 0.0 {
                    continue;
                }
                for r in 0..local {
                    dst[base + r * stride] += op[(r, j)] * x;
                }
            }
        }
    }
    out
}
