//! Linear-optics circuits that read out the multi-copy observables as
//! photon-number differences.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::{AngularOutcome, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::fock::{FockTruncation, State};
use crate::gaussian::{apply_sequence, compose_circuit_mode_matrix, BeamSplitterConvention, Evolved, GaussianUnitarySpec};
use crate::operators::{interior_total, ModeOperator, ModeSet};
use crate::sector::{SectorBasis, SectorPropagator};
use crate::two_copy::{self, build_angular_components, copy_block, sector_range, single_mode, CopyBlocks, DEFAULT_PRUNE_TOL};

/// Largest sector dimension for which a density block is formed.
pub const MAX_DENSITY_SECTOR_DIM: usize = 2500;

/// Largest sector dimension for which a pure sector vector is formed.
pub const MAX_PURE_SECTOR_DIM: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitPreset {
    /// Phase shift by π/2 on the second copy, then a balanced beam splitter.
    TwoCopy,
    /// Balanced beam splitter, then a phase shift by π/2 on the first output.
    TwoCopyAlternative,
    /// Two beam splitters merging three copies, a π/2 phase shift on the
    /// third mode and a balanced beam splitter on modes 2 and 3.
    ThreeCopy,
}

impl CircuitPreset {
    pub const ALL: [Self; 3] = [Self::TwoCopy, Self::TwoCopyAlternative, Self::ThreeCopy];

    pub fn name(self) -> &'static str {
        match self {
            Self::TwoCopy => "fig1",
            Self::TwoCopyAlternative => "fig3",
            Self::ThreeCopy => "fig4",
        }
    }

    pub fn modes(self) -> usize {
        match self {
            Self::ThreeCopy => 3,
            _ => 2,
        }
    }

    /// Output modes whose photon-number difference gives twice the observable.
    pub fn readout_pair(self) -> [usize; 2] {
        match self {
            Self::ThreeCopy => [1, 2],
            _ => [0, 1],
        }
    }

    pub fn elements(self) -> Vec<GaussianUnitarySpec> {
        self.elements_with(BeamSplitterConvention::Reflection)
    }

    pub fn elements_with(self, convention: BeamSplitterConvention) -> Vec<GaussianUnitarySpec> {
        let bs = |a, b, t| GaussianUnitarySpec::beam_splitter(a, b, t).with_convention(convention);
        match self {
            Self::TwoCopy => vec![GaussianUnitarySpec::phase_rotation(1, FRAC_PI_2), bs(0, 1, 0.5)],
            Self::TwoCopyAlternative => vec![bs(0, 1, 0.5), GaussianUnitarySpec::phase_rotation(0, FRAC_PI_2)],
            Self::ThreeCopy => vec![
                bs(0, 1, 0.5),
                bs(0, 2, 2.0 / 3.0),
                GaussianUnitarySpec::phase_rotation(2, FRAC_PI_2),
                bs(1, 2, 0.5),
            ],
        }
    }

    /// The two beam splitters that map a uniform displacement onto mode 1.
    pub fn merging_stage() -> Vec<GaussianUnitarySpec> {
        Self::ThreeCopy.elements()[..2].to_vec()
    }
}

impl fmt::Display for CircuitPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CircuitPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" | "fig1_two_copy" | "two_copy" => Ok(Self::TwoCopy),
            "fig3" | "fig3_alternative" | "two_copy_alternative" => Ok(Self::TwoCopyAlternative),
            "fig4" | "fig4_three_copy" | "three_copy" => Ok(Self::ThreeCopy),
            other => Err(Error::InvalidParameter(format!("unknown circuit preset `{other}`"))),
        }
    }
}

/// A preset or an explicit ordered list of elements.
#[derive(Clone, Debug, PartialEq)]
pub enum CircuitSpec {
    Preset(CircuitPreset),
    Elements { modes: usize, elements: Vec<GaussianUnitarySpec> },
}

impl CircuitSpec {
    pub fn elements(&self) -> Vec<GaussianUnitarySpec> {
        match self {
            Self::Preset(p) => p.elements(),
            Self::Elements { elements, .. } => elements.clone(),
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            Self::Preset(p) => p.modes(),
            Self::Elements { modes, .. } => *modes,
        }
    }

    /// Builds an explicit circuit, taking the mode count from the highest label used.
    pub fn from_elements(elements: Vec<GaussianUnitarySpec>) -> Result<Self> {
        let modes = elements.iter().flat_map(|e| e.targets()).max().map_or(1, |m| m + 1);
        for e in &elements {
            e.validate(modes)?;
        }
        Ok(Self::Elements { modes, elements })
    }

    /// JSON is either an array of elements, `{"elements": [...]}` (optionally
    /// with `"modes"`), or `{"preset": "fig4"}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Spec { path: ".".into(), message: e.to_string() })?;
        let (items, modes) = match value {
            serde_json::Value::Array(items) => (items, None),
            serde_json::Value::Object(mut map) => {
                if let Some(p) = map.remove("preset") {
                    let name = p.as_str().ok_or_else(|| Error::Spec { path: "preset".into(), message: "expected a string".into() })?;
                    return Ok(Self::Preset(name.parse()?));
                }
                let modes = match map.remove("modes") {
                    Some(m) => Some(m.as_u64().ok_or_else(|| Error::Spec { path: "modes".into(), message: "expected an integer".into() })? as usize),
                    None => None,
                };
                match map.remove("elements") {
                    Some(serde_json::Value::Array(items)) => (items, modes),
                    _ => return Err(Error::Spec { path: "elements".into(), message: "expected an array of elements".into() }),
                }
            }
            _ => return Err(Error::Spec { path: ".".into(), message: "expected an array or an object".into() }),
        };
        let mut elements = Vec::with_capacity(items.len());
        for (i, item) in items.into_iter().enumerate() {
            let spec: GaussianUnitarySpec = serde_path_to_error::deserialize(item).map_err(|e| Error::Spec {
                path: format!("[{i}]{}", path_suffix(e.path().to_string())),
                message: e.into_inner().to_string(),
            })?;
            elements.push(spec);
        }
        let spec = Self::from_elements(elements)?;
        match (spec, modes) {
            (Self::Elements { modes: used, elements }, Some(m)) => {
                if m < used {
                    return Err(Error::InvalidModeSet(format!("circuit declares {m} modes but uses {used}")));
                }
                Ok(Self::Elements { modes: m, elements })
            }
            (spec, _) => Ok(spec),
        }
    }

    /// A preset name or the path of a JSON circuit file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if let Ok(p) = name_or_path.parse::<CircuitPreset>() {
            return Ok(Self::Preset(p));
        }
        let text = std::fs::read_to_string(name_or_path)?;
        Self::from_json(&text)
    }

    pub fn mode_matrix(&self) -> Result<DMatrix<C64>> {
        compose_circuit_mode_matrix(&self.elements(), self.modes())
    }
}

fn path_suffix(p: String) -> String {
    if p == "." {
        String::new()
    } else {
        format!(".{p}")
    }
}

/// Evolves a multi-mode state through the circuit.
pub fn run_circuit(circuit: &CircuitSpec, input: &State) -> Result<Evolved> {
    let modes = input.truncation().modes();
    if modes != circuit.modes() {
        return Err(Error::ModeCountMismatch { expected: circuit.modes(), actual: modes });
    }
    apply_sequence(&circuit.elements(), input)
}

/// Distribution of `d = (n_a − n_b)/2` on a pair of modes.
#[derive(Clone, Debug)]
pub struct DifferenceReadout {
    pub modes: [usize; 2],
    pub distribution: OutcomeDistribution,
}

/// Reads the photon-number difference from the diagonal of a state.
pub fn photon_difference_distribution(state: &State, pair: [usize; 2]) -> Result<DifferenceReadout> {
    let trunc = state.truncation();
    trunc.check_mode(pair[0])?;
    trunc.check_mode(pair[1])?;
    if pair[0] == pair[1] {
        return Err(Error::InvalidModeSet("readout modes must differ".into()));
    }
    let mut distribution = OutcomeDistribution::new();
    for (idx, p) in state.populations().into_iter().enumerate() {
        let occ = trunc.occupations(idx);
        distribution.add(AngularOutcome::from_counts(occ[pair[0]], occ[pair[1]]), p);
    }
    Ok(DifferenceReadout { modes: pair, distribution: distribution.with_tail_mass(state.tail().tail_mass) })
}

/// Photon-difference readout after sending `copies` replicas of a one-mode
/// state through `elements`, evaluated sector by sector without forming the
/// multi-mode state.
pub fn copies_readout(
    state: &State,
    copies: usize,
    elements: &[GaussianUnitarySpec],
    pair: [usize; 2],
    prune_tol: f64,
) -> Result<OutcomeDistribution> {
    single_mode(state)?;
    for e in elements {
        e.validate(copies)?;
    }
    if pair[0] == pair[1] || pair[0] >= copies || pair[1] >= copies {
        return Err(Error::InvalidModeSet(format!("readout pair {pair:?} on {copies} modes")));
    }
    let (last, skipped) = sector_range(state, copies, prune_tol);
    let cap = if state.is_pure() { MAX_PURE_SECTOR_DIM } else { MAX_DENSITY_SECTOR_DIM };
    let needed = crate::sector::sector_dim(copies, last);
    if needed > cap {
        return Err(Error::Infeasible(format!(
            "sector with {last} photons has dimension {needed} (limit {cap}); lower the cutoff or the photon number"
        )));
    }
    let steps = elements.iter().map(|e| e.passive_step()).collect::<Result<Vec<_>>>()?;
    let prop = SectorPropagator::new(copies, steps, last)?;
    let mut dist = OutcomeDistribution::new();
    for n in 0..=last {
        let basis = SectorBasis::new(copies, n)?;
        let probs = match copy_block(state, &basis) {
            CopyBlocks::Pure(v) => prop.output_populations(&basis, &v),
            CopyBlocks::Mixed(rho) => prop.output_diagonal(&basis, &rho),
        };
        for (k, occ) in basis.iter().enumerate() {
            dist.add(AngularOutcome::from_counts(occ[pair[0]], occ[pair[1]]), probs[k]);
        }
    }
    Ok(dist.with_truncation_loss(skipped).with_tail_mass(state.tail().tail_mass))
}

/// Two-copy observable read out through the two-copy circuit.
pub fn lz_circuit_distribution(state: &State) -> Result<OutcomeDistribution> {
    let p = CircuitPreset::TwoCopy;
    copies_readout(state, 2, &p.elements(), p.readout_pair(), DEFAULT_PRUNE_TOL)
}

/// One row of the operator table: a component in one of its three forms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub component: &'static str,
    pub form: &'static str,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
    pub max_residual: f64,
}

impl TableReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_residual < tol
    }
}

/// Output-mode operators `b_i = Σ_j T_ij a_j` of a circuit.
pub(crate) fn output_modes(set: &ModeSet, t: &DMatrix<C64>) -> Vec<ModeOperator> {
    (0..t.nrows())
        .map(|i| {
            (0..t.ncols()).fold(ModeOperator::zero(set.a[0].truncation()), |acc, j| &acc + &set.a[j].scale(t[(i, j)]))
        })
        .collect()
}

fn half_difference(b: &[ModeOperator]) -> ModeOperator {
    (&(&b[0].adjoint() * &b[0]) - &(&b[1].adjoint() * &b[1])).scale_re(0.5)
}

/// `½(b₁b₂† + b₁†b₂)`.
fn half_sum(b: &[ModeOperator]) -> ModeOperator {
    (&(&b[0] * &b[1].adjoint()) + &(&b[0].adjoint() * &b[1])).scale_re(0.5)
}

/// `(i/2)(b₁b₂† − b₁†b₂)`.
fn half_cross(b: &[ModeOperator]) -> ModeOperator {
    (&(&b[0] * &b[1].adjoint()) - &(&b[0].adjoint() * &b[1])).scale(C64::new(0.0, 0.5))
}

/// Checks each two-copy component against its forms in the output modes of
/// the two-copy circuit (`b`) and of the alternative circuit (`c`).
pub fn verify_operator_table(trunc: FockTruncation, convention: BeamSplitterConvention) -> Result<TableReport> {
    let l = build_angular_components(trunc)?;
    let set = ModeSet::new(trunc)?;
    let keep = interior_total(trunc, 2);
    let t_b = compose_circuit_mode_matrix(&CircuitPreset::TwoCopy.elements_with(convention), 2)?;
    let t_c = compose_circuit_mode_matrix(&CircuitPreset::TwoCopyAlternative.elements_with(convention), 2)?;
    let b = output_modes(&set, &t_b);
    let c = output_modes(&set, &t_c);
    let a_forms = [
        ("L_x", "a", (&set.n[0] - &set.n[1]).scale_re(0.5), &l.lx),
        ("L_y", "a", half_sum(&set.a), &l.ly),
        ("L_z", "a", half_cross(&set.a), &l.lz),
        ("L_x", "b", half_sum(&b), &l.lx),
        ("L_y", "b", half_cross(&b), &l.ly),
        ("L_z", "b", half_difference(&b), &l.lz),
        ("L_x", "c", half_cross(&c), &l.lx),
        ("L_y", "c", half_difference(&c), &l.ly),
        ("L_z", "c", half_sum(&c), &l.lz),
    ];
    let rows: Vec<TableRow> = a_forms
        .iter()
        .map(|(component, form, op, reference)| TableRow { component, form, residual: op.max_abs_diff_on(reference, &keep) })
        .collect();
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(TableReport { rows, max_residual })
}

/// Total-variation distances between circuit readouts and projector routes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub lz_tv: f64,
    pub m_tv: Option<f64>,
    pub tail_mass: f64,
}

impl EquivalenceReport {
    pub fn max_tv(&self) -> f64 {
        self.lz_tv.max(self.m_tv.unwrap_or(0.0))
    }
}

/// Compares the circuit readouts with the eigenprojection distributions.
/// The three-copy comparison runs when `three_copy` is set.
pub fn circuit_vs_projector_equivalence(state: &State, three_copy: bool) -> Result<EquivalenceReport> {
    let lz_tv = lz_circuit_distribution(state)?.total_variation(&two_copy::outcome_distribution_lz(state)?);
    let m_tv = if three_copy {
        let circuit = crate::three_copy::outcome_distribution_m(state)?;
        let diagonal = crate::three_copy::outcome_distribution_m_diagonal(state)?;
        Some(circuit.total_variation(&diagonal))
    } else {
        None
    };
    Ok(EquivalenceReport { lz_tv, m_tv, tail_mass: state.tail().tail_mass })
}

/// Draws readout outcomes from a distribution; for demonstrations only.
pub fn sample_outcomes(dist: &OutcomeDistribution, shots: usize, seed: u64) -> Result<Vec<AngularOutcome>> {
    let (outcomes, weights): (Vec<_>, Vec<_>) = dist.iter().map(|(m, p)| (m, p.max(0.0))).unzip();
    let index = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(format!("cannot sample: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..shots).map(|_| outcomes[index.sample(&mut rng)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockArray;
    use crate::phase_space::thermal_difference_probability;
    use crate::states::{make_state, StateSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn operator_table_holds_for_reflection_convention() {
        let trunc = FockTruncation::new(8, 2).unwrap();
        let report = verify_operator_table(trunc, BeamSplitterConvention::Reflection).unwrap();
        assert!(report.passed(1e-9), "{report:?}");
        let flipped = verify_operator_table(trunc, BeamSplitterConvention::Rotation).unwrap();
        assert!(!flipped.passed(1e-3));
    }

    #[test]
    fn three_copy_merging_stage() {
        let t = compose_circuit_mode_matrix(&CircuitPreset::merging_stage(), 3).unwrap();
        let (s3, s2, s6) = (3f64.sqrt(), 2f64.sqrt(), 6f64.sqrt());
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[c(1.0 / s3, 0.0), c(1.0 / s3, 0.0), c(1.0 / s3, 0.0), c(1.0 / s2, 0.0), c(-1.0 / s2, 0.0), c(0.0, 0.0), c(1.0 / s6, 0.0), c(1.0 / s6, 0.0), c(-2.0 / s6, 0.0)],
        );
        assert!(crate::linalg::max_abs(&(t.clone() - expected)) < 1e-15);
        let uniform = nalgebra::DVector::from_element(3, c(0.4, -0.3));
        let image = t * uniform;
        assert!((image[0] - c(0.4, -0.3) * s3).norm() < 1e-15);
        assert!(image[1].norm() < 1e-15 && image[2].norm() < 1e-15);
    }

    #[test]
    fn presets_parse_by_name() {
        for p in CircuitPreset::ALL {
            assert_eq!(p.name().parse::<CircuitPreset>().unwrap(), p);
        }
        assert_eq!("fig4_three_copy".parse::<CircuitPreset>().unwrap(), CircuitPreset::ThreeCopy);
        assert!("fig2".parse::<CircuitPreset>().is_err());
    }

    #[test]
    fn json_circuits() {
        let text = r#"[{"type":"phase_rotation","mode":2,"theta":1.5707963267948966},
                      {"type":"beam_splitter","modes":[1,2],"transmittance":0.5}]"#;
        let spec = CircuitSpec::from_json(text).unwrap();
        assert_eq!(spec.modes(), 2);
        assert_eq!(spec.elements(), CircuitPreset::TwoCopy.elements());
        assert_eq!(CircuitSpec::from_json(r#"{"preset":"fig4"}"#).unwrap(), CircuitSpec::Preset(CircuitPreset::ThreeCopy));
        let bad = r#"{"elements":[{"type":"phase_rotation","mode":1,"theta":0},{"type":"beam_splitter","modes":[1,2],"transmittance":"x"}]}"#;
        match CircuitSpec::from_json(bad) {
            Err(Error::Spec { path, .. }) => assert!(path.starts_with("[1]"), "{path}"),
            other => panic!("{other:?}"),
        }
        let round = serde_json::to_string(&CircuitPreset::ThreeCopy.elements()).unwrap();
        assert_eq!(CircuitSpec::from_json(&round).unwrap().elements(), CircuitPreset::ThreeCopy.elements());
    }

    #[test]
    fn identity_circuit_leaves_state() {
        let trunc = FockTruncation::new(3, 2).unwrap();
        let psi = State::Pure(FockArray::basis(trunc, &[2, 1]).unwrap());
        let circuit = CircuitSpec::from_elements(vec![GaussianUnitarySpec::phase_rotation(1, 0.0)]).unwrap();
        let out = run_circuit(&circuit, &psi).unwrap();
        assert!((out.state.populations()[trunc.index(&[2, 1]).unwrap()] - 1.0).abs() < 1e-15);
        let three = State::Pure(FockArray::vacuum(FockTruncation::new(2, 3).unwrap()));
        assert!(matches!(run_circuit(&CircuitSpec::Preset(CircuitPreset::TwoCopy), &three), Err(Error::ModeCountMismatch { .. })));
    }

    #[test]
    fn fock_one_pair_gives_plus_minus_one() {
        let one = make_state(&StateSpec::Fock { n: 1 }, 3).unwrap().state;
        let out = run_circuit(&CircuitSpec::Preset(CircuitPreset::TwoCopy), &one.copies(2).unwrap()).unwrap();
        let d = photon_difference_distribution(&out.state, [0, 1]).unwrap().distribution;
        assert!((d.prob(2) - 0.5).abs() < 1e-12 && (d.prob(-2) - 0.5).abs() < 1e-12);
        let single = photon_difference_distribution(&State::Pure(FockArray::basis(FockTruncation::new(2, 2).unwrap(), &[1, 0]).unwrap()), [0, 1])
            .unwrap()
            .distribution;
        assert_eq!(single.prob(1), 1.0);
    }

    #[test]
    fn squeezed_pair_becomes_photon_correlated() {
        let s = make_state(&StateSpec::Squeezed { r: 0.4, phi: 0.0 }, 20).unwrap().state;
        let out = run_circuit(&CircuitSpec::Preset(CircuitPreset::TwoCopy), &s.copies(2).unwrap()).unwrap();
        let d = photon_difference_distribution(&out.state, [0, 1]).unwrap().distribution;
        assert!(1.0 - d.prob(0) < 1e-6);
    }

    #[test]
    fn thermal_pair_gives_geometric_difference_law() {
        let th = make_state(&StateSpec::Thermal { mean_n: 0.5 }, 30).unwrap().state;
        let d = lz_circuit_distribution(&th).unwrap();
        for twice in -6..=6 {
            assert!((d.prob(twice) - thermal_difference_probability(0.5, twice)).abs() < 1e-9);
        }
    }

    #[test]
    fn sector_readout_matches_materialized_circuit() {
        let spec = StateSpec::mixture([(0.3, StateSpec::Fock { n: 2 }), (0.7, StateSpec::Coherent { alpha: c(0.4, 0.2) })]);
        let rho = make_state(&spec, 5).unwrap().state;
        for preset in [CircuitPreset::TwoCopy, CircuitPreset::ThreeCopy] {
            let k = preset.modes();
            let full = run_circuit(&CircuitSpec::Preset(preset), &rho.copies(k).unwrap()).unwrap();
            let direct = photon_difference_distribution(&full.state, preset.readout_pair()).unwrap().distribution;
            let sectors = copies_readout(&rho, k, &preset.elements(), preset.readout_pair(), 0.0).unwrap();
            // the box drops out-of-cutoff amplitude; compare against the sector route up to that loss
            assert!(direct.total_variation(&sectors) < full.dropped + 1e-12, "{preset}");
        }
    }

    #[test]
    fn two_copy_preset_and_projector_agree() {
        for spec in [StateSpec::Vacuum, StateSpec::Fock { n: 1 }, StateSpec::Thermal { mean_n: 0.3 }] {
            let rho = make_state(&spec, 12).unwrap().state;
            let r = circuit_vs_projector_equivalence(&rho, false).unwrap();
            assert!(r.lz_tv < 1e-10, "{spec:?}: {r:?}");
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let one = make_state(&StateSpec::Fock { n: 1 }, 3).unwrap().state;
        let d = lz_circuit_distribution(&one).unwrap();
        let a = sample_outcomes(&d, 200, 7).unwrap();
        assert_eq!(a, sample_outcomes(&d, 200, 7).unwrap());
        assert!(a.iter().all(|m| m.twice().abs() == 2));
        assert!(a.iter().any(|m| m.twice() == 2) && a.iter().any(|m| m.twice() == -2));
    }
}
