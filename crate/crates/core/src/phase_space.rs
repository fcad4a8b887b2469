//! One-mode covariance matrices, the Schrödinger–Robertson bound and Gaussian
//! closed forms for the multi-copy entropies.

use std::io::Write;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::State;
use crate::operators::{expectation, ModeOperator};

/// Lower bound `det γ ≥ 1/4`.
pub const SR_BOUND: f64 = 0.25;

/// Raw first and second quadrature moments of a one-mode state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMoments {
    pub mean_x: f64,
    pub mean_p: f64,
    /// `⟨x²⟩`
    pub xx: f64,
    /// `⟨p²⟩`
    pub pp: f64,
    /// `½⟨xp + px⟩`
    pub xp: f64,
}

impl QuadratureMoments {
    /// Second moment of the two-copy observable for this state,
    /// `½(⟨x²⟩⟨p²⟩ − ¼⟨{x,p}⟩² − ¼)`, valid for any state (centered or not).
    pub fn lz_second_moment(&self) -> f64 {
        0.5 * (self.xx * self.pp - self.xp * self.xp - 0.25)
    }
}

/// Moments evaluated with operators one photon pair above the state's cutoff,
/// so that products like `x²` are exact on the state's support.
pub fn quadrature_moments(state: &State) -> Result<QuadratureMoments> {
    let trunc = state.truncation();
    if trunc.modes() != 1 {
        return Err(Error::ModeCountMismatch { expected: 1, actual: trunc.modes() });
    }
    let (padded, _) = state.recut(trunc.cutoff() + 2)?;
    let t = padded.truncation();
    let x = ModeOperator::quadrature_x(t, 0)?;
    let p = ModeOperator::quadrature_p(t, 0)?;
    let re = |op: &ModeOperator| expectation(op, &padded).map(|z| z.re);
    Ok(QuadratureMoments {
        mean_x: re(&x)?,
        mean_p: re(&p)?,
        xx: re(&(&x * &x))?,
        pp: re(&(&p * &p))?,
        xp: re(&(&x * &p))?,
    })
}

/// Covariance matrix and means of a one-mode state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceState {
    /// `(⟨x⟩, ⟨p⟩)`
    pub mean: [f64; 2],
    pub gamma: Matrix2<f64>,
}

impl CovarianceState {
    pub fn new(mean: [f64; 2], gamma: Matrix2<f64>) -> Result<Self> {
        if (gamma[(0, 1)] - gamma[(1, 0)]).abs() > 1e-12 {
            return Err(Error::InvalidParameter("covariance matrix is not symmetric".into()));
        }
        let tol = 1e-10;
        if gamma[(0, 0)] < -tol || gamma[(1, 1)] < -tol || gamma.determinant() < -tol {
            return Err(Error::InvalidParameter("covariance matrix is not positive semi-definite".into()));
        }
        Ok(Self { mean, gamma })
    }

    pub fn vacuum() -> Self {
        Self { mean: [0.0, 0.0], gamma: Matrix2::identity() * 0.5 }
    }

    pub fn from_moments(m: &QuadratureMoments) -> Result<Self> {
        let vx = m.xx - m.mean_x * m.mean_x;
        let vp = m.pp - m.mean_p * m.mean_p;
        let cxp = m.xp - m.mean_x * m.mean_p;
        Self::new([m.mean_x, m.mean_p], Matrix2::new(vx, cxp, cxp, vp))
    }

    pub fn det(&self) -> f64 {
        self.gamma.determinant()
    }

    pub fn symplectic(&self) -> SymplecticSummary {
        SymplecticSummary::from_det(self.det())
    }

    /// Variance of the three-copy observable, `½(det γ − ¼)`.
    pub fn m_variance(&self) -> f64 {
        0.5 * (self.det() - SR_BOUND)
    }
}

pub fn covariance_of(state: &State) -> Result<CovarianceState> {
    CovarianceState::from_moments(&quadrature_moments(state)?)
}

/// One-mode Williamson data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticSummary {
    pub det_gamma: f64,
    /// `ν = √det γ`
    pub nu: f64,
    /// Purity of the Gaussian state with this covariance, `1/(2ν)`.
    pub purity: f64,
}

impl SymplecticSummary {
    pub fn from_det(det_gamma: f64) -> Self {
        let nu = det_gamma.max(0.0).sqrt();
        Self { det_gamma, nu, purity: 1.0 / (2.0 * nu) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrReport {
    pub det_gamma: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// `det γ − ¼`
    pub margin: f64,
}

pub fn sr_check(cov: &CovarianceState, tol: f64) -> SrReport {
    let det_gamma = cov.det();
    SrReport { det_gamma, bound: SR_BOUND, satisfied: det_gamma >= SR_BOUND - tol, margin: det_gamma - SR_BOUND }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianEntropies {
    /// Entropy of the two-copy (and three-copy) observable, nats.
    pub h_lz: f64,
    /// Wigner-function entropy `h(x,p)`, nats.
    pub h_xp: f64,
}

fn check_nu(nu: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !nu.is_finite() || nu < 0.5 - SLACK {
        return Err(Error::InvalidParameter(format!("symplectic eigenvalue {nu} below 1/2")));
    }
    Ok(nu.max(0.5))
}

/// `ln(2ν) − ((4ν²−1)/(4ν)) ln((2ν−1)/(2ν+1))`, with the second term
/// vanishing at `ν = ½`.
pub fn lz_entropy_of_nu(nu: f64) -> Result<f64> {
    let nu = check_nu(nu)?;
    let first = (2.0 * nu).ln();
    let k = 4.0 * nu * nu - 1.0;
    if k == 0.0 {
        return Ok(first);
    }
    Ok(first - k / (4.0 * nu) * ((2.0 * nu - 1.0) / (2.0 * nu + 1.0)).ln())
}

pub fn gaussian_entropy_closed_forms(nu: f64) -> Result<GaussianEntropies> {
    let h_lz = lz_entropy_of_nu(nu)?;
    let nu = check_nu(nu)?;
    let h_xp = (std::f64::consts::PI * std::f64::consts::E).ln() + (2.0 * nu).ln();
    Ok(GaussianEntropies { h_lz, h_xp })
}

/// `E(⟨n⟩) = −(2⟨n⟩(⟨n⟩+1)/(2⟨n⟩+1)) ln(⟨n⟩/(⟨n⟩+1))`, with `E(0) = 0`.
pub fn e_function(mean_n: f64) -> Result<f64> {
    if !mean_n.is_finite() || mean_n < 0.0 {
        return Err(Error::InvalidParameter(format!("mean photon number {mean_n} must be ≥ 0")));
    }
    if mean_n == 0.0 {
        return Ok(0.0);
    }
    let n = mean_n;
    Ok(-(2.0 * n * (n + 1.0) / (2.0 * n + 1.0)) * (n / (n + 1.0)).ln())
}

/// Two-copy entropy of a thermal state, `ln(2⟨n⟩+1) + E(⟨n⟩)`.
pub fn thermal_lz_entropy(mean_n: f64) -> Result<f64> {
    Ok((2.0 * mean_n + 1.0).ln() + e_function(mean_n)?)
}

/// Probability of `d = twice_d / 2` for thermal copies:
/// `(2⟨n⟩+1)⁻¹ (⟨n⟩/(⟨n⟩+1))^{2|d|}`.
pub fn thermal_difference_probability(mean_n: f64, twice_d: i64) -> f64 {
    let q = mean_n / (mean_n + 1.0);
    let k = twice_d.unsigned_abs();
    if k == 0 {
        return 1.0 / (2.0 * mean_n + 1.0);
    }
    q.powi(k as i32) / (2.0 * mean_n + 1.0)
}

/// Two-copy entropy of `α|0⟩⟨0| + (1−α)|1⟩⟨1|`.
pub fn vacuum_one_mixture_entropy(alpha: f64) -> f64 {
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    (1.0 - alpha).powi(2) * std::f64::consts::LN_2 - 2.0 * xlnx(alpha) - 2.0 * xlnx(1.0 - alpha)
}

/// Row of the entropy-versus-ν curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuCurvePoint {
    pub nu: f64,
    pub h_lz: f64,
    pub h_xp: f64,
}

/// Row of the thermal curve versus mean photon number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanPhotonCurvePoint {
    pub mean_n: f64,
    pub e: f64,
    pub h_lz: f64,
    pub h_xp: f64,
}

pub fn nu_curve(grid: &[f64]) -> Result<Vec<NuCurvePoint>> {
    grid.iter()
        .map(|&nu| gaussian_entropy_closed_forms(nu).map(|g| NuCurvePoint { nu, h_lz: g.h_lz, h_xp: g.h_xp }))
        .collect()
}

pub fn mean_photon_curve(grid: &[f64]) -> Result<Vec<MeanPhotonCurvePoint>> {
    grid.iter()
        .map(|&mean_n| {
            let g = gaussian_entropy_closed_forms(mean_n + 0.5)?;
            Ok(MeanPhotonCurvePoint { mean_n, e: e_function(mean_n)?, h_lz: g.h_lz, h_xp: g.h_xp })
        })
        .collect()
}

/// Writes rows as CSV with a header line.
pub fn write_csv<T: Serialize>(rows: &[T], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_state, StateSpec};
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    fn cov(spec: StateSpec, cutoff: usize) -> CovarianceState {
        covariance_of(&make_state(&spec, cutoff).unwrap().state).unwrap()
    }

    #[test]
    fn vacuum_is_minimum_uncertainty() {
        let c = cov(StateSpec::Vacuum, 4);
        assert!((c.gamma - Matrix2::identity() * 0.5).abs().max() < 1e-15);
        assert_eq!(c.mean, [0.0, 0.0]);
        let sr = sr_check(&c, 1e-12);
        assert!(sr.satisfied && sr.margin.abs() < 1e-15);
    }

    #[test]
    fn fock_one_covariance() {
        let c = cov(StateSpec::Fock { n: 1 }, 1);
        assert!((c.gamma - Matrix2::identity() * 1.5).abs().max() < 1e-14);
        assert!((c.det() - 2.25).abs() < 1e-13);
    }

    #[test]
    fn coherent_shifts_means_only() {
        let alpha = C64::new(0.6, -0.3);
        let c = cov(StateSpec::Coherent { alpha }, 40);
        assert!((c.mean[0] - 2f64.sqrt() * alpha.re).abs() < 1e-10);
        assert!((c.mean[1] - 2f64.sqrt() * alpha.im).abs() < 1e-10);
        assert!((c.gamma - Matrix2::identity() * 0.5).abs().max() < 1e-10);
    }

    #[test]
    fn thermal_and_squeezed_determinants() {
        let th = cov(StateSpec::Thermal { mean_n: 1.0 }, 60);
        assert!((th.det() - 2.25).abs() < 1e-12);
        assert!(sr_check(&th, 1e-12).satisfied);
        for r in [0.1, 0.3, 0.5] {
            let sq = cov(StateSpec::Squeezed { r, phi: 0.8 }, 40);
            assert!((sq.det() - 0.25).abs() < 1e-7, "r = {r}");
            assert!((sq.symplectic().purity - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_forms() {
        let g = gaussian_entropy_closed_forms(0.5).unwrap();
        assert_eq!(g.h_lz, 0.0);
        assert!((g.h_xp - (PI * std::f64::consts::E).ln()).abs() < 1e-15);
        let h = lz_entropy_of_nu(1.5).unwrap();
        assert!((h - (3f64.ln() + 4.0 / 3.0 * LN_2)).abs() < 1e-14);
        assert!((h - 2.02281).abs() < 1e-5);
        // direct sum over the thermal difference law at ⟨n⟩ = 1
        let direct: f64 = (-400..=400)
            .map(|k| thermal_difference_probability(1.0, k))
            .map(|p| -p * p.ln())
            .sum();
        assert!((direct - h).abs() < 1e-12);
        assert!(lz_entropy_of_nu(0.4).is_err());
    }

    #[test]
    fn e_function_values() {
        assert_eq!(e_function(0.0).unwrap(), 0.0);
        assert!(e_function(1e-9).unwrap() < 1e-6);
        assert!((e_function(1.0).unwrap() - 4.0 / 3.0 * LN_2).abs() < 1e-15);
        assert!((e_function(1.0).unwrap() - 0.92420).abs() < 1e-5);
        assert!(e_function(-0.1).is_err());
        for n in [0.0, 0.25, 1.0, 3.0] {
            let g = gaussian_entropy_closed_forms(n + 0.5).unwrap();
            let rhs = g.h_xp - (PI * std::f64::consts::E).ln() + e_function(n).unwrap();
            assert!((thermal_lz_entropy(n).unwrap() - rhs).abs() < 1e-13);
            assert!((g.h_lz - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn mixture_formula_midpoint() {
        assert!((vacuum_one_mixture_entropy(0.5) - 2.25 * LN_2).abs() < 1e-15);
        assert!((vacuum_one_mixture_entropy(0.0) - LN_2).abs() < 1e-15);
        assert_eq!(vacuum_one_mixture_entropy(1.0), 0.0);
    }

    #[test]
    fn curves_are_monotone_and_bounded() {
        let grid: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
        let rows = mean_photon_curve(&grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].e >= w[0].e);
            assert!(w[1].h_lz > w[0].h_lz);
        }
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.e)));
        let mut buf = Vec::new();
        write_csv(&nu_curve(&[0.5, 1.0]).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("nu,h_lz,h_xp\n0.5,0.0,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn determinant_is_invariant_under_rotation_and_squeezing(
            mean_n in 0.0f64..0.8, theta in 0.0f64..6.3, r in 0.0f64..0.4, phi in 0.0f64..6.3,
        ) {
            use crate::gaussian::{apply_sequence, GaussianUnitarySpec};
            let base = make_state(&StateSpec::Thermal { mean_n }, 50).unwrap().state;
            let moved = apply_sequence(&[GaussianUnitarySpec::phase_rotation(0, theta), GaussianUnitarySpec::squeeze(0, r, phi)], &base).unwrap();
            let d0 = covariance_of(&base).unwrap().det();
            let d1 = covariance_of(&moved.state).unwrap().det();
            prop_assert!((d0 - d1).abs() < 1e-7, "{d0} vs {d1}");
        }
    }
}
