use multicopy_core::fock::{FockArray, FockTruncation, State};
use multicopy_core::gaussian::{apply_sequence, GaussianUnitarySpec};
use multicopy_core::phase_space::covariance_of;
use multicopy_core::states::{make_state, StateSpec};
use multicopy_core::three_copy::outcome_distribution_m;
use multicopy_core::two_copy::outcome_distribution_lz;
use multicopy_core::C64;
use nalgebra::DVector;
use proptest::prelude::*;

fn pure_state(amps: &[(f64, f64)]) -> Option<State> {
    let v = DVector::from_iterator(amps.len(), amps.iter().map(|&(re, im)| C64::new(re, im)));
    if v.norm() < 1e-3 {
        return None;
    }
    let trunc = FockTruncation::single(amps.len() - 1).unwrap();
    Some(State::Pure(FockArray::new(trunc, v.normalize()).unwrap()))
}

fn amplitudes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 2..8)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distributions_are_normalized_and_entropy_nonnegative(amps in amplitudes()) {
        let Some(rho) = pure_state(&amps) else { return Ok(()) };
        let lz = outcome_distribution_lz(&rho).unwrap();
        let m = outcome_distribution_m(&rho).unwrap();
        for d in [&lz, &m] {
            prop_assert!((d.total() + d.truncation_loss() - 1.0).abs() < 1e-9);
            prop_assert!(d.entropy() >= 0.0);
            prop_assert!(d.min_probability() > -1e-12);
        }
        // swapping identical copies sends L_z to −L_z
        prop_assert!(lz.mean().abs() < 1e-9);
    }

    #[test]
    fn m_variance_tracks_covariance(amps in amplitudes()) {
        let Some(rho) = pure_state(&amps) else { return Ok(()) };
        let m = outcome_distribution_m(&rho).unwrap();
        let cov = covariance_of(&rho).unwrap();
        prop_assert!((m.variance() - 0.5 * (cov.det() - 0.25)).abs() < 1e-8);
        prop_assert!(cov.det() >= 0.25 - 1e-9);
    }

    #[test]
    fn lz_is_unchanged_by_rotation(amps in amplitudes(), theta in 0.0..6.3f64) {
        let Some(rho) = pure_state(&amps) else { return Ok(()) };
        let turned = apply_sequence(&[GaussianUnitarySpec::phase_rotation(0, theta)], &rho).unwrap();
        prop_assert!(turned.dropped < 1e-12);
        let a = outcome_distribution_lz(&rho).unwrap();
        let b = outcome_distribution_lz(&turned.state).unwrap();
        prop_assert!(a.total_variation(&b) < 1e-10);
    }

    #[test]
    fn thermal_symplectic_invariance(n in 0.05..0.4f64, r in 0.0..0.3f64, phi in 0.0..6.3f64) {
        let rho = make_state(&StateSpec::Thermal { mean_n: n }, 40).unwrap().state;
        let squeezed = apply_sequence(&[GaussianUnitarySpec::squeeze(0, r, phi)], &rho).unwrap();
        prop_assert!(squeezed.dropped < 1e-9);
        let moved = squeezed.state.renormalize().unwrap();
        let a = outcome_distribution_lz(&rho).unwrap();
        let b = outcome_distribution_lz(&moved).unwrap();
        prop_assert!(a.total_variation(&b) < 1e-7);
    }

    #[test]
    fn state_specs_round_trip_through_json(n in 0usize..5, mean_n in 0.0..3.0f64, w in 0.0..1.0f64) {
        let spec = StateSpec::mixture([
            (w, StateSpec::Fock { n }),
            (1.0 - w, StateSpec::Thermal { mean_n }),
        ]);
        let text = serde_json::to_string(&spec).unwrap();
        prop_assert_eq!(StateSpec::from_json(&text).unwrap(), spec);
    }
}

#[test]
fn squeezed_vacuum_amplitudes_match_series() {
    let (r, phi) = (0.45, 0.8);
    let state = make_state(&StateSpec::Squeezed { r, phi }, 40).unwrap().state;
    let State::Pure(psi) = state else { panic!("squeezed vacuum should be pure") };
    let z = -C64::from_polar(r.tanh(), phi);
    for k in 0..=20 {
        // ⟨2k|S|0⟩ = √((2k)!) / (2^k k!) (−e^{iφ} tanh r)^k / √cosh r
        let mag = (0.5 * ln_factorial(2 * k) - k as f64 * 2f64.ln() - ln_factorial(k)).exp();
        let expected = z.powu(k as u32) * mag / r.cosh().sqrt();
        assert!((psi.amplitude(&[2 * k]) - expected).norm() < 1e-12, "k = {k}");
        if 2 * k < 40 {
            assert!(psi.amplitude(&[2 * k + 1]).norm() < 1e-14);
        }
    }
}

#[test]
fn two_squeezed_copies_follow_product_series() {
    let (r, phi) = (0.3, -0.5);
    let single = make_state(&StateSpec::Squeezed { r, phi }, 30).unwrap().state;
    let pair = single.copies(2).unwrap();
    let State::Pure(psi) = pair else { panic!("copies of a pure state are pure") };
    let z = -C64::from_polar(r.tanh(), phi);
    for j in 0..6 {
        for k in 0..6 {
            // √((2j)!(2k)!) / (2^{j+k} j! k!) z^{j+k} / cosh r
            let mag = (0.5 * (ln_factorial(2 * j) + ln_factorial(2 * k))
                - (j + k) as f64 * 2f64.ln()
                - ln_factorial(j)
                - ln_factorial(k))
            .exp();
            let expected = z.powu((j + k) as u32) * mag / r.cosh();
            assert!((psi.amplitude(&[2 * j, 2 * k]) - expected).norm() < 1e-10);
        }
    }
}

#[test]
fn displacement_leaves_m_but_not_lz() {
    let rho = make_state(&StateSpec::Fock { n: 1 }, 20).unwrap().state;
    let shifted = apply_sequence(&[GaussianUnitarySpec::displace(0, C64::new(0.4, 0.1))], &rho).unwrap();
    assert!(shifted.dropped < 1e-9);
    let moved = shifted.state.renormalize().unwrap();
    let m_tv = outcome_distribution_m(&rho).unwrap().total_variation(&outcome_distribution_m(&moved).unwrap());
    let lz_tv = outcome_distribution_lz(&rho).unwrap().total_variation(&outcome_distribution_lz(&moved).unwrap());
    assert!(m_tv < 1e-7, "{m_tv}");
    assert!(lz_tv > 1e-3, "{lz_tv}");
}
