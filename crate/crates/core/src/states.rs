//! Single-mode state constructors and the JSON state specification.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityOp, FockArray, FockTruncation, State, TailReport, NORM_TOL};
use crate::gaussian::GaussianUnitarySpec;
use crate::serde_util::complex_pair;

/// Default threshold for [`TailGate`].
pub const DEFAULT_MAX_TAIL: f64 = 1e-8;

/// Description of a one-mode state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Vacuum,
    Fock {
        n: usize,
    },
    Coherent {
        #[serde(with = "complex_pair")]
        alpha: C64,
    },
    /// `S(s)|0⟩` with `s = r e^{iφ}`.
    Squeezed {
        r: f64,
        #[serde(default)]
        phi: f64,
    },
    Thermal {
        mean_n: f64,
    },
    /// `D(α) S(s) ρ_th S(s)† D(α)†`.
    DisplacedSqueezedThermal {
        #[serde(default)]
        mean_n: f64,
        #[serde(default)]
        r: f64,
        #[serde(default)]
        phi: f64,
        #[serde(default, with = "complex_pair")]
        alpha: C64,
    },
    Mixture {
        components: Vec<MixtureComponent>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub state: StateSpec,
}

impl StateSpec {
    /// Parses JSON, reporting the offending field path on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Spec {
            path: ".".into(),
            message: e.to_string(),
        })?;
        Self::from_value_at(value, String::new())
    }

    // Tagged enums buffer their content, which hides nested paths from
    // serde; mixtures are therefore unpacked by hand.
    fn from_value_at(value: serde_json::Value, path: String) -> Result<Self> {
        let spec_error = |path: &str, message: String| Error::Spec {
            path: if path.is_empty() { ".".into() } else { path.to_string() },
            message,
        };
        if value.get("kind").and_then(|k| k.as_str()) != Some("mixture") {
            return serde_json::from_value(value).map_err(|e| spec_error(&path, e.to_string()));
        }
        let serde_json::Value::Object(mut map) = value else { unreachable!("has a kind field") };
        map.remove("kind");
        let components = match map.remove("components") {
            Some(serde_json::Value::Array(items)) => items,
            Some(_) => return Err(spec_error(&join(&path, "components"), "expected an array".into())),
            None => return Err(spec_error(&path, "missing field `components`".into())),
        };
        if let Some(extra) = map.keys().next() {
            return Err(spec_error(&join(&path, extra), format!("unknown field `{extra}`")));
        }
        let mut out = Vec::with_capacity(components.len());
        for (i, item) in components.into_iter().enumerate() {
            let here = format!("{}[{i}]", join(&path, "components"));
            let serde_json::Value::Object(mut fields) = item else {
                return Err(spec_error(&here, "expected an object with `weight` and `state`".into()));
            };
            let weight = match fields.remove("weight") {
                Some(w) => w.as_f64().ok_or_else(|| spec_error(&join(&here, "weight"), "expected a number".into()))?,
                None => return Err(spec_error(&here, "missing field `weight`".into())),
            };
            let state = match fields.remove("state") {
                Some(v) => Self::from_value_at(v, join(&here, "state"))?,
                None => return Err(spec_error(&here, "missing field `state`".into())),
            };
            if let Some(extra) = fields.keys().next() {
                return Err(spec_error(&join(&here, extra), format!("unknown field `{extra}`")));
            }
            out.push(MixtureComponent { weight, state });
        }
        Ok(Self::Mixture { components: out })
    }

    pub fn mixture(components: impl IntoIterator<Item = (f64, StateSpec)>) -> Self {
        Self::Mixture {
            components: components.into_iter().map(|(weight, state)| MixtureComponent { weight, state }).collect(),
        }
    }

    /// Symplectic eigenvalue `ν` for Gaussian specs.
    pub fn gaussian_nu(&self) -> Option<f64> {
        match *self {
            Self::Vacuum | Self::Coherent { .. } | Self::Squeezed { .. } | Self::Fock { n: 0 } => Some(0.5),
            Self::Thermal { mean_n } | Self::DisplacedSqueezedThermal { mean_n, .. } => Some(mean_n + 0.5),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        match self {
            Self::Vacuum | Self::Fock { .. } => Ok(()),
            Self::Coherent { alpha } => {
                if alpha.is_finite() {
                    Ok(())
                } else {
                    bad("non-finite displacement")
                }
            }
            Self::Squeezed { r, phi } => {
                if r.is_finite() && phi.is_finite() && *r >= 0.0 {
                    Ok(())
                } else {
                    bad("squeezing needs finite r ≥ 0 and finite phi")
                }
            }
            Self::Thermal { mean_n } => check_mean(*mean_n),
            Self::DisplacedSqueezedThermal { mean_n, r, phi, alpha } => {
                check_mean(*mean_n)?;
                if !(r.is_finite() && *r >= 0.0 && phi.is_finite() && alpha.is_finite()) {
                    return bad("displaced squeezed thermal state needs finite r ≥ 0, phi and alpha");
                }
                Ok(())
            }
            Self::Mixture { components } => {
                if components.is_empty() {
                    return bad("mixture needs at least one component");
                }
                let mut total = 0.0;
                for c in components {
                    if !(c.weight.is_finite() && c.weight >= 0.0) {
                        return bad("mixture weights must be finite and non-negative");
                    }
                    total += c.weight;
                    c.state.validate()?;
                }
                if (total - 1.0).abs() > NORM_TOL {
                    return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, not 1")));
                }
                Ok(())
            }
        }
    }
}

fn join(path: &str, field: &str) -> String {
    if path.is_empty() {
        field.to_string()
    } else {
        format!("{path}.{field}")
    }
}

fn check_mean(mean_n: f64) -> Result<()> {
    if mean_n.is_finite() && mean_n >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mean photon number {mean_n} must be finite and ≥ 0")))
    }
}

/// A constructed state together with its truncation bookkeeping.
#[derive(Clone, Debug)]
pub struct Prepared {
    /// Renormalized state at the requested cutoff.
    pub state: State,
    pub tail: TailReport,
    /// Probability removed by the truncation before renormalizing.
    pub discarded: f64,
}

/// Acceptance threshold for truncation accuracy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailGate {
    pub max_tail: f64,
    /// Turn an exceeded threshold into an error instead of a flag.
    pub strict: bool,
}

impl Default for TailGate {
    fn default() -> Self {
        Self { max_tail: DEFAULT_MAX_TAIL, strict: true }
    }
}

impl TailGate {
    pub fn lenient(max_tail: f64) -> Self {
        Self { max_tail, strict: false }
    }

    /// `Ok(true)` when within the threshold, `Ok(false)` for a lenient miss.
    pub fn check(&self, tail_mass: f64) -> Result<bool> {
        if tail_mass <= self.max_tail {
            Ok(true)
        } else if self.strict {
            Err(Error::TailExceeded { tail_mass, threshold: self.max_tail })
        } else {
            Ok(false)
        }
    }
}

impl Prepared {
    /// Larger of the boundary weight and the discarded weight.
    pub fn truncation_error(&self) -> f64 {
        self.tail.tail_mass.max(self.discarded)
    }
}

pub fn make_state(spec: &StateSpec, cutoff: usize) -> Result<Prepared> {
    spec.validate()?;
    let trunc = FockTruncation::single(cutoff)?;
    let (raw, discarded) = build(spec, trunc)?;
    let state = raw.renormalize()?;
    let tail = state.tail();
    Ok(Prepared { state, tail, discarded })
}

/// [`make_state`] followed by a tail check.
pub fn make_state_gated(spec: &StateSpec, cutoff: usize, gate: TailGate) -> Result<(Prepared, bool)> {
    let prepared = make_state(spec, cutoff)?;
    let ok = gate.check(prepared.truncation_error())?;
    Ok((prepared, ok))
}

/// Unnormalized truncated state and the weight that did not fit.
fn build(spec: &StateSpec, trunc: FockTruncation) -> Result<(State, f64)> {
    let cutoff = trunc.cutoff();
    match spec {
        StateSpec::Vacuum => Ok((State::Pure(FockArray::vacuum(trunc)), 0.0)),
        StateSpec::Fock { n } => {
            if *n > cutoff {
                return Err(Error::InvalidParameter(format!("Fock state |{n}⟩ does not fit below cutoff {cutoff}")));
            }
            Ok((State::Pure(FockArray::basis(trunc, &[*n])?), 0.0))
        }
        StateSpec::Coherent { alpha } => pure_from_vacuum(&[GaussianUnitarySpec::displace(0, *alpha)], trunc),
        StateSpec::Squeezed { r, phi } => pure_from_vacuum(&[GaussianUnitarySpec::squeeze(0, *r, *phi)], trunc),
        StateSpec::Thermal { mean_n } => {
            let probs = thermal_populations(*mean_n, cutoff);
            let discarded = (1.0 - probs.iter().sum::<f64>()).max(0.0);
            Ok((State::Mixed(DensityOp::from_matrix_unchecked(trunc, diag(&probs))?), discarded))
        }
        StateSpec::DisplacedSqueezedThermal { mean_n, r, phi, alpha } => {
            let chain = [GaussianUnitarySpec::squeeze(0, *r, *phi), GaussianUnitarySpec::displace(0, *alpha)];
            if *mean_n == 0.0 {
                return pure_from_vacuum(&chain, trunc);
            }
            displaced_squeezed_thermal(*mean_n, &chain, trunc)
        }
        StateSpec::Mixture { components } => {
            let d = trunc.dim();
            let mut acc = DMatrix::zeros(d, d);
            let mut discarded = 0.0;
            for c in components {
                if c.weight == 0.0 {
                    continue;
                }
                let (part, lost) = build(&c.state, trunc)?;
                let part = part.renormalize()?;
                acc += part.to_density().matrix() * C64::new(c.weight, 0.0);
                discarded += c.weight * lost;
            }
            Ok((State::Mixed(DensityOp::from_matrix_unchecked(trunc, acc)?), discarded))
        }
    }
}

/// Geometric photon-number distribution `⟨n⟩^k / (⟨n⟩+1)^{k+1}` for `k ≤ cutoff`.
pub fn thermal_populations(mean_n: f64, cutoff: usize) -> Vec<f64> {
    if mean_n == 0.0 {
        let mut p = vec![0.0; cutoff + 1];
        p[0] = 1.0;
        return p;
    }
    let q = mean_n / (mean_n + 1.0);
    let mut p = 1.0 / (mean_n + 1.0);
    (0..=cutoff)
        .map(|_| {
            let out = p;
            p *= q;
            out
        })
        .collect()
}

fn diag(probs: &[f64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_iterator(probs.len(), probs.iter().map(|&p| C64::new(p, 0.0))))
}

/// Padded cutoff able to host every element of `chain` acting on states supported below `support`.
fn chain_work_cutoff(chain: &[GaussianUnitarySpec], support: usize) -> Result<usize> {
    let mut w = support;
    for spec in chain {
        w = w.max(spec.working_cutoff(support)?);
    }
    Ok(w)
}

fn chain_unitary(chain: &[GaussianUnitarySpec], work: usize) -> Result<DMatrix<C64>> {
    let mut u = DMatrix::identity(work + 1, work + 1);
    for spec in chain {
        u = spec.single_mode_unitary(work)? * u;
    }
    Ok(u)
}

fn pure_from_vacuum(chain: &[GaussianUnitarySpec], trunc: FockTruncation) -> Result<(State, f64)> {
    let work = chain_work_cutoff(chain, trunc.cutoff())?;
    let u = chain_unitary(chain, work)?;
    let full = u.column(0);
    let kept = DVector::from_iterator(trunc.local_dim(), full.iter().take(trunc.local_dim()).copied());
    let discarded = full.iter().skip(trunc.local_dim()).map(|z| z.norm_sqr()).sum();
    Ok((State::Pure(FockArray::new(trunc, kept)?), discarded))
}

/// Thermal state pushed through `chain`, one Fock component at a time.
fn displaced_squeezed_thermal(mean_n: f64, chain: &[GaussianUnitarySpec], trunc: FockTruncation) -> Result<(State, f64)> {
    let q = mean_n / (mean_n + 1.0);
    // keep Fock components until the geometric tail is negligible
    let support = ((40.0 * std::f64::consts::LN_10) / -q.ln()).ceil() as usize;
    let support = support.max(trunc.cutoff());
    let probs = thermal_populations(mean_n, support);
    let work = chain_work_cutoff(chain, support)?;
    let u = chain_unitary(chain, work)?;
    let d = trunc.local_dim();
    let mut rho = DMatrix::zeros(d, d);
    let mut kept_weight = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        if p < 1e-300 {
            break;
        }
        let col = u.column(k);
        let head = DVector::from_iterator(d, col.iter().take(d).copied());
        kept_weight += p * head.norm_squared();
        rho.ger(C64::new(p, 0.0), &head, &head.conjugate(), C64::new(1.0, 0.0));
    }
    Ok((State::Mixed(DensityOp::from_matrix_unchecked(trunc, rho)?), (1.0 - kept_weight).max(0.0)))
}
