//! Distributions over half-integer measurement outcomes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// An outcome `m ∈ ½ℤ`, stored as the integer `2m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngularOutcome(i64);

impl AngularOutcome {
    pub fn from_twice(twice_m: i64) -> Self {
        Self(twice_m)
    }

    /// Outcome of a photon-number difference readout, `m = (n_a − n_b)/2`.
    pub fn from_counts(n_a: usize, n_b: usize) -> Self {
        Self(n_a as i64 - n_b as i64)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn is_half_integer(self) -> bool {
        self.0 % 2 != 0
    }
}

impl fmt::Display for AngularOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Logarithm base for entropies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyUnit {
    #[default]
    Nats,
    Bits,
}

impl EntropyUnit {
    pub fn from_nats(self, h: f64) -> f64 {
        match self {
            Self::Nats => h,
            Self::Bits => h / std::f64::consts::LN_2,
        }
    }
}

/// `−Σ p ln p` with `0 ln 0 = 0`; non-positive entries are skipped.
pub fn shannon_entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs.into_iter().filter(|&p| p > 0.0).fold(0.0, |h, p| h - p * p.ln())
}

/// Probabilities of outcomes together with truncation bookkeeping.
///
/// Statistics are evaluated on the stored weights as they are; the weights
/// sum to `1 − truncation_loss` up to rounding.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutcomeDistribution {
    probs: BTreeMap<AngularOutcome, f64>,
    truncation_loss: f64,
    tail_mass: f64,
}

impl OutcomeDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn certain(outcome: AngularOutcome) -> Self {
        let mut d = Self::new();
        d.add(outcome, 1.0);
        d
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (AngularOutcome, f64)>) -> Self {
        let mut d = Self::new();
        for (m, p) in pairs {
            d.add(m, p);
        }
        d
    }

    pub fn add(&mut self, outcome: AngularOutcome, p: f64) {
        *self.probs.entry(outcome).or_insert(0.0) += p;
    }

    pub fn get(&self, outcome: AngularOutcome) -> f64 {
        self.probs.get(&outcome).copied().unwrap_or(0.0)
    }

    pub fn prob(&self, twice_m: i64) -> f64 {
        self.get(AngularOutcome(twice_m))
    }

    pub fn iter(&self) -> impl Iterator<Item = (AngularOutcome, f64)> + '_ {
        self.probs.iter().map(|(&m, &p)| (m, p))
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn with_truncation_loss(mut self, loss: f64) -> Self {
        self.truncation_loss = loss;
        self
    }

    pub fn with_tail_mass(mut self, tail: f64) -> Self {
        self.tail_mass = tail;
        self
    }

    /// Drops entries below `threshold` in absolute value (rounding noise).
    pub fn pruned(mut self, threshold: f64) -> Self {
        self.probs.retain(|_, p| p.abs() >= threshold);
        self
    }

    /// Smallest stored probability; slightly negative values flag rounding.
    pub fn min_probability(&self) -> f64 {
        self.probs.values().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(self.probs.values().copied())
    }

    pub fn entropy_in(&self, unit: EntropyUnit) -> f64 {
        unit.from_nats(self.entropy())
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(m, p)| m.value() * p).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(m, p)| m.value() * m.value() * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.second_moment() - mean * mean
    }

    /// `½ Σ |p − q|` over the union of supports.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let mut keys: Vec<AngularOutcome> = self.probs.keys().chain(other.probs.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        0.5 * keys.iter().map(|&k| (self.get(k) - other.get(k)).abs()).sum::<f64>()
    }

    /// Mirror image `m → −m`.
    pub fn reflected(&self) -> Self {
        Self {
            probs: self.probs.iter().map(|(m, &p)| (AngularOutcome(-m.0), p)).collect(),
            ..*self
        }
    }

    pub fn support(&self, threshold: f64) -> Vec<AngularOutcome> {
        self.iter().filter(|&(_, p)| p > threshold).map(|(m, _)| m).collect()
    }
}
