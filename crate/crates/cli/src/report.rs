//! Serialized command outputs.

use multicopy_core::distribution::{shannon_entropy, OutcomeDistribution};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionEntry {
    pub twice_m: i64,
    pub m: f64,
    pub p: f64,
}

pub fn entries(dist: &OutcomeDistribution) -> Vec<DistributionEntry> {
    dist.iter().map(|(m, p)| DistributionEntry { twice_m: m.twice(), m: m.value(), p }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// `"Lz"` or `"M"`.
    pub observable: String,
    pub cutoff: usize,
    pub distribution: Vec<DistributionEntry>,
    #[serde(rename = "H_nats")]
    pub h_nats: f64,
    #[serde(rename = "H_bits", default, skip_serializing_if = "Option::is_none")]
    pub h_bits: Option<f64>,
    /// `Σ m² p_m`.
    pub variance: f64,
    pub det_gamma: f64,
    pub sr_satisfied: bool,
    pub tail_mass: f64,
    /// Weight of skipped high photon-number sectors.
    pub truncation_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<[f64; 2]>,
}

impl EntropyReport {
    /// Entropy recomputed from the listed probabilities.
    pub fn entropy_from_distribution(&self) -> f64 {
        shannon_entropy(self.distribution.iter().map(|e| e.p))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleCount {
    pub twice_m: i64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitReport {
    pub circuit: String,
    pub modes: usize,
    pub cutoff: usize,
    /// 1-based output modes.
    pub readout: [usize; 2],
    pub distribution: Vec<DistributionEntry>,
    #[serde(rename = "H_nats")]
    pub h_nats: f64,
    #[serde(rename = "H_bits", default, skip_serializing_if = "Option::is_none")]
    pub h_bits: Option<f64>,
    pub tail_mass: f64,
    /// Probability lost from the truncation (skipped sectors or amplitude leaving the box).
    pub truncation_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<SampleCount>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    #[serde(rename = "H_circuit")]
    pub h_circuit: Option<f64>,
    #[serde(rename = "H_closed_form")]
    pub h_closed_form: Option<f64>,
    pub abs_diff: Option<f64>,
    #[serde(rename = "E")]
    pub e: Option<f64>,
    pub h_xp: Option<f64>,
    pub cutoff: Option<usize>,
    pub status: String,
}
