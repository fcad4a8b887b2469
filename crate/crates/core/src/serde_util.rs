//! Serde adapters for the JSON formats: complex numbers as `[re, im]` and
//! 1-based mode labels.

use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};

pub mod complex_pair {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([z.re, z.im])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

pub mod one_based {
    use super::*;

    pub fn serialize<S: Serializer>(mode: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*mode as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let label = usize::deserialize(d)?;
        label.checked_sub(1).ok_or_else(|| D::Error::custom("mode labels start at 1"))
    }
}

pub mod one_based_pair {
    use super::*;

    pub fn serialize<S: Serializer>(modes: &[usize; 2], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(modes.iter().map(|m| m + 1))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[usize; 2], D::Error> {
        let [a, b] = <[usize; 2]>::deserialize(d)?;
        match (a.checked_sub(1), b.checked_sub(1)) {
            (Some(a), Some(b)) => Ok([a, b]),
            _ => Err(D::Error::custom("mode labels start at 1")),
        }
    }
}
