pub mod circuits;
pub mod distribution;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod operators;
pub mod phase_space;
pub mod sector;
mod serde_util;
pub mod states;
pub mod three_copy;
pub mod two_copy;
pub mod verify;

pub use error::{Error, Result};
pub use fock::{DensityOp, FockArray, FockTruncation, State, TailReport};
pub use num_complex::Complex64 as C64;
