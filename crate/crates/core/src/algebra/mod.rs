//! Dense Hermitian matrices over the reals, complex numbers and quaternions.

mod matrix;
mod psd;
mod quaternion;

pub use matrix::{ldl_positive, partial_transpose, pt_source, Matrix, Scalar};
pub use psd::{
    embed, hermitian_eigenvalues, is_psd_fast, psd_check, quat_embed, PsdReport, DEFAULT_PSD_TOL,
};
pub use quaternion::Quaternion;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dyson index: number of real parameters per off-diagonal entry.
///
/// `Truncated` is the quaternionic field with the k-component fixed to zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u32", try_from = "u32")]
pub enum Dyson {
    Real,
    Complex,
    Truncated,
    Quaternion,
}

impl Dyson {
    pub const ALL: [Dyson; 4] = [Dyson::Real, Dyson::Complex, Dyson::Truncated, Dyson::Quaternion];

    pub fn beta(self) -> u32 {
        match self {
            Dyson::Real => 1,
            Dyson::Complex => 2,
            Dyson::Truncated => 3,
            Dyson::Quaternion => 4,
        }
    }

    pub fn beta_f64(self) -> f64 {
        self.beta() as f64
    }

    pub fn from_beta(beta: u32) -> Result<Self> {
        match beta {
            1 => Ok(Dyson::Real),
            2 => Ok(Dyson::Complex),
            3 => Ok(Dyson::Truncated),
            4 => Ok(Dyson::Quaternion),
            _ => Err(Error::InvalidArgument(format!("beta must be 1, 2, 3 or 4, got {beta}"))),
        }
    }
}

impl From<Dyson> for u32 {
    fn from(d: Dyson) -> u32 {
        d.beta()
    }
}

impl TryFrom<u32> for Dyson {
    type Error = Error;
    fn try_from(b: u32) -> Result<Self> {
        Dyson::from_beta(b)
    }
}

impl std::fmt::Display for Dyson {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.beta())
    }
}
