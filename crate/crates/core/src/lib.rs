//! Weighted best approximations of real vectors, the diagonal flow on the
//! space of unimodular lattices, and statistics of its cross-section.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod best_approx;
pub mod ergodic;
pub mod error;
pub mod interval;
pub mod lattice;
pub mod quasinorm;
pub mod section_mc;
mod serde_big;
pub mod theta;
pub mod weights;

pub use error::{Error, Result};
pub use interval::DyadicInterval;
pub use lattice::{FlowParams, Region, UnimodularLattice};
pub use quasinorm::{quasi_norm, quasi_norm_at, quasi_norm_compare, scale_w, WCoord, WVector};
pub use theta::ThetaVector;
pub use weights::WeightVector;

/// Precision schedule shared by every certified comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct PrecisionConfig {
    pub start_bits: u32,
    pub max_bits: u32,
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        PrecisionConfig {
            start_bits: 128,
            max_bits: 8192,
        }
    }
}

impl PrecisionConfig {
    /// Name of the environment variable overriding the precision ceiling.
    pub const MAX_BITS_ENV: &'static str = "WBA_LAB_MAX_BITS";

    /// Defaults, with `max_bits` taken from `WBA_LAB_MAX_BITS` when set.
    pub fn from_env() -> Result<Self> {
        let mut cfg = Self::default();
        if let Ok(v) = std::env::var(Self::MAX_BITS_ENV) {
            let bits: u32 = v.trim().parse().map_err(|_| {
                Error::InvalidArgument(format!("{} must be a positive integer, got {v:?}", Self::MAX_BITS_ENV))
            })?;
            if bits < cfg.start_bits {
                return Err(Error::InvalidArgument(format!(
                    "{} must be at least {}",
                    Self::MAX_BITS_ENV,
                    cfg.start_bits
                )));
            }
            cfg.max_bits = bits;
        }
        Ok(cfg)
    }
}
