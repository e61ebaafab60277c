//! `w`-best approximations `(p_n, q_n)` of a vector `theta`.

mod brute;
mod fast;
mod nearest;
mod prefix;
mod regular;

use std::sync::Arc;

use rug::Integer;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::DyadicInterval;
use crate::quasinorm::{compare_scaled_residual_to_one, ln_abs, ln_norm_residual, residual_norm_interval};
use crate::serde_big;
use crate::theta::ThetaVector;
use crate::weights::WeightVector;

pub use brute::enumerate_best_approx_bruteforce;
pub use fast::enumerate_best_approx_fast;
pub use nearest::nearest_p;
pub use prefix::prefix_equivalent;
pub use regular::enumerate_regular_best_approx;

/// Working precision of the stored enclosures of `r`.
pub const RECORD_BITS: u32 = 128;

/// One best approximation `(p, q)` with `r = ||q theta - p||_w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestApproxRecord {
    #[serde(with = "serde_big::integers")]
    pub p: Vec<Integer>,
    #[serde(with = "serde_big::integer")]
    pub q: Integer,
    pub r: DyadicInterval,
    /// `ln r` in double precision (`-inf` for an exact hit).
    pub log_r: f64,
    pub certified: bool,
    #[serde(skip)]
    pub(crate) res: Vec<Integer>,
}

impl BestApproxRecord {
    pub(crate) fn new(p: Vec<Integer>, q: Integer, res: Vec<Integer>, theta: &ThetaVector, w: &WeightVector) -> Self {
        let den = theta.den();
        let r = residual_norm_interval(&res, den, w, RECORD_BITS);
        let log_r = ln_norm_residual(&res, ln_abs(den), w);
        BestApproxRecord {
            p,
            q,
            r,
            log_r,
            certified: true,
            res,
        }
    }

    /// Scaled residual `p den - q numer`.
    pub fn residual(&self) -> &[Integer] {
        &self.res
    }

    pub fn is_exact_hit(&self) -> bool {
        self.res.iter().all(|x| *x == 0)
    }

    pub fn ln_q(&self) -> f64 {
        ln_abs(&self.q)
    }
}

/// Which quasi-norm defines the records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxKind {
    Weighted,
    Regular,
}

/// Best approximations of `theta` in increasing `q`, complete up to `horizon_q`.
#[derive(Debug, Clone, Serialize)]
pub struct BestApproxSequence {
    pub theta: Arc<ThetaVector>,
    pub w: WeightVector,
    pub kind: ApproxKind,
    pub records: Vec<BestApproxRecord>,
    pub terminal: bool,
    #[serde(with = "serde_big::integer")]
    pub horizon_q: Integer,
}

impl BestApproxSequence {
    pub fn q_values(&self) -> Vec<Integer> {
        self.records.iter().map(|r| r.q.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `beta_n = q_(n+1) r_n` for consecutive records.
    pub fn betas(&self) -> Vec<DyadicInterval> {
        self.records
            .windows(2)
            .map(|pair| DyadicInterval::from_rational(&pair[1].q.clone().into(), RECORD_BITS).mul(&pair[0].r))
            .collect()
    }

    /// `beta_n` in double precision.
    pub fn betas_f64(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .map(|pair| (pair[1].ln_q() + pair[0].log_r).exp())
            .collect()
    }

    /// Exact check of `q_(n+1) r_n <= 1` for every consecutive pair.
    pub fn check_minkowski(&self) -> Result<()> {
        let den = self.theta.den();
        for pair in self.records.windows(2) {
            if compare_scaled_residual_to_one(&pair[1].q, &pair[0].res, den, &self.w).is_gt() {
                return Err(Error::InvalidArgument(format!(
                    "Minkowski bound violated between q = {} and q = {}",
                    pair[0].q, pair[1].q
                )));
            }
        }
        Ok(())
    }

    /// Records with `q <= bound`.
    pub fn truncated(&self, bound: &Integer) -> Vec<&BestApproxRecord> {
        self.records.iter().filter(|r| r.q <= *bound).collect()
    }
}

pub(crate) fn check_dims(theta: &ThetaVector, w: &WeightVector) -> Result<()> {
    if theta.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: theta.dim(),
        });
    }
    Ok(())
}
