//! Growth rates of `q_n` and decay rates of `r_n` over a sample of `theta`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::stats::{linear_fit, mean_std};
use crate::best_approx::{enumerate_best_approx_fast, BestApproxSequence};
use crate::error::{Error, Result};
use crate::lattice::theta_lattice::GUARD_BITS;
use crate::theta::{Provenance, ThetaVector};
use crate::weights::WeightVector;

/// Fractional bits of sampled `theta`.
pub const THETA_BITS: u32 = 4096;

/// The `index`-th sampled vector for `seed`: stream `index` of ChaCha8.
pub fn sample_theta(d: usize, bits: u32, seed: u64, index: u64) -> Result<ThetaVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    Ok(ThetaVector::sample_uniform(d, bits, &mut rng)?.with_provenance(Provenance::Sampled { seed, stream: index }))
}

/// Longest orbit time a `bits`-bit `theta` supports.
pub fn time_budget(bits: u32, w: &WeightVector) -> f64 {
    (f64::from(bits) - GUARD_BITS as f64).max(0.0) * std::f64::consts::LN_2 / (1.0 + w.max_value())
}

/// Sampled vectors whose enumeration reached `n_records` records, and the
/// number of vectors dropped (terminal, out of precision, or failed).
pub(crate) fn sample_sequences(
    w: &WeightVector,
    n_theta: usize,
    n_records: usize,
    seed: u64,
    max_bits: u32,
) -> Result<(Vec<BestApproxSequence>, u64)> {
    if n_theta == 0 || n_records == 0 {
        return Err(Error::InvalidArgument("n_theta and n_records must be positive".into()));
    }
    let bits = THETA_BITS.min(max_bits);
    let t_budget = time_budget(bits, w);
    let results: Vec<Option<BestApproxSequence>> = (0..n_theta as u64)
        .into_par_iter()
        .map(|k| {
            let theta = Arc::new(sample_theta(w.dim(), THETA_BITS, seed, k).ok()?);
            match enumerate_best_approx_fast(theta, w, n_records, t_budget, max_bits) {
                Ok(s) if s.len() >= n_records && !s.records[..n_records].iter().any(|r| r.is_exact_hit()) => Some(s),
                Ok(_) => None,
                Err(e) => {
                    log::warn!("theta #{k} dropped: {e}");
                    None
                }
            }
        })
        .collect();
    let dropped = results.iter().filter(|r| r.is_none()).count() as u64;
    let kept: Vec<BestApproxSequence> = results.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "all {n_theta} sampled vectors were dropped before reaching {n_records} records"
        )));
    }
    Ok((kept, dropped))
}

/// Per-`theta` growth data.
#[derive(Debug, Clone, Serialize)]
pub struct LevyRun {
    pub stream: u64,
    /// `(1/n) ln q_n` at `n = n_records`.
    pub ln_q_rate: f64,
    /// `(1/n) ln r_n` at `n = n_records`.
    pub ln_r_rate: f64,
    /// Least-squares slope of `ln q_n` against `n`.
    pub slope_ln_q: f64,
    /// Least-squares slope of `ln r_n` against `n`.
    pub slope_ln_r: f64,
    #[serde(skip)]
    pub ln_q: Vec<f64>,
    #[serde(skip)]
    pub ln_r: Vec<f64>,
}

impl LevyRun {
    fn from_sequence(s: &BestApproxSequence, n: usize) -> Self {
        let ln_q: Vec<f64> = s.records[..n].iter().map(|r| r.ln_q()).collect();
        let ln_r: Vec<f64> = s.records[..n].iter().map(|r| r.log_r).collect();
        let idx: Vec<f64> = (1..=n).map(|k| k as f64).collect();
        let stream = match s.theta.provenance() {
            Provenance::Sampled { stream, .. } => *stream,
            Provenance::UserSupplied => 0,
        };
        LevyRun {
            stream,
            ln_q_rate: ln_q[n - 1] / n as f64,
            ln_r_rate: ln_r[n - 1] / n as f64,
            slope_ln_q: linear_fit(&idx, &ln_q).0,
            slope_ln_r: linear_fit(&idx, &ln_r).0,
            ln_q,
            ln_r,
        }
    }

    /// `|slope(ln r_n) + slope(ln q_n)| / slope(ln q_n)`.
    pub fn linkage_defect(&self) -> f64 {
        (self.slope_ln_r + self.slope_ln_q).abs() / self.slope_ln_q
    }
}

/// Pooled estimate of `L_d(w) = lim (1/n) ln q_n`.
#[derive(Debug, Clone, Serialize)]
pub struct LevyEstimate {
    pub d: usize,
    pub w: WeightVector,
    pub n_theta: usize,
    pub n_records: usize,
    pub seed: u64,
    pub dropped: u64,
    /// Mean of `(1/n) ln q_n` at `n = n_records` over the kept sample.
    pub l_hat: f64,
    pub l_hat_stderr: f64,
    /// Mean of `(1/n) ln r_n`, which should approach `-l_hat`.
    pub ln_r_rate: f64,
    pub mean_slope_ln_q: f64,
    pub mean_slope_ln_r: f64,
    pub per_theta: Vec<LevyRun>,
}

impl LevyEstimate {
    /// Standard deviation of `(1/n) ln q_n` across the sample at record `n`.
    pub fn spread_at(&self, n: usize) -> f64 {
        let rates: Vec<f64> = self
            .per_theta
            .iter()
            .filter(|r| r.ln_q.len() >= n)
            .map(|r| r.ln_q[n - 1] / n as f64)
            .collect();
        mean_std(&rates).1
    }

    /// `n / ln q_n`, the rate of visits to `B` per unit time along the orbit.
    pub fn visit_rate(&self) -> f64 {
        1.0 / self.l_hat
    }
}

/// Samples `n_theta` dyadic vectors with [`THETA_BITS`] bits and follows
/// each through `n_records` best approximations.
pub fn estimate_levy(
    w: &WeightVector,
    n_theta: usize,
    n_records: usize,
    seed: u64,
    max_bits: u32,
) -> Result<LevyEstimate> {
    let (seqs, dropped) = sample_sequences(w, n_theta, n_records, seed, max_bits)?;
    let per_theta: Vec<LevyRun> = seqs.iter().map(|s| LevyRun::from_sequence(s, n_records)).collect();
    let collect = |f: fn(&LevyRun) -> f64| per_theta.iter().map(f).collect::<Vec<f64>>();
    let (l_hat, sd) = mean_std(&collect(|r| r.ln_q_rate));
    let (ln_r_rate, _) = mean_std(&collect(|r| r.ln_r_rate));
    let (mean_slope_ln_q, _) = mean_std(&collect(|r| r.slope_ln_q));
    let (mean_slope_ln_r, _) = mean_std(&collect(|r| r.slope_ln_r));
    Ok(LevyEstimate {
        d: w.dim(),
        w: w.clone(),
        n_theta,
        n_records,
        seed,
        dropped,
        l_hat,
        l_hat_stderr: sd / (per_theta.len() as f64).sqrt(),
        ln_r_rate,
        mean_slope_ln_q,
        mean_slope_ln_r,
        per_theta,
    })
}
