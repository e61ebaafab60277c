//! Empirical distribution of `beta_n = q_(n+1) ||q_n theta - p_n||_w`.

use serde::Serialize;

use super::levy::sample_sequences;
use super::stats::ks_statistic;
use crate::best_approx::BestApproxSequence;
use crate::error::{Error, Result};
use crate::weights::WeightVector;

/// Histogram of `beta_n` on `(0, 1]` with equal bins `(k/b, (k+1)/b]`.
#[derive(Debug, Clone, Serialize)]
pub struct BetaHistogram {
    pub d: usize,
    pub w: WeightVector,
    pub seed: u64,
    pub n_theta: usize,
    pub n_records: usize,
    pub dropped: u64,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub n_total: u64,
    /// Empirical CDF at the right edge of each bin.
    pub ecdf: Vec<f64>,
    /// KS distance between each vector's `beta_n` and the pool.
    pub ks_per_theta: Vec<f64>,
    pub ks_max: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl BetaHistogram {
    /// Builds the histogram from raw values in `(0, 1]`.
    pub fn from_values(mut values: Vec<f64>, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("bins must be positive".into()));
        }
        if let Some(bad) = values.iter().find(|b| !(**b > 0.0 && **b <= 1.0 + 1e-12)) {
            return Err(Error::InvalidArgument(format!("beta value {bad} outside (0, 1]")));
        }
        values.sort_by(f64::total_cmp);
        let mut counts = vec![0u64; bins];
        for b in &values {
            let k = ((b * bins as f64).ceil() as usize).clamp(1, bins) - 1;
            counts[k] += 1;
        }
        let n_total = values.len() as u64;
        let mut acc = 0;
        let ecdf = counts
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / n_total.max(1) as f64
            })
            .collect();
        Ok(BetaHistogram {
            d: 0,
            w: WeightVector::equal(1),
            seed: 0,
            n_theta: 0,
            n_records: 0,
            dropped: 0,
            edges: (0..=bins).map(|k| k as f64 / bins as f64).collect(),
            counts,
            n_total,
            ecdf,
            ks_per_theta: Vec::new(),
            ks_max: 0.0,
            values,
        })
    }

    /// Two-sample KS distance between the raw pooled values.
    pub fn ks_distance(&self, other: &BetaHistogram) -> f64 {
        ks_statistic(&self.values, &other.values)
    }
}

/// `beta_1, ..., beta_n` of a sequence with at least `n + 1` records, after
/// the exact check `q_(n+1) r_n <= 1`.
pub fn sequence_betas(s: &BestApproxSequence, n: usize) -> Result<Vec<f64>> {
    s.check_minkowski()?;
    let mut b = s.betas_f64();
    b.truncate(n);
    Ok(b)
}

/// Pooled histogram of `beta_n`, `n = 1..n_records`, over a `theta` sample.
pub fn beta_distribution(
    w: &WeightVector,
    n_theta: usize,
    n_records: usize,
    bins: usize,
    seed: u64,
    max_bits: u32,
) -> Result<BetaHistogram> {
    let (seqs, dropped) = sample_sequences(w, n_theta, n_records + 1, seed, max_bits)?;
    let mut per_theta = Vec::with_capacity(seqs.len());
    for s in &seqs {
        let mut b = sequence_betas(s, n_records)?;
        b.sort_by(f64::total_cmp);
        per_theta.push(b);
    }
    let mut hist = BetaHistogram::from_values(per_theta.concat(), bins)?;
    hist.ks_per_theta = per_theta.iter().map(|b| ks_statistic(b, &hist.values)).collect();
    hist.ks_max = hist.ks_per_theta.iter().cloned().fold(0.0, f64::max);
    hist.d = w.dim();
    hist.w = w.clone();
    hist.seed = seed;
    hist.n_theta = n_theta;
    hist.n_records = n_records;
    hist.dropped = dropped;
    Ok(hist)
}
