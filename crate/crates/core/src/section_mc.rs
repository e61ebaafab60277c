//! Monte Carlo estimate of `mu_(S_1)(B)` through the parametrization
//! `(Lambda, v) -> u(v) Lambda` of `S_1` by `E_(d+1) x B_1^w`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{classify_section_point, LatticeOrigin, SectionClass, UnimodularLattice};
use crate::weights::WeightVector;

/// Samples drawn from one random stream.
pub const SHARD_SIZE: u64 = 1 << 16;

/// Largest admissible fraction of boundary-ambiguous samples.
pub const AMBIGUITY_BUDGET: f64 = 1e-3;

/// `zeta(3)`.
pub const ZETA_3: f64 = 1.202_056_903_159_594_2;

/// `zeta(s)` for integer `s >= 2`.
pub fn zeta(s: u32) -> f64 {
    match s {
        2 => PI * PI / 6.0,
        3 => ZETA_3,
        4 => PI.powi(4) / 90.0,
        _ => {
            let n = 64u32;
            let head: f64 = (1..n).map(|k| f64::from(k).powi(-(s as i32))).sum();
            let nf = f64::from(n);
            let sf = f64::from(s);
            head + nf.powf(1.0 - sf) / (sf - 1.0) + 0.5 * nf.powf(-sf) + sf * nf.powf(-sf - 1.0) / 12.0
        }
    }
}

/// `Vol(B_1^w)`: the closed unit ball of `||.||_w` is the cube `[-1, 1]^d`,
/// whatever the weights.
pub fn unit_ball_volume(w: &WeightVector) -> Rational {
    Rational::from(Integer::from(1) << w.dim() as u32)
}

/// `Vol(B_1^w) / zeta(d + 1)`, the total mass of `S_1`.
pub fn section_total_mass(w: &WeightVector) -> f64 {
    unit_ball_volume(w).to_f64() / zeta(w.dim() as u32 + 1)
}

/// A point `x + iy` of the standard fundamental domain of `SL_2(Z)`,
/// distributed as `(3 / pi) y^(-2) dx dy`.
pub fn sample_modular_point<R: Rng>(rng: &mut R) -> (f64, f64) {
    let y0 = 3f64.sqrt() / 2.0;
    loop {
        let x: f64 = rng.random::<f64>() - 0.5;
        let u: f64 = 1.0 - rng.random::<f64>();
        let y = y0 / u;
        if x * x + y * y >= 1.0 {
            return (x, y);
        }
    }
}

/// Haar-random element of `SL_2(R) / SL_2(Z)`, as a column basis.
fn sample_sl2<R: Rng>(rng: &mut R) -> [[f64; 2]; 2] {
    let (x, y) = sample_modular_point(rng);
    let phi = 2.0 * PI * rng.random::<f64>();
    let (s, c) = phi.sin_cos();
    let a = y.powf(-0.5);
    let b = x * a;
    let e = y.sqrt();
    // k_phi * [[a, b], [0, e]]
    [[c * a, c * b - s * e], [s * a, s * b + c * e]]
}

/// Columns of `[[A, 0], [h^T, 1]]` for a random lattice of `E_(d+1)`.
fn sample_e_columns<R: Rng>(d: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let a: Vec<Vec<f64>> = match d {
        1 => vec![vec![1.0]],
        2 => {
            let m = sample_sl2(rng);
            vec![vec![m[0][0], m[1][0]], vec![m[0][1], m[1][1]]]
        }
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    let mut cols = Vec::with_capacity(d + 1);
    for col in a {
        let h: f64 = rng.random();
        let mut c = col;
        c.push(h);
        cols.push(c);
    }
    let mut last = vec![0.0; d];
    last.push(1.0);
    cols.push(last);
    Ok(cols)
}

/// A random lattice of `E_(d+1)` (it contains `e_(d+1)` as a primitive
/// vector), for `d` in `{1, 2}`.
pub fn sample_e<R: Rng>(d: usize, rng: &mut R) -> Result<UnimodularLattice> {
    Ok(UnimodularLattice::from_columns_unchecked(
        sample_e_columns(d, rng)?,
        LatticeOrigin::Sampled,
    ))
}

/// [`sample_e`] from a seed.
pub fn sample_e_seeded(d: usize, seed: u64) -> Result<UnimodularLattice> {
    sample_e(d, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// One point `u(v) Lambda` of `S_1` and its classification.
#[derive(Debug, Clone)]
pub struct SectionSample {
    pub base: UnimodularLattice,
    pub v: Vec<f64>,
    pub assembled: UnimodularLattice,
    pub classification: Result<SectionClass>,
}

/// Draws `Lambda` from `E_(d+1)` and `v` uniformly from `B_1^w`, and
/// classifies `u(v) Lambda`.
pub fn sample_section<R: Rng>(w: &WeightVector, rng: &mut R) -> Result<SectionSample> {
    let d = w.dim();
    let cols = sample_e_columns(d, rng)?;
    let v: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
    let assembled_cols: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let y = c[d];
            let mut out: Vec<f64> = (0..d).map(|i| c[i] + v[i] * y).collect();
            out.push(y);
            out
        })
        .collect();
    let base = UnimodularLattice::from_columns_unchecked(cols, LatticeOrigin::Sampled);
    let assembled = UnimodularLattice::from_columns_unchecked(assembled_cols, LatticeOrigin::Sampled);
    let classification = classify_section_point(&assembled, w);
    Ok(SectionSample {
        base,
        v,
        assembled,
        classification,
    })
}

/// Outcome of [`estimate_b_probability`].
#[derive(Debug, Clone, Serialize)]
pub struct MCEstimate {
    pub n_samples: u64,
    pub hits_b: u64,
    /// Samples whose witness was not the unique vector in `D_1`.
    pub not_sharp: u64,
    pub ambiguous: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub seed: u64,
    pub d: usize,
    pub w: WeightVector,
}

impl MCEstimate {
    /// `mu_(S_1)(B) = Vol(B_1^w) p / zeta(d + 1)`, scaled by `calibration`.
    pub fn section_measure(&self, calibration: f64) -> f64 {
        calibration * section_total_mass(&self.w) * self.p_hat
    }
}

#[derive(Default, Clone, Copy)]
struct Counts {
    hits: u64,
    not_sharp: u64,
    ambiguous: u64,
}

fn run_shard(w: &WeightVector, seed: u64, shard: u64, n: u64) -> Result<Counts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    let mut c = Counts::default();
    for _ in 0..n {
        match sample_section(w, &mut rng)?.classification {
            Ok(SectionClass::S1Sharp { in_b, .. }) => c.hits += u64::from(in_b),
            Ok(_) => c.not_sharp += 1,
            Err(Error::BoundaryAmbiguous) => c.ambiguous += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(c)
}

/// Fraction of `S_1` (under the product measure) lying in `B`.
///
/// Samples are split into shards of [`SHARD_SIZE`], shard `k` using stream
/// `k` of ChaCha8 seeded with `seed`, so the result does not depend on the
/// number of worker threads.
pub fn estimate_b_probability(w: &WeightVector, n_samples: u64, seed: u64) -> Result<MCEstimate> {
    let d = w.dim();
    if !(1..=2).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let shards = n_samples.div_ceil(SHARD_SIZE);
    let counts: Vec<Counts> = (0..shards)
        .into_par_iter()
        .map(|k| {
            let n = SHARD_SIZE.min(n_samples - k * SHARD_SIZE);
            run_shard(w, seed, k, n)
        })
        .collect::<Result<_>>()?;
    let total = counts.iter().fold(Counts::default(), |a, b| Counts {
        hits: a.hits + b.hits,
        not_sharp: a.not_sharp + b.not_sharp,
        ambiguous: a.ambiguous + b.ambiguous,
    });
    if total.ambiguous as f64 > AMBIGUITY_BUDGET * n_samples as f64 {
        return Err(Error::AmbiguityBudgetExceeded {
            ambiguous: total.ambiguous,
            total: n_samples,
            budget_fraction: AMBIGUITY_BUDGET,
        });
    }
    let n = (n_samples - total.ambiguous) as f64;
    let p_hat = total.hits as f64 / n;
    Ok(MCEstimate {
        n_samples,
        hits_b: total.hits,
        not_sharp: total.not_sharp,
        ambiguous: total.ambiguous,
        p_hat,
        stderr: (p_hat * (1.0 - p_hat) / n).sqrt(),
        seed,
        d,
        w: w.clone(),
    })
}

/// Normalization constant fixing the `d = 1` estimate to the value implied
/// by the classical Levy constant, `p = ln 2`.
pub fn calibration_from_d1(p_hat_1: f64) -> f64 {
    std::f64::consts::LN_2 / p_hat_1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volume_is_weight_free() {
        for w in ["1", "1/2,1/2", "2/3,1/3", "1/2,1/3,1/6"] {
            let w = WeightVector::parse_list(w).unwrap();
            assert_eq!(unit_ball_volume(&w), Rational::from(1u32 << w.dim()));
        }
        assert!((section_total_mass(&WeightVector::equal(1)) - 12.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn zeta_values() {
        assert!((zeta(5) - 1.036_927_755_143_37).abs() < 1e-13);
        assert!((zeta(3) - ZETA_3).abs() < 1e-16);
    }

    #[test]
    fn samples_contain_last_basis_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=2 {
            for _ in 0..50 {
                let l = sample_e(d, &mut rng).unwrap();
                assert!((l.determinant() - 1.0).abs() < 1e-6);
                let rows = l.basis_rows();
                let last = &rows[d];
                assert_eq!(last[d], 1.0);
                assert!(last[..d].iter().all(|x| *x == 0.0));
            }
        }
        assert!(matches!(sample_e(3, &mut rng), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn estimate_is_reproducible() {
        let w = WeightVector::equal(1);
        let a = estimate_b_probability(&w, 5_000, 3).unwrap();
        let b = estimate_b_probability(&w, 5_000, 3).unwrap();
        assert_eq!(a.hits_b, b.hits_b);
        assert_eq!(a.not_sharp, 0);
        assert!((a.p_hat - std::f64::consts::LN_2).abs() < 5.0 * a.stderr);
    }
}
