use std::collections::BTreeMap;
use std::sync::Arc;

use rug::Integer;

use crate::error::{Error, Result};
use crate::lattice::reduce::DEFAULT_NODE_BUDGET;
use crate::lattice::{LatticeVec, ThetaLattice};
use crate::theta::ThetaVector;
use crate::weights::WeightVector;

use super::fast::floor_exp;
use super::{check_dims, ApproxKind, BestApproxRecord, BestApproxSequence};

const BOX: f64 = 1.05;
const TIE_TOL: f64 = 1e-12;

/// `ln ||a_(t0+u) v||_inf = max_j (c_j + m_j u)` on one window.
struct Lines {
    c: Vec<f64>,
    m: Vec<f64>,
}

impl Lines {
    fn eval(&self, u: f64) -> f64 {
        self.c
            .iter()
            .zip(&self.m)
            .map(|(c, m)| c + m * u)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Vectors realizing `lambda_1(a_t Lambda_theta)` in the sup norm for some
/// `t` in `[t0, t0 + 1]`.
fn window_minimizers(lat: &ThetaLattice, t0: f64) -> Result<Vec<LatticeVec>> {
    let w = lat.weights();
    let d = w.dim();
    let mut bounds = vec![BOX; d];
    bounds.push(BOX * std::f64::consts::E);
    let cands: Vec<LatticeVec> = lat
        .enumerate_box(&bounds, DEFAULT_NODE_BUDGET)?
        .into_iter()
        .map(|(v, _)| v)
        .collect();
    let mut slopes = w.values();
    slopes.push(-1.0);
    let lines: Vec<Lines> = cands
        .iter()
        .map(|v| {
            let logs = lat.log_coords_at(v, t0);
            let (c, m) = logs
                .into_iter()
                .zip(&slopes)
                .filter(|(c, _)| c.is_finite())
                .map(|(c, m)| (c, *m))
                .unzip();
            Lines { c, m }
        })
        .collect();
    let all: Vec<(f64, f64)> = lines
        .iter()
        .flat_map(|l| l.c.iter().copied().zip(l.m.iter().copied()))
        .collect();
    let mut cuts = vec![0.0, 1.0];
    for (i, (c1, m1)) in all.iter().enumerate() {
        for (c2, m2) in &all[i + 1..] {
            if m1 != m2 {
                let u = (c2 - c1) / (m1 - m2);
                if u > 0.0 && u < 1.0 {
                    cuts.push(u);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut winners = vec![false; cands.len()];
    for pair in cuts.windows(2) {
        if pair[1] - pair[0] < 1e-15 {
            continue;
        }
        let u = 0.5 * (pair[0] + pair[1]);
        let vals: Vec<f64> = lines.iter().map(|l| l.eval(u)).collect();
        let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
        for (k, v) in vals.iter().enumerate() {
            if *v <= best + TIE_TOL * (1.0 + best.abs()) {
                winners[k] = true;
            }
        }
    }
    Ok(cands
        .into_iter()
        .zip(winners)
        .filter(|(v, win)| *win && v.q > 0)
        .map(|(v, _)| v)
        .collect())
}

/// Regular best approximations: `(p, q)` such that `a_t (p - q theta, q)`
/// realizes `lambda_1(a_t Lambda_theta)` in the sup norm for some `t > 0`.
///
/// The orbit is scanned in windows of length one; on each window the
/// sup norm of every candidate is piecewise linear in `t` on a log scale
/// and the lower envelope is computed between consecutive breakpoints.
/// Stops after `n_max` records, at an exact hit that stays minimal, or at
/// `t_budget`.
pub fn enumerate_regular_best_approx(
    theta: Arc<ThetaVector>,
    w: &WeightVector,
    n_max: usize,
    t_budget: f64,
    max_bits: u32,
) -> Result<BestApproxSequence> {
    check_dims(&theta, w)?;
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut lat = ThetaLattice::new(theta.clone(), w, max_bits)?;
    let mut found: BTreeMap<Integer, LatticeVec> = BTreeMap::new();
    let mut t0 = 0.0;
    let mut terminal = false;
    while t0 < t_budget {
        lat.check_precision(t0 + 1.0)?;
        lat.advance_to(t0)?;
        let winners = window_minimizers(&lat, t0)?;
        let only_hit = !winners.is_empty() && winners.iter().all(|v| v.res.iter().all(|x| *x == 0));
        for v in winners {
            found.entry(v.q.clone()).or_insert(v);
        }
        if only_hit {
            terminal = true;
            break;
        }
        if found.len() >= n_max {
            break;
        }
        t0 += 1.0;
    }
    let mut records: Vec<BestApproxRecord> = found
        .into_values()
        .map(|v| BestApproxRecord::new(v.p, v.q, v.res, &theta, w))
        .collect();
    let full = records.len() >= n_max;
    records.truncate(n_max);
    if let Some(pos) = records.iter().position(BestApproxRecord::is_exact_hit) {
        records.truncate(pos + 1);
        terminal = true;
    }
    let horizon_q = if terminal || full {
        records.last().map(|r| r.q.clone()).unwrap_or_default()
    } else {
        floor_exp(t_budget)
    };
    Ok(BestApproxSequence {
        theta,
        w: w.clone(),
        kind: ApproxKind::Regular,
        records,
        terminal,
        horizon_q,
    })
}
