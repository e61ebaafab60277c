use std::sync::Arc;

use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::lattice::reduce::DEFAULT_NODE_BUDGET;
use crate::lattice::ThetaLattice;
use crate::quasinorm::{compare_scaled_residuals, ln_abs};
use crate::theta::ThetaVector;
use crate::weights::WeightVector;

use super::nearest::nearest_with_residual;
use super::{check_dims, ApproxKind, BestApproxRecord, BestApproxSequence};

/// Horizontal half-width of the search box.
const BOX_X: f64 = 1.1;
/// Initial vertical half-width of the search box.
const BOX_Y: f64 = 1.1;
/// The vertical bound is doubled at most this many times.
const MAX_WIDENINGS: u32 = 40;

/// `floor(e^t)` for a possibly huge `t`.
pub(crate) fn floor_exp(t: f64) -> Integer {
    let bits = 64 + (t.max(0.0) * std::f64::consts::LOG2_E) as u32;
    let e = Float::with_val(bits, t).exp();
    e.to_integer_round(rug::float::Round::Down)
        .map(|(i, _)| i)
        .unwrap_or_default()
}

/// Best approximations found along the orbit `a_t Lambda_theta`.
///
/// From the record `(p_n, q_n)` with `r_n`, the flow is taken to
/// `t = -ln r_n`. Every `q` whose best residual beats `r_n` then lies in
/// the box `|x_i| <= 1.1`, `|y| <= Y`, and the running minimum over the
/// enumerated denominators reproduces the records up to `Y e^t`. `Y` starts
/// at `1.1` (the next record satisfies `q_(n+1) r_n <= 1`) and doubles
/// when the box comes up empty.
///
/// Stops after `n_max` records, at an exact hit, or once every record
/// with `ln q <= t_budget` is known.
pub fn enumerate_best_approx_fast(
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
    if t_budget.is_nan() || t_budget < 0.0 {
        return Err(Error::InvalidArgument(format!("invalid time budget {t_budget}")));
    }
    let d = theta.dim();
    let den = theta.den().clone();
    let one = Integer::from(1);
    let (p, res) = nearest_with_residual(&theta, &one);
    let mut records = vec![BestApproxRecord::new(p, one.clone(), res, &theta, w)];
    let mut lat = ThetaLattice::new(theta.clone(), w, max_bits)?;
    let mut terminal = false;

    let horizon = loop {
        let last = records.last().expect("at least one record");
        if last.is_exact_hit() {
            terminal = true;
            break last.q.clone();
        }
        if records.len() >= n_max {
            break last.q.clone();
        }
        let t = -last.log_r;
        let budget_limited = t >= t_budget;
        let s = t.min(t_budget);
        lat.advance_to(s)?;

        let mut y_bound = BOX_Y;
        let mut found = Vec::new();
        for _ in 0..=MAX_WIDENINGS {
            let mut bounds = vec![BOX_X; d];
            bounds.push(y_bound);
            let ln_cap = s + y_bound.ln() - 1e-9;
            let mut qs: Vec<Integer> = lat
                .enumerate_box(&bounds, DEFAULT_NODE_BUDGET)?
                .into_iter()
                .map(|(v, _)| v.q)
                .filter(|q| *q > last.q && ln_abs(q) <= ln_cap)
                .collect();
            qs.sort();
            qs.dedup();
            let mut current = last.res.clone();
            for q in qs {
                let (p, res) = nearest_with_residual(&theta, &q);
                if compare_scaled_residuals(&one, &res, &one, &current, &den, w).is_lt() {
                    current = res.clone();
                    let hit = res.iter().all(|x| *x == 0);
                    found.push((p, q, res));
                    if hit {
                        break;
                    }
                }
            }
            if !found.is_empty() || budget_limited {
                break;
            }
            y_bound *= 2.0;
        }
        if found.is_empty() {
            if budget_limited {
                break floor_exp(t_budget);
            }
            return Err(Error::EnumerationBudgetExceeded {
                budget: DEFAULT_NODE_BUDGET,
            });
        }
        let mut over_budget = false;
        for (p, q, res) in found {
            if ln_abs(&q) > t_budget {
                over_budget = true;
                break;
            }
            records.push(BestApproxRecord::new(p, q, res, &theta, w));
            if records.len() >= n_max {
                break;
            }
        }
        if over_budget {
            break floor_exp(t_budget);
        }
    };
    if let Some(last) = records.last() {
        terminal |= last.is_exact_hit();
    }
    Ok(BestApproxSequence {
        theta,
        w: w.clone(),
        kind: ApproxKind::Weighted,
        records,
        terminal,
        horizon_q: horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::best_approx::enumerate_best_approx_bruteforce;

    #[test]
    fn golden_ratio_gives_fibonacci() {
        let g = (Float::with_val(600, 5).sqrt() - 1u32) / 2u32;
        let theta = Arc::new(ThetaVector::truncate_floats(&[g], 256).unwrap());
        let s = enumerate_best_approx_fast(theta, &WeightVector::equal(1), 1000, 15.0, 8192).unwrap();
        let qs: Vec<u64> = s.records.iter().map(|r| r.q.to_u64().unwrap()).collect();
        let mut fib = vec![1u64, 2];
        while *fib.last().unwrap() as f64 <= 15f64.exp() {
            let n = fib[fib.len() - 1] + fib[fib.len() - 2];
            fib.push(n);
        }
        fib.pop();
        assert_eq!(qs, fib);
        assert!(qs.len() >= 20);
        assert_eq!(s.horizon_q, floor_exp(15.0));
    }

    #[test]
    fn rational_theta_terminates() {
        let theta = Arc::new(ThetaVector::parse_list("2/7").unwrap());
        let s = enumerate_best_approx_fast(theta, &WeightVector::equal(1), 100, 50.0, 8192).unwrap();
        assert!(s.terminal);
        assert_eq!(s.q_values(), vec![Integer::from(1), Integer::from(3), Integer::from(7)]);
    }

    #[test]
    fn agrees_with_brute_force() {
        let theta = Arc::new(ThetaVector::parse_list("0.1234567,0.7654321").unwrap());
        let w = WeightVector::parse_list("2/3,1/3").unwrap();
        let brute = enumerate_best_approx_bruteforce(theta.clone(), &w, 100_000).unwrap();
        let fast = enumerate_best_approx_fast(theta, &w, 10_000, 100_000f64.ln(), 8192).unwrap();
        assert_eq!(brute.q_values(), fast.q_values());
        for (a, b) in brute.records.iter().zip(&fast.records) {
            assert_eq!(a.p, b.p);
        }
    }

    #[test]
    fn floor_exp_values() {
        assert_eq!(floor_exp(0.0), 1);
        assert_eq!(floor_exp(1.0), 2);
        assert_eq!(floor_exp(2.0), 7);
        assert_eq!(floor_exp(1000.0).significant_bits(), 1443);
    }
}
