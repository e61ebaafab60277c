use std::sync::Arc;

use rug::{Assign, Integer};

use crate::error::{Error, Result};
use crate::quasinorm::{compare_scaled_residuals, ln_abs};
use crate::theta::ThetaVector;
use crate::weights::WeightVector;

use super::{check_dims, ApproxKind, BestApproxRecord, BestApproxSequence};

/// Literal scan over `q = 1, ..., q_max`: `q` is admitted when
/// `min_p ||q theta - p||_w` is strictly below every earlier minimum.
pub fn enumerate_best_approx_bruteforce(
    theta: Arc<ThetaVector>,
    w: &WeightVector,
    q_max: u64,
) -> Result<BestApproxSequence> {
    check_dims(&theta, w)?;
    if q_max == 0 {
        return Err(Error::InvalidArgument("q_max must be at least 1".into()));
    }
    let d = theta.dim();
    let den = theta.den();
    let ln_den = ln_abs(den);
    let inv_w: Vec<f64> = (0..d).map(|i| 1.0 / w.value(i)).collect();
    let mut m: Vec<Integer> = vec![Integer::new(); d];
    let mut res: Vec<Integer> = vec![Integer::new(); d];
    let mut best_res: Vec<Integer> = Vec::new();
    let mut best_ln = f64::INFINITY;
    let mut records: Vec<BestApproxRecord> = Vec::new();
    let mut terminal = false;
    let mut horizon = q_max;
    let one = Integer::from(1);

    for q in 1..=q_max {
        let mut ln_r = f64::NEG_INFINITY;
        for i in 0..d {
            m[i] += &theta.numer()[i];
            if m[i] >= *den {
                m[i] -= den;
            }
            if Integer::from(&m[i] * 2u32) <= *den {
                res[i].assign(-&m[i]);
            } else {
                res[i].assign(den - &m[i]);
            }
            if res[i] != 0 {
                ln_r = ln_r.max((ln_abs(&res[i]) - ln_den) * inv_w[i]);
            }
        }
        let admit = if records.is_empty() {
            true
        } else {
            let tol = 1e-11 * (1.0 + ln_r.abs().min(1e300) + best_ln.abs());
            if ln_r < best_ln - tol {
                true
            } else if ln_r > best_ln + tol {
                false
            } else {
                compare_scaled_residuals(&one, &res, &one, &best_res, den, w).is_lt()
            }
        };
        if !admit {
            continue;
        }
        let q_int = Integer::from(q);
        let p: Vec<Integer> = (0..d)
            .map(|i| Integer::from(&q_int * &theta.numer()[i] + &res[i]) / den)
            .collect();
        records.push(BestApproxRecord::new(p, q_int, res.clone(), &theta, w));
        best_res = res.clone();
        best_ln = ln_r;
        if ln_r == f64::NEG_INFINITY {
            terminal = true;
            horizon = q;
            break;
        }
    }
    Ok(BestApproxSequence {
        theta,
        w: w.clone(),
        kind: ApproxKind::Weighted,
        records,
        terminal,
        horizon_q: Integer::from(horizon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    fn run(theta: &str, w: &str, q_max: u64) -> BestApproxSequence {
        let t = Arc::new(ThetaVector::parse_list(theta).unwrap());
        enumerate_best_approx_bruteforce(t, &WeightVector::parse_list(w).unwrap(), q_max).unwrap()
    }

    #[test]
    fn two_sevenths() {
        let s = run("2/7", "1", 10);
        let got: Vec<(i64, i64)> = s
            .records
            .iter()
            .map(|r| (r.p[0].to_i64().unwrap(), r.q.to_i64().unwrap()))
            .collect();
        assert_eq!(got, vec![(0, 1), (1, 3), (2, 7)]);
        assert!(s.records[0].r.contains_rational(&Rational::from((2, 7))));
        assert!(s.records[1].r.contains_rational(&Rational::from((1, 7))));
        assert!(s.terminal);
        assert_eq!(s.horizon_q, 7);
    }

    #[test]
    fn ties_are_rejected() {
        let s = run("1/5,2/5", "1/2,1/2", 5);
        let qs: Vec<u32> = s.records.iter().map(|r| r.q.to_u32().unwrap()).collect();
        assert_eq!(qs, vec![1, 5]);
        assert!(s.records[0].r.contains_rational(&Rational::from((4, 25))));
        assert_eq!(s.records[1].p, vec![Integer::from(1), Integer::from(2)]);
        assert!(s.terminal);
    }

    #[test]
    fn minkowski_and_primitivity() {
        let s = run("0.1234567,0.7654321", "2/3,1/3", 20_000);
        s.check_minkowski().unwrap();
        for r in &s.records {
            let mut g = r.q.clone();
            for p in &r.p {
                g.gcd_mut(p);
            }
            assert_eq!(g, 1);
        }
    }
}
