use rug::Integer;

use crate::interval::DyadicInterval;
use crate::quasinorm::residual_norm_interval;
use crate::theta::ThetaVector;
use crate::weights::WeightVector;

use super::RECORD_BITS;

/// Nearest integer to `q numer_i / den`, halves rounded down, with the
/// residual `p den - q numer_i`.
pub(crate) fn nearest_coord(q: &Integer, a: &Integer, den: &Integer) -> (Integer, Integer) {
    let qa = Integer::from(q * a);
    let num = Integer::from(&qa * 2u32) - den;
    let (p, _) = num.div_rem_ceil(Integer::from(den * 2u32));
    let res = Integer::from(&p * den) - qa;
    (p, res)
}

pub(crate) fn nearest_with_residual(theta: &ThetaVector, q: &Integer) -> (Vec<Integer>, Vec<Integer>) {
    theta.numer().iter().map(|a| nearest_coord(q, a, theta.den())).unzip()
}

/// The minimizing `p` of `||q theta - p||_w` (coordinatewise nearest
/// integers, halves rounded down) and the minimum.
pub fn nearest_p(theta: &ThetaVector, q: &Integer, w: &WeightVector) -> (Vec<Integer>, DyadicInterval) {
    let (p, res) = nearest_with_residual(theta, q);
    let r = residual_norm_interval(&res, theta.den(), w, RECORD_BITS);
    (p, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    #[test]
    fn examples() {
        let theta = ThetaVector::parse_list("3/10,7/10").unwrap();
        let (p, r) = nearest_p(&theta, &Integer::from(1), &WeightVector::equal(2));
        assert_eq!(p, vec![Integer::from(0), Integer::from(1)]);
        assert!(r.contains_rational(&Rational::from((9, 100))));

        let theta = ThetaVector::parse_list("1/2").unwrap();
        let (p, r) = nearest_p(&theta, &Integer::from(1), &WeightVector::equal(1));
        assert_eq!(p, vec![Integer::from(0)]);
        assert!(r.contains_rational(&Rational::from((1, 2))));

        let theta = ThetaVector::parse_list("1/5,2/5").unwrap();
        let (p, r) = nearest_p(&theta, &Integer::from(5), &WeightVector::equal(2));
        assert_eq!(p, vec![Integer::from(1), Integer::from(2)]);
        assert!(r.is_exact() && r.to_f64() == 0.0);
    }

    #[test]
    fn rounding_near_halves() {
        let den = Integer::from(10);
        for (a, want) in [(4, 0), (5, 0), (6, 1), (15, 1), (16, 2)] {
            let (p, res) = nearest_coord(&Integer::from(1), &Integer::from(a), &den);
            assert_eq!(p, want, "a = {a}");
            assert_eq!(res, Integer::from(want * 10 - a));
        }
    }
}
