//! Exact rational weight vectors.

use std::fmt;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};

/// A weight vector `w = (w_1, ..., w_d)` with strictly positive rational
/// entries summing to exactly one.
///
/// Entries are kept over a common denominator: `w_i = numer[i] / denom`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightVector {
    numer: Vec<u64>,
    denom: u64,
    /// lcm of the numerators; `||x||_w^(lcm/denom) = max_i |x_i|^(lcm/numer_i)`.
    lcm: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl WeightVector {
    /// Builds a weight vector from `(numerator, denominator)` pairs.
    pub fn new(entries: &[(u64, u64)]) -> Result<Self> {
        let rationals = entries
            .iter()
            .map(|&(n, d)| {
                if d == 0 {
                    return Err(Error::InvalidWeights(format!("zero denominator in {n}/{d}")));
                }
                Ok(Rational::from((n, d)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(&rationals)
    }

    pub fn from_rationals(entries: &[Rational]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidWeights("need at least one weight".into()));
        }
        let mut sum = Rational::new();
        for w in entries {
            if *w <= 0 {
                return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
            }
            sum += w;
        }
        if sum != 1 {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        let mut denom = Integer::from(1);
        for w in entries {
            denom.lcm_mut(w.denom());
        }
        let denom_u64 = denom
            .to_u64()
            .ok_or_else(|| Error::InvalidWeights("denominator too large".into()))?;
        let numer: Vec<u64> = entries
            .iter()
            .map(|w| {
                let n = Integer::from(w.numer() * &denom) / w.denom();
                n.to_u64().expect("numerator bounded by denominator")
            })
            .collect();
        let lcm = numer.iter().fold(1u64, |acc, &n| acc / gcd(acc, n) * n);
        Ok(WeightVector {
            numer,
            denom: denom_u64,
            lcm,
        })
    }

    /// Parses entries such as `"2/3"`, `"1"` or `"0.25"`.
    pub fn parse<S: AsRef<str>>(entries: &[S]) -> Result<Self> {
        let rationals = entries
            .iter()
            .map(|s| parse_rational(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(&rationals)
    }

    /// Parses a comma separated list, e.g. `"2/3,1/3"`.
    pub fn parse_list(list: &str) -> Result<Self> {
        let parts: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        Self::parse(&parts)
    }

    /// Equal weights `(1/d, ..., 1/d)`.
    pub fn equal(d: usize) -> Self {
        assert!(d >= 1);
        WeightVector {
            numer: vec![1; d],
            denom: d as u64,
            lcm: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.numer.len()
    }

    pub fn numer(&self, i: usize) -> u64 {
        self.numer[i]
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    /// lcm of the numerators over the common denominator.
    pub fn numer_lcm(&self) -> u64 {
        self.lcm
    }

    /// Integer exponent `lcm / numer_i` of coordinate `i` in the power norm.
    pub fn power(&self, i: usize) -> u32 {
        (self.lcm / self.numer[i]) as u32
    }

    pub fn value(&self, i: usize) -> f64 {
        self.numer[i] as f64 / self.denom as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.value(i)).collect()
    }

    pub fn rational(&self, i: usize) -> Rational {
        Rational::from((self.numer[i], self.denom))
    }

    pub fn max_value(&self) -> f64 {
        self.values().into_iter().fold(f64::MIN, f64::max)
    }

    /// The smallest weight (called `w_d` when the weights are sorted).
    pub fn min_value(&self) -> f64 {
        self.values().into_iter().fold(f64::MAX, f64::min)
    }

    pub fn min_index(&self) -> usize {
        (0..self.dim()).min_by_key(|&i| self.numer[i]).unwrap()
    }

    pub fn max_index(&self) -> usize {
        (0..self.dim()).max_by_key(|&i| self.numer[i]).unwrap()
    }

    pub fn is_equal_weights(&self) -> bool {
        self.numer.iter().all(|&n| n == self.numer[0])
    }

    /// `true` iff `q > 2^(1/w_min)`, decided exactly as `q^numer > 2^denom`.
    pub fn exceeds_two_pow_inverse_min(&self, q: &Integer) -> bool {
        let n = self.numer[self.min_index()] as u32;
        let lhs = q.clone().pow(n);
        let rhs = Integer::from(1) << (self.denom as u32);
        lhs > rhs
    }

    /// `sum_i w_i - 1`, which is zero by construction; kept as an explicit
    /// check that `a_t = diag(e^{w_i t}, e^{-t})` has determinant one.
    pub fn exponent_sum_minus_one(&self) -> Rational {
        let s: u64 = self.numer.iter().sum();
        Rational::from((s, self.denom)) - 1u32
    }

    pub fn to_strings(&self) -> Vec<String> {
        (0..self.dim()).map(|i| self.rational(i).to_string()).collect()
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(","))
    }
}

impl Serialize for WeightVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(s)
    }
}

/// Parses `"a/b"`, an integer, or a finite decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidArgument(format!("cannot parse rational from {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: Integer = n.trim().parse().map_err(|_| bad())?;
        let d: Integer = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::from((n, d)));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let n: Integer = if digits.is_empty() {
        Integer::new()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let d = Integer::from(10).pow(frac_part.len() as u32);
    let r = Rational::from((n, d));
    Ok(if neg { -r } else { r })
}
