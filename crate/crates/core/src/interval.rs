//! Closed intervals with dyadic (MPFR) endpoints and directed rounding.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Round;
use rug::ops::NegAssign;
use rug::{Float, Rational};
use serde::Serialize;

/// Slack allowed between the working precision and the interval radius:
/// a value produced at `p` bits has radius at most `2^(guard - p)` relative
/// to its magnitude.
pub const GUARD_BITS: u32 = 16;

/// A closed interval `[lo, hi]` whose endpoints are exact binary floats.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicInterval {
    lo: Float,
    hi: Float,
    bits: u32,
}

impl DyadicInterval {
    pub fn zero(bits: u32) -> Self {
        DyadicInterval {
            lo: Float::new(bits),
            hi: Float::new(bits),
            bits,
        }
    }

    pub fn one(bits: u32) -> Self {
        Self::from_f64(1.0, bits)
    }

    /// The degenerate interval `[x, x]`; `x` is exactly representable.
    pub fn from_f64(x: f64, bits: u32) -> Self {
        let bits = bits.max(53);
        DyadicInterval {
            lo: Float::with_val(bits, x),
            hi: Float::with_val(bits, x),
            bits,
        }
    }

    /// `[lo, hi]` from two doubles; panics if `lo > hi` or either is NaN.
    pub fn from_f64_bounds(lo: f64, hi: f64, bits: u32) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        let bits = bits.max(53);
        DyadicInterval {
            lo: Float::with_val(bits, lo),
            hi: Float::with_val(bits, hi),
            bits,
        }
    }

    /// Smallest interval at `bits` precision enclosing the rational `r`.
    pub fn from_rational(r: &Rational, bits: u32) -> Self {
        let (lo, _) = Float::with_val_round(bits, r, Round::Down);
        let (hi, _) = Float::with_val_round(bits, r, Round::Up);
        DyadicInterval { lo, hi, bits }
    }

    pub fn from_bounds(lo: Float, hi: Float, bits: u32) -> Self {
        assert!(lo <= hi, "invalid interval bounds");
        DyadicInterval { lo, hi, bits }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn precision_bits(&self) -> u32 {
        self.bits
    }

    /// Exact midpoint.
    pub fn center(&self) -> Rational {
        let lo = self.lo.to_rational().unwrap_or_default();
        let hi = self.hi.to_rational().unwrap_or_default();
        (lo + hi) / 2u32
    }

    pub fn radius(&self) -> Rational {
        let lo = self.lo.to_rational().unwrap_or_default();
        let hi = self.hi.to_rational().unwrap_or_default();
        (hi - lo) / 2u32
    }

    pub fn width_f64(&self) -> f64 {
        let (w, _) = Float::with_val_round(53, &self.hi - &self.lo, Round::Up);
        w.to_f64_round(Round::Up)
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn to_f64(&self) -> f64 {
        let mid = Float::with_val(self.bits + 1, &self.lo + &self.hi) / 2u32;
        mid.to_f64()
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lo <= *r && self.hi >= *r
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && self.hi >= x
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// `Some(ordering)` when the intervals are disjoint, or when both are
    /// the same single point.
    pub fn certified_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if other.hi < self.lo {
            Some(Ordering::Greater)
        } else if self.is_exact() && other.is_exact() && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lo >= 0
    }

    pub fn add(&self, other: &Self) -> Self {
        let bits = self.bits.max(other.bits);
        let (lo, _) = Float::with_val_round(bits, &self.lo + &other.lo, Round::Down);
        let (hi, _) = Float::with_val_round(bits, &self.hi + &other.hi, Round::Up);
        DyadicInterval { lo, hi, bits }
    }

    pub fn neg(&self) -> Self {
        let mut lo = self.hi.clone();
        let mut hi = self.lo.clone();
        lo.neg_assign();
        hi.neg_assign();
        DyadicInterval {
            lo,
            hi,
            bits: self.bits,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let bits = self.bits.max(other.bits);
        let ends = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in ends {
            let (down, _) = Float::with_val_round(bits, a * b, Round::Down);
            let (up, _) = Float::with_val_round(bits, a * b, Round::Up);
            if lo.as_ref().is_none_or(|l| down < *l) {
                lo = Some(down);
            }
            if hi.as_ref().is_none_or(|h| up > *h) {
                hi = Some(up);
            }
        }
        DyadicInterval {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
            bits,
        }
    }

    /// Absolute value of every point of the interval.
    pub fn abs(&self) -> Self {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            self.neg()
        } else {
            let nlo = Float::with_val(self.bits, -&self.lo);
            let hi = if nlo > self.hi { nlo } else { self.hi.clone() };
            DyadicInterval {
                lo: Float::new(self.bits),
                hi,
                bits: self.bits,
            }
        }
    }

    pub fn exp(&self) -> Self {
        let (lo, _) = Float::with_val_round(self.bits, self.lo.exp_ref(), Round::Down);
        let (hi, _) = Float::with_val_round(self.bits, self.hi.exp_ref(), Round::Up);
        DyadicInterval {
            lo,
            hi,
            bits: self.bits,
        }
    }

    /// Natural logarithm; `None` unless the interval is strictly positive.
    pub fn ln(&self) -> Option<Self> {
        if self.lo <= 0 {
            return None;
        }
        let (lo, _) = Float::with_val_round(self.bits, self.lo.ln_ref(), Round::Down);
        let (hi, _) = Float::with_val_round(self.bits, self.hi.ln_ref(), Round::Up);
        Some(DyadicInterval {
            lo,
            hi,
            bits: self.bits,
        })
    }

    /// Pointwise maximum of two intervals.
    pub fn max(&self, other: &Self) -> Self {
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi >= other.hi { &self.hi } else { &other.hi };
        DyadicInterval {
            lo: lo.clone(),
            hi: hi.clone(),
            bits: self.bits.max(other.bits),
        }
    }

    /// Whether the radius respects the guard invariant for this precision.
    pub fn within_guard(&self) -> bool {
        if self.is_exact() {
            return true;
        }
        let radius = self.radius();
        let scale = self.center().abs().max(Rational::from(1));
        let bound = scale >> (self.bits as i32 - GUARD_BITS as i32);
        radius <= bound
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.lo.to_f64())
        } else {
            write!(
                f,
                "[{}, {}]",
                self.lo.to_f64_round(Round::Down),
                self.hi.to_f64_round(Round::Up)
            )
        }
    }
}

impl Serialize for DyadicInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DyadicInterval", 3)?;
        st.serialize_field("value", &self.to_f64())?;
        st.serialize_field("width", &self.width_f64())?;
        st.serialize_field("bits", &self.bits)?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_enclosure() {
        let third = Rational::from((1, 3));
        let iv = DyadicInterval::from_rational(&third, 64);
        assert!(iv.contains_rational(&third));
        assert!(!iv.is_exact());
        assert!(iv.within_guard());
        let half = DyadicInterval::from_rational(&Rational::from((1, 2)), 64);
        assert!(half.is_exact());
    }

    #[test]
    fn exp_ln_roundtrip_encloses() {
        let x = DyadicInterval::from_rational(&Rational::from((7, 5)), 128);
        let y = x.ln().unwrap().exp();
        assert!(y.contains_rational(&Rational::from((7, 5))));
        assert!(y.within_guard());
    }

    #[test]
    fn mul_handles_signs() {
        let a = DyadicInterval::from_f64_bounds(-2.0, 3.0, 64);
        let b = DyadicInterval::from_f64_bounds(-1.0, 4.0, 64);
        let p = a.mul(&b);
        assert_eq!(p.lo().to_f64(), -8.0);
        assert_eq!(p.hi().to_f64(), 12.0);
        assert_eq!(a.abs().lo().to_f64(), 0.0);
        assert_eq!(a.abs().hi().to_f64(), 3.0);
    }

    #[test]
    fn certified_ordering() {
        let a = DyadicInterval::from_f64_bounds(0.0, 1.0, 64);
        let b = DyadicInterval::from_f64_bounds(1.5, 2.0, 64);
        assert_eq!(a.certified_cmp(&b), Some(Ordering::Less));
        assert_eq!(b.certified_cmp(&a), Some(Ordering::Greater));
        let c = DyadicInterval::from_f64_bounds(0.5, 1.6, 64);
        assert_eq!(a.certified_cmp(&c), None);
        let one = DyadicInterval::one(64);
        assert_eq!(one.certified_cmp(&DyadicInterval::one(128)), Some(Ordering::Equal));
    }
}
