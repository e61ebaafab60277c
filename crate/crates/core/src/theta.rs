//! The vectors `theta` being approximated.

use std::fmt;

use rand::RngCore;
use rug::integer::Order;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::parse_rational;

/// Smallest precision accepted for dyadic samples.
pub const MIN_DYADIC_BITS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    UserSupplied,
    Sampled { seed: u64, stream: u64 },
}

/// `theta in [0,1)^d`, stored exactly as `theta_i = numer_i / den`.
///
/// Dyadic vectors (`den = 2^P`) carry their precision `P`; the flow along
/// `Lambda_theta` is only meaningful for them up to times of order `P ln 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaVector {
    numer: Vec<Integer>,
    den: Integer,
    precision_bits: Option<u32>,
    provenance: Provenance,
}

impl ThetaVector {
    /// Exact rational coordinates, reduced modulo one into `[0,1)`. Such a
    /// vector is exact at every precision.
    pub fn from_rationals(coords: &[Rational]) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("theta needs at least one coordinate".into()));
        }
        let mut den = Integer::from(1);
        for c in coords {
            den.lcm_mut(c.denom());
        }
        let numer = coords
            .iter()
            .map(|c| {
                let n = Integer::from(c.numer() * &den) / c.denom();
                n.div_rem_euc(den.clone()).1
            })
            .collect();
        Ok(ThetaVector {
            numer,
            den,
            precision_bits: None,
            provenance: Provenance::UserSupplied,
        })
    }

    /// Parses a comma separated list such as `"2/7"` or `"0.3,1/5"`.
    pub fn parse_list(list: &str) -> Result<Self> {
        let coords = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(&coords)
    }

    /// Dyadic vector `numer_i / 2^bits`; numerators are reduced modulo `2^bits`.
    pub fn dyadic(numer: Vec<Integer>, bits: u32) -> Result<Self> {
        if numer.is_empty() {
            return Err(Error::InvalidArgument("theta needs at least one coordinate".into()));
        }
        if bits < MIN_DYADIC_BITS {
            return Err(Error::InvalidArgument(format!(
                "dyadic precision must be at least {MIN_DYADIC_BITS} bits, got {bits}"
            )));
        }
        let den = Integer::from(1) << bits;
        let numer = numer.into_iter().map(|n| n.div_rem_euc(den.clone()).1).collect();
        Ok(ThetaVector {
            numer,
            den,
            precision_bits: Some(bits),
            provenance: Provenance::UserSupplied,
        })
    }

    /// Truncation of real numbers (given to at least `bits` bits) to `bits`
    /// fractional bits.
    pub fn truncate_floats(coords: &[Float], bits: u32) -> Result<Self> {
        let numer = coords
            .iter()
            .map(|x| {
                let scaled = Float::with_val(x.prec().max(bits + 64), x << bits);
                scaled
                    .to_integer_round(rug::float::Round::Down)
                    .map(|(i, _)| i)
                    .ok_or_else(|| Error::InvalidArgument("non-finite coordinate".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::dyadic(numer, bits)
    }

    /// Uniform dyadic sample from `[0,1)^d` with `bits` fractional bits.
    pub fn sample_uniform<R: RngCore>(d: usize, bits: u32, rng: &mut R) -> Result<Self> {
        let limbs = bits.div_ceil(64) as usize;
        let mask_bits = bits % 64;
        let numer = (0..d)
            .map(|_| {
                let mut words: Vec<u64> = (0..limbs).map(|_| rng.next_u64()).collect();
                if mask_bits != 0 {
                    if let Some(top) = words.last_mut() {
                        *top &= (1u64 << mask_bits) - 1;
                    }
                }
                Integer::from_digits(&words, Order::Lsf)
            })
            .collect();
        Self::dyadic(numer, bits)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn dim(&self) -> usize {
        self.numer.len()
    }

    pub fn numer(&self) -> &[Integer] {
        &self.numer
    }

    pub fn den(&self) -> &Integer {
        &self.den
    }

    pub fn precision_bits(&self) -> Option<u32> {
        self.precision_bits
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn coord(&self, i: usize) -> Rational {
        Rational::from((self.numer[i].clone(), self.den.clone()))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.coord(i).to_f64()).collect()
    }

    /// Smallest `q >= 1` with `q * theta` integral.
    pub fn reduced_denominator(&self) -> Integer {
        let mut g = self.den.clone();
        for n in &self.numer {
            g.gcd_mut(n);
        }
        Integer::from(&self.den / &g)
    }

    pub fn is_zero(&self) -> bool {
        self.numer.iter().all(|n| *n == 0)
    }
}

impl fmt::Display for ThetaVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.to_f64().iter().map(|x| format!("{x:.17}")).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for ThetaVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ThetaVector", 4)?;
        let approx = self.to_f64();
        st.serialize_field("approx", &approx)?;
        match self.precision_bits {
            Some(bits) => {
                let hex: Vec<String> = self.numer.iter().map(|n| n.to_string_radix(16)).collect();
                st.serialize_field("dyadic_bits", &bits)?;
                st.serialize_field("numerators_hex", &hex)?;
            }
            None => {
                let exact: Vec<String> = (0..self.dim()).map(|i| self.coord(i).to_string()).collect();
                st.serialize_field("dyadic_bits", &Option::<u32>::None)?;
                st.serialize_field("exact", &exact)?;
            }
        }
        st.serialize_field("provenance", &self.provenance)?;
        st.end()
    }
}
