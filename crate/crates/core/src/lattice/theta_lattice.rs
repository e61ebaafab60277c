//! Exact orbit `a_t Lambda_theta` of the lattice `Lambda_theta = u(-theta) Z^(d+1)`.
//!
//! Lattice vectors are kept as exact integer data `(p, q)` together with the
//! scaled residual `res_i = p_i den - q numer_i`, so the horizontal part is
//! `p - q theta = res / den`. Reduction decisions are taken in double
//! precision on a fresh embedding and replayed exactly.

use std::sync::Arc;

use rug::Integer;

use crate::error::{Error, Result};
use crate::lattice::reduce::{self, lll};
use crate::theta::ThetaVector;
use crate::weights::WeightVector;

/// Largest flow increment between two reductions.
pub const MAX_STEP: f64 = 4.0;

/// Guard bits in the precision schedule.
pub const GUARD_BITS: u64 = 128;

/// Bits of `theta` needed to follow the orbit up to time `t`:
/// `ceil((1 + max_i w_i) t / ln 2) + 128`.
pub fn needed_bits(t: f64, w: &WeightVector) -> u64 {
    ((1.0 + w.max_value()) * t.max(0.0) / std::f64::consts::LN_2).ceil() as u64 + GUARD_BITS
}

/// An element `(p - q theta, q)` of `Lambda_theta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeVec {
    pub p: Vec<Integer>,
    pub q: Integer,
    pub res: Vec<Integer>,
}

impl LatticeVec {
    pub fn zero(d: usize) -> Self {
        LatticeVec {
            p: vec![Integer::new(); d],
            q: Integer::new(),
            res: vec![Integer::new(); d],
        }
    }

    /// The vector with integer coordinates `(p, q)`.
    pub fn from_pq(p: Vec<Integer>, q: Integer, theta: &ThetaVector) -> Self {
        let res = p
            .iter()
            .zip(theta.numer())
            .map(|(pi, a)| Integer::from(pi * theta.den()) - Integer::from(&q * a))
            .collect();
        LatticeVec { p, q, res }
    }

    fn add_mul(&mut self, other: &LatticeVec, c: i64) {
        if c == 0 {
            return;
        }
        for (x, y) in self.p.iter_mut().zip(&other.p) {
            *x += Integer::from(y * c);
        }
        self.q += Integer::from(&other.q * c);
        for (x, y) in self.res.iter_mut().zip(&other.res) {
            *x += Integer::from(y * c);
        }
    }

    pub fn neg(&self) -> Self {
        LatticeVec {
            p: self.p.iter().map(|x| Integer::from(-x)).collect(),
            q: Integer::from(-&self.q),
            res: self.res.iter().map(|x| Integer::from(-x)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.q == 0 && self.p.iter().all(|x| *x == 0)
    }

    /// Sign representative with `q > 0`, or `q = 0` and first nonzero `p_i > 0`.
    pub fn oriented(self) -> Self {
        let flip = match self.q.cmp0() {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.p.iter().find(|x| **x != 0).is_some_and(|x| *x < 0),
        };
        if flip {
            self.neg()
        } else {
            self
        }
    }

    /// `gcd(p_1, ..., p_d, q) = 1`.
    pub fn is_primitive(&self) -> bool {
        let mut g = self.q.clone().abs();
        for x in &self.p {
            g.gcd_mut(x);
        }
        g == 1
    }
}

/// `x * 2^e` without intermediate overflow.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// `(m, e)` with `v = m 2^e`, `0.5 <= |m| < 1` (zero maps to `(0, 0)`).
pub(crate) fn split(v: &Integer) -> (f64, i64) {
    if *v == 0 {
        return (0.0, 0);
    }
    let (m, e) = v.to_f64_exp();
    (m, e as i64)
}

/// `(m_num / m_den) * 2^(e_num - e_den) * exp(z)`, accurate for huge exponents.
pub(crate) fn scaled_ratio(num: (f64, i64), den: (f64, i64), z: f64) -> f64 {
    if num.0 == 0.0 {
        return 0.0;
    }
    let k = (z / std::f64::consts::LN_2).round();
    let rem = z - k * std::f64::consts::LN_2;
    ldexp(num.0 / den.0 * rem.exp(), num.1 - den.1 + k as i64)
}

/// Reduced basis of `a_t Lambda_theta` at a double-precision time `t`.
#[derive(Debug, Clone)]
pub struct ThetaLattice {
    theta: Arc<ThetaVector>,
    w: WeightVector,
    den_split: (f64, i64),
    basis: Vec<LatticeVec>,
    time: f64,
    available_bits: Option<u64>,
}

impl ThetaLattice {
    /// `Lambda_theta` at time zero, with the generating basis `u(-theta)`
    /// (columns `e_1, ..., e_d, (-theta, 1)`). Dyadic `theta` limits the reachable time
    /// to what `min(P, max_bits)` bits support; other rationals are exact.
    pub fn new(theta: Arc<ThetaVector>, w: &WeightVector, max_bits: u32) -> Result<Self> {
        if theta.dim() != w.dim() {
            return Err(Error::DimensionMismatch {
                expected: w.dim(),
                found: theta.dim(),
            });
        }
        let d = theta.dim();
        let mut basis = Vec::with_capacity(d + 1);
        for j in 0..d {
            let mut p = vec![Integer::new(); d];
            p[j] = Integer::from(1);
            basis.push(LatticeVec::from_pq(p, Integer::new(), &theta));
        }
        basis.push(LatticeVec::from_pq(vec![Integer::new(); d], Integer::from(1), &theta));
        let available_bits = theta.precision_bits().map(|p| u64::from(p.min(max_bits)));
        let den_split = split(theta.den());
        Ok(ThetaLattice {
            theta,
            w: w.clone(),
            den_split,
            basis,
            time: 0.0,
            available_bits,
        })
    }

    pub fn theta(&self) -> &Arc<ThetaVector> {
        &self.theta
    }

    pub fn weights(&self) -> &WeightVector {
        &self.w
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[LatticeVec] {
        &self.basis
    }

    /// Fails when following the orbit to `t` needs more bits of `theta`
    /// than are available.
    pub fn check_precision(&self, t: f64) -> Result<()> {
        if let Some(avail) = self.available_bits {
            let needed = needed_bits(t, &self.w);
            if needed > avail {
                return Err(Error::PrecisionExhausted {
                    needed,
                    available: avail,
                });
            }
        }
        Ok(())
    }

    /// Moves to time `t`, reducing the basis after every step of at most
    /// [`MAX_STEP`].
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        self.check_precision(t)?;
        while self.time != t {
            let delta = (t - self.time).clamp(-MAX_STEP, MAX_STEP);
            self.time = if (t - self.time).abs() <= MAX_STEP {
                t
            } else {
                self.time + delta
            };
            self.reduce()?;
        }
        Ok(())
    }

    fn reduce(&mut self) -> Result<()> {
        let mut emb = self.embedding();
        let u = lll(&mut emb)?;
        let is_identity = u
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &x)| x == i64::from(i == j)));
        if !is_identity {
            self.basis = u.iter().map(|row| self.combine(row)).collect();
        }
        Ok(())
    }

    /// `sum_k c_k b_k` over the current basis.
    pub fn combine(&self, coeffs: &[i64]) -> LatticeVec {
        let mut v = LatticeVec::zero(self.theta.dim());
        for (b, &c) in self.basis.iter().zip(coeffs) {
            v.add_mul(b, c);
        }
        v
    }

    /// Coordinates of `a_t v` at the current time, in double precision.
    pub fn embed(&self, v: &LatticeVec) -> Vec<f64> {
        self.embed_at(v, self.time)
    }

    /// Coordinates of `a_s v` for an arbitrary time `s`.
    pub fn embed_at(&self, v: &LatticeVec, s: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(v.res.len() + 1);
        for (i, r) in v.res.iter().enumerate() {
            out.push(scaled_ratio(split(r), self.den_split, self.w.value(i) * s));
        }
        out.push(scaled_ratio(split(&v.q), (1.0, 0), -s));
        out
    }

    /// `ln |x_i|` of `a_s v` for each horizontal coordinate and `ln |y|`.
    pub fn log_coords_at(&self, v: &LatticeVec, s: f64) -> Vec<f64> {
        let ln_den = crate::quasinorm::ln_abs(self.theta.den());
        let mut out: Vec<f64> = v
            .res
            .iter()
            .enumerate()
            .map(|(i, r)| crate::quasinorm::ln_abs(r) - ln_den + self.w.value(i) * s)
            .collect();
        out.push(crate::quasinorm::ln_abs(&v.q) - s);
        out
    }

    pub fn embedding(&self) -> Vec<Vec<f64>> {
        self.basis.iter().map(|b| self.embed(b)).collect()
    }

    /// Every primitive lattice vector (one per sign pair, oriented) whose
    /// current coordinates satisfy `|coord_j| <= bounds[j]`.
    pub fn enumerate_box(&self, bounds: &[f64], budget: u64) -> Result<Vec<(LatticeVec, Vec<f64>)>> {
        let emb = self.embedding();
        let pts = reduce::enumerate_primitive_box(&emb, bounds, budget)?;
        Ok(pts
            .into_iter()
            .map(|pt| {
                let v = self.combine(&pt.coeffs);
                let flip = v.clone().oriented() != v;
                if flip {
                    (v.neg(), pt.coords.iter().map(|x| -x).collect())
                } else {
                    (v, pt.coords)
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(theta: &str, w: &str) -> ThetaLattice {
        let t = Arc::new(ThetaVector::parse_list(theta).unwrap());
        ThetaLattice::new(t, &WeightVector::parse_list(w).unwrap(), 8192).unwrap()
    }

    #[test]
    fn initial_basis_generates_lambda_theta() {
        let lat = lattice("1/2", "1");
        let v = lat.combine(&[0, 1]);
        let emb = lat.embed(&LatticeVec::from_pq(
            vec![Integer::new()],
            Integer::from(1),
            lat.theta(),
        ));
        assert_eq!(emb, vec![-0.5, 1.0]);
        assert!(!v.is_zero());
    }

    #[test]
    fn flow_scales_coordinates() {
        let mut lat = lattice("1/3", "1");
        let v = LatticeVec::from_pq(vec![Integer::from(1)], Integer::from(3), lat.theta());
        assert!(v.res[0] == 0);
        lat.advance_to(3f64.ln()).unwrap();
        let e = lat.embed(&v);
        assert!((e[1] - 1.0).abs() < 1e-15);
        let u = LatticeVec::from_pq(vec![Integer::new()], Integer::from(1), lat.theta());
        let e = lat.embed(&u);
        assert!((e[0] + 1.0).abs() < 1e-15 && (e[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn box_enumeration_in_long_orbits() {
        let mut lat = lattice("2/7,3/11", "2/3,1/3");
        lat.advance_to(2.5).unwrap();
        let pts = lat.enumerate_box(&[1.0, 1.0, 1.0], 100_000).unwrap();
        for (v, c) in &pts {
            let e = lat.embed(v);
            for (a, b) in e.iter().zip(c) {
                assert!((a - b).abs() < 1e-9);
                assert!(a.abs() <= 1.0 + 1e-9);
            }
        }
        assert!(!pts.is_empty());
    }

    #[test]
    fn dyadic_precision_limit() {
        let t = Arc::new(ThetaVector::dyadic(vec![Integer::from(12345)], 200).unwrap());
        let mut lat = ThetaLattice::new(t, &WeightVector::equal(1), 8192).unwrap();
        // (1 + 1) t / ln 2 + 128 <= 200  <=>  t <= 24.95
        assert!(lat.advance_to(24.0).is_ok());
        assert!(matches!(
            lat.advance_to(26.0),
            Err(Error::PrecisionExhausted { available: 200, .. })
        ));
    }
}
