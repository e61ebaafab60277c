//! The weighted quasi-norm `||x||_w = max_i |x_i|^(1/w_i)`, its certified
//! comparison, and the weighted scaling `x_i -> e^(w_i s) x_i`.

use std::cmp::Ordering;

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::interval::DyadicInterval;
use crate::weights::{parse_rational, WeightVector};
use crate::PrecisionConfig;

/// One coordinate of a [`WVector`].
#[derive(Debug, Clone, PartialEq)]
pub enum WCoord {
    /// The real number `value * exp(log_scale)`, known exactly.
    Exact { value: Rational, log_scale: Rational },
    /// A real number known only through an enclosure.
    Interval(DyadicInterval),
}

impl WCoord {
    pub fn rational(value: Rational) -> Self {
        WCoord::Exact {
            value,
            log_scale: Rational::new(),
        }
    }

    /// Enclosure of the coordinate at `bits` of precision.
    pub fn interval(&self, bits: u32) -> DyadicInterval {
        match self {
            WCoord::Exact { value, log_scale } => {
                let v = DyadicInterval::from_rational(value, bits);
                if *log_scale == 0 {
                    v
                } else {
                    v.mul(&DyadicInterval::from_rational(log_scale, bits).exp())
                }
            }
            WCoord::Interval(iv) => iv.clone(),
        }
    }

    /// Enclosure of `|x|^(1/w)` where `inv_w = 1/w`.
    fn power_interval(&self, inv_w: &Rational, bits: u32) -> DyadicInterval {
        match self {
            WCoord::Exact { value, log_scale } => {
                if *value == 0 {
                    return DyadicInterval::zero(bits);
                }
                let abs = Rational::from(value.abs_ref());
                if abs == 1 && *log_scale == 0 {
                    return DyadicInterval::one(bits);
                }
                let ln = DyadicInterval::from_rational(&abs, bits + 8)
                    .ln()
                    .expect("nonzero rational has a logarithm");
                let ln = ln.add(&DyadicInterval::from_rational(log_scale, bits + 8));
                ln.mul(&DyadicInterval::from_rational(inv_w, bits + 8)).exp()
            }
            WCoord::Interval(iv) => {
                let abs = iv.abs();
                let inv = DyadicInterval::from_rational(inv_w, bits + 8);
                let pow_end = |e: &rug::Float, upper: bool| -> rug::Float {
                    if *e == 0 {
                        return rug::Float::new(bits + 8);
                    }
                    let p = DyadicInterval::from_bounds(e.clone(), e.clone(), bits + 8)
                        .ln()
                        .unwrap()
                        .mul(&inv)
                        .exp();
                    if upper {
                        p.hi().clone()
                    } else {
                        p.lo().clone()
                    }
                };
                let lo = pow_end(abs.lo(), false);
                let hi = pow_end(abs.hi(), true);
                DyadicInterval::from_bounds(lo, hi, bits + 8)
            }
        }
    }
}

/// A point of `R^d`, coordinate by coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct WVector {
    coords: Vec<WCoord>,
}

impl WVector {
    pub fn new(coords: Vec<WCoord>) -> Self {
        WVector { coords }
    }

    pub fn from_rationals(values: Vec<Rational>) -> Self {
        WVector {
            coords: values.into_iter().map(WCoord::rational).collect(),
        }
    }

    pub fn from_intervals(values: Vec<DyadicInterval>) -> Self {
        WVector {
            coords: values.into_iter().map(WCoord::Interval).collect(),
        }
    }

    /// Exact vector from doubles (every finite double is a dyadic rational).
    pub fn from_f64(values: &[f64]) -> Self {
        Self::from_rationals(
            values
                .iter()
                .map(|&x| Rational::from_f64(x).expect("finite coordinate"))
                .collect(),
        )
    }

    pub fn parse<S: AsRef<str>>(values: &[S]) -> Result<Self> {
        let rs = values
            .iter()
            .map(|s| parse_rational(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_rationals(rs))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[WCoord] {
        &self.coords
    }

    pub fn intervals(&self, bits: u32) -> Vec<DyadicInterval> {
        self.coords.iter().map(|c| c.interval(bits)).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.interval(64).to_f64()).collect()
    }

    /// For exact vectors with `log_scale_i = w_i * c` on every nonzero
    /// coordinate, returns `Some(Some(c))`; `Some(None)` for the zero vector;
    /// `None` otherwise.
    fn uniform_log_scale(&self, w: &WeightVector) -> Option<Option<Rational>> {
        let mut common: Option<Rational> = None;
        for (i, c) in self.coords.iter().enumerate() {
            let WCoord::Exact { value, log_scale } = c else {
                return None;
            };
            if *value == 0 {
                continue;
            }
            let ci = Rational::from(log_scale / &w.rational(i));
            match &common {
                None => common = Some(ci),
                Some(c0) if *c0 == ci => {}
                Some(_) => return None,
            }
        }
        Some(common)
    }

    fn bases(&self) -> Vec<Rational> {
        self.coords
            .iter()
            .map(|c| match c {
                WCoord::Exact { value, .. } => value.clone(),
                WCoord::Interval(_) => unreachable!("bases of an interval vector"),
            })
            .collect()
    }
}

fn check_dim(x: &WVector, w: &WeightVector) -> Result<()> {
    if x.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// Enclosure of `||x||_w` at the default starting precision.
pub fn quasi_norm(x: &WVector, w: &WeightVector) -> Result<DyadicInterval> {
    quasi_norm_at(x, w, PrecisionConfig::default().start_bits)
}

/// Enclosure of `||x||_w` computed at `bits` of working precision.
pub fn quasi_norm_at(x: &WVector, w: &WeightVector, bits: u32) -> Result<DyadicInterval> {
    check_dim(x, w)?;
    let mut acc = DyadicInterval::zero(bits);
    for (i, c) in x.coords.iter().enumerate() {
        let inv_w = Rational::from(w.rational(i).recip_ref());
        acc = acc.max(&c.power_interval(&inv_w, bits));
    }
    Ok(acc)
}

/// Certified ordering of `||x||_w` and `||y||_w`.
///
/// Precision doubles from the default start up to `max_bits`. Exact inputs
/// whose scalings agree are settled by cross-exponentiation; exact inputs
/// with different scalings can never tie, so only escalation is needed.
pub fn quasi_norm_compare(x: &WVector, y: &WVector, w: &WeightVector, max_bits: u32) -> Result<Ordering> {
    check_dim(x, w)?;
    check_dim(y, w)?;
    let ux = x.uniform_log_scale(w);
    let uy = y.uniform_log_scale(w);
    if let (Some(cx), Some(cy)) = (&ux, &uy) {
        match (cx, cy) {
            (None, None) => return Ok(Ordering::Equal),
            (None, Some(_)) => return Ok(Ordering::Less),
            (Some(_), None) => return Ok(Ordering::Greater),
            _ => {}
        }
    }
    let mut bits = PrecisionConfig::default().start_bits.min(max_bits);
    loop {
        let a = quasi_norm_at(x, w, bits)?;
        let b = quasi_norm_at(y, w, bits)?;
        if let Some(ord) = a.certified_cmp(&b) {
            return Ok(ord);
        }
        if let (Some(Some(cx)), Some(Some(cy))) = (&ux, &uy) {
            if cx == cy {
                return Ok(power_norm(&x.bases(), w).cmp(&power_norm(&y.bases(), w)));
            }
        }
        if bits >= max_bits {
            return Err(Error::uncertifiable(bits, "quasi-norm comparison"));
        }
        bits = (bits * 2).min(max_bits);
    }
}

/// Multiplies coordinate `i` by `e^(w_i s)`.
pub fn scale_w(x: &WVector, s: &Rational, w: &WeightVector) -> Result<WVector> {
    check_dim(x, w)?;
    let coords = x
        .coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let shift = Rational::from(&w.rational(i) * s);
            match c {
                WCoord::Exact { value, log_scale } => WCoord::Exact {
                    value: value.clone(),
                    log_scale: Rational::from(log_scale + &shift),
                },
                WCoord::Interval(iv) => {
                    let bits = iv.precision_bits();
                    WCoord::Interval(iv.mul(&DyadicInterval::from_rational(&shift, bits).exp()))
                }
            }
        })
        .collect();
    Ok(WVector { coords })
}

/// [`scale_w`] for a flow time given as a double (taken as its exact value).
pub fn scale_w_f64(x: &WVector, s: f64, w: &WeightVector) -> Result<WVector> {
    let s = Rational::from_f64(s).ok_or_else(|| Error::InvalidArgument(format!("non-finite time {s}")))?;
    scale_w(x, &s, w)
}

/// `N(x) = max_i |x_i|^(L/n_i)` for `w_i = n_i/D`, `L = lcm(n_i)`, so that
/// `||x||_w = N(x)^(D/L)`.
pub fn power_norm(x: &[Rational], w: &WeightVector) -> Rational {
    let mut best = Rational::new();
    for (i, xi) in x.iter().enumerate() {
        let v = Rational::from(xi.abs_ref()).pow(w.power(i));
        if v > best {
            best = v;
        }
    }
    best
}

/// Exact ordering of `cx * ||x||_w` and `cy * ||y||_w` for `cx, cy >= 0`,
/// via `cx^L N(x)^D` versus `cy^L N(y)^D`.
pub fn compare_scaled_exact(
    cx: &Rational,
    x: &[Rational],
    cy: &Rational,
    y: &[Rational],
    w: &WeightVector,
) -> Ordering {
    let l = w.numer_lcm() as u32;
    let d = w.denom() as u32;
    let lhs = cx.clone().pow(l) * power_norm(x, w).pow(d);
    let rhs = cy.clone().pow(l) * power_norm(y, w).pow(d);
    lhs.cmp(&rhs)
}

/// `ln |v|` in double precision, `-inf` for zero; valid for integers of any size.
pub fn ln_abs(v: &Integer) -> f64 {
    if *v == 0 {
        return f64::NEG_INFINITY;
    }
    let (m, e) = v.to_f64_exp();
    m.abs().ln() + e as f64 * std::f64::consts::LN_2
}

/// `ln ||res / den||_w` in double precision.
pub fn ln_norm_residual(res: &[Integer], ln_den: f64, w: &WeightVector) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for (i, r) in res.iter().enumerate() {
        if *r == 0 {
            continue;
        }
        let v = (ln_abs(r) - ln_den) / w.value(i);
        if v > best {
            best = v;
        }
    }
    best
}

fn residual_rationals(res: &[Integer], den: &Integer) -> Vec<Rational> {
    res.iter().map(|r| Rational::from((r.clone(), den.clone()))).collect()
}

/// Exact ordering of `ca * ||a/den||_w` and `cb * ||b/den||_w` for positive
/// integer multipliers. A double-precision test settles clear cases; near
/// ties fall back to exact rational arithmetic.
pub fn compare_scaled_residuals(
    ca: &Integer,
    a: &[Integer],
    cb: &Integer,
    b: &[Integer],
    den: &Integer,
    w: &WeightVector,
) -> Ordering {
    let ln_den = ln_abs(den);
    let la = ln_abs(ca) + ln_norm_residual(a, ln_den, w);
    let lb = ln_abs(cb) + ln_norm_residual(b, ln_den, w);
    match (la.is_finite(), lb.is_finite()) {
        (false, false) => return Ordering::Equal,
        (false, true) => return Ordering::Less,
        (true, false) => return Ordering::Greater,
        _ => {}
    }
    let tol = 1e-11 * (1.0 + la.abs() + lb.abs());
    if la < lb - tol {
        return Ordering::Less;
    }
    if la > lb + tol {
        return Ordering::Greater;
    }
    compare_scaled_exact(
        &Rational::from(ca),
        &residual_rationals(a, den),
        &Rational::from(cb),
        &residual_rationals(b, den),
        w,
    )
}

/// Exact ordering of `c * ||a/den||_w` against `1`.
pub fn compare_scaled_residual_to_one(c: &Integer, a: &[Integer], den: &Integer, w: &WeightVector) -> Ordering {
    let la = ln_abs(c) + ln_norm_residual(a, ln_abs(den), w);
    if la == f64::NEG_INFINITY {
        return Ordering::Less;
    }
    let tol = 1e-11 * (1.0 + la.abs());
    if la < -tol {
        return Ordering::Less;
    }
    if la > tol {
        return Ordering::Greater;
    }
    let one = vec![Rational::from(1); 1];
    let mut unit = one;
    unit.resize(w.dim(), Rational::new());
    compare_scaled_exact(
        &Rational::from(c),
        &residual_rationals(a, den),
        &Rational::from(1),
        &unit,
        w,
    )
}

/// Enclosure of `||res/den||_w` at `bits` of precision.
pub fn residual_norm_interval(res: &[Integer], den: &Integer, w: &WeightVector, bits: u32) -> DyadicInterval {
    let x = WVector::from_rationals(residual_rationals(res, den));
    quasi_norm_at(&x, w, bits).expect("residual has the weight dimension")
}
