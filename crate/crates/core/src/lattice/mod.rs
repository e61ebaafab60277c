//! Unimodular lattices in `R^(d+1)`, the diagonal flow and regions of the
//! cross-section.

pub mod minima;
pub mod reduce;
pub mod section;
pub mod theta_lattice;

use std::sync::Arc;

use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::DyadicInterval;
use crate::theta::ThetaVector;
use crate::weights::WeightVector;

pub use minima::{delta_fn, lambda1_sup, lambda1_w};
pub use section::{
    classify_section_point, cross_section_visits, first_return, CrossSectionVisit, SectionClass, VisitReport,
};
pub use theta_lattice::{LatticeVec, ThetaLattice};

/// Relative accuracy of entries in a double-precision basis.
const FLOAT_REL_ERR: f64 = 4.0 * f64::EPSILON;
/// Relative error at which a double-precision basis is no longer trusted.
const FLOAT_ERR_CEILING: f64 = 1e-7;

/// Exponents of the diagonal flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowParams {
    /// `a_t = diag(e^(w_1 t), ..., e^(w_d t), e^(-t))`.
    Vector(WeightVector),
    /// `a_t = diag(e^(a_1 t), ..., e^(a_m t), e^(-b_1 t), ..., e^(-b_n t))`.
    Matrix { a: WeightVector, b: WeightVector },
}

impl FlowParams {
    pub fn vector(w: WeightVector) -> Self {
        FlowParams::Vector(w)
    }

    pub fn dim(&self) -> usize {
        match self {
            FlowParams::Vector(w) => w.dim() + 1,
            FlowParams::Matrix { a, b } => a.dim() + b.dim(),
        }
    }

    /// `ln` of the diagonal entries of `a_1`.
    pub fn exponents(&self) -> Vec<f64> {
        match self {
            FlowParams::Vector(w) => {
                let mut e = w.values();
                e.push(-1.0);
                e
            }
            FlowParams::Matrix { a, b } => a
                .values()
                .into_iter()
                .chain(b.values().into_iter().map(|x| -x))
                .collect(),
        }
    }

    /// Sum of the exponents, exactly: `det(a_t) = e^(t * sum)`.
    pub fn exponent_sum(&self) -> Rational {
        let sum_of = |w: &WeightVector| (0..w.dim()).fold(Rational::new(), |acc, i| acc + w.rational(i));
        match self {
            FlowParams::Vector(w) => sum_of(w) - 1u32,
            FlowParams::Matrix { a, b } => sum_of(a) - sum_of(b),
        }
    }

    pub fn weight_vector(&self) -> Option<&WeightVector> {
        match self {
            FlowParams::Vector(w) => Some(w),
            FlowParams::Matrix { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeOrigin {
    Theta,
    Sampled,
    Explicit,
}

/// A lattice of covolume one.
#[derive(Debug, Clone)]
pub struct UnimodularLattice {
    inner: Inner,
    origin: LatticeOrigin,
}

#[derive(Debug, Clone)]
enum Inner {
    Theta(ThetaLattice),
    Float(FloatLattice),
}

/// Basis in double precision with the integer change of basis back to the
/// generators the lattice was built from.
#[derive(Debug, Clone)]
struct FloatLattice {
    rows: Vec<Vec<f64>>,
    to_original: Vec<Vec<i64>>,
    log_time: f64,
    rel_err: f64,
}

/// A lattice point returned by region enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    /// Integer coordinates: `(p, q)` for `Lambda_theta`, otherwise the
    /// coefficients on the generators.
    pub coeffs: Vec<Integer>,
    pub coords: Vec<f64>,
    /// Bound on the rounding error of each coordinate.
    pub err: Vec<f64>,
}

impl LatticePoint {
    fn negated(&self) -> Self {
        LatticePoint {
            coeffs: self.coeffs.iter().map(|x| Integer::from(-x)).collect(),
            coords: self.coords.iter().map(|x| -x).collect(),
            err: self.err.clone(),
        }
    }

    /// `true` when `other` is `self` or `-self`.
    pub fn same_line(&self, other: &LatticePoint) -> bool {
        self.coeffs == other.coeffs
            || self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|(a, b)| *a == Integer::from(-b))
    }

    pub fn is_primitive(&self) -> bool {
        gcd_is_one(&self.coeffs)
    }
}

#[allow(clippy::needless_range_loop)]
fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            det = -det;
        }
        det *= m[c][c];
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

impl UnimodularLattice {
    /// Lattice generated by the given columns; the determinant must be one
    /// up to rounding.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        Self::from_columns_with_origin(columns, LatticeOrigin::Explicit)
    }

    pub(crate) fn from_columns_with_origin(columns: &[Vec<f64>], origin: LatticeOrigin) -> Result<Self> {
        let n = columns.len();
        if n == 0 || columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidArgument("basis must be square".into()));
        }
        let dt = det(columns);
        if (dt.abs() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("basis determinant {dt} is not +-1")));
        }
        Ok(Self::from_columns_unchecked(columns.to_vec(), origin))
    }

    /// Same as [`Self::from_columns`] for bases that are unimodular by
    /// construction but whose floating-point determinant may be inaccurate.
    pub(crate) fn from_columns_unchecked(columns: Vec<Vec<f64>>, origin: LatticeOrigin) -> Self {
        let n = columns.len();
        let to_original = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        UnimodularLattice {
            inner: Inner::Float(FloatLattice {
                rows: columns,
                to_original,
                log_time: 0.0,
                rel_err: FLOAT_REL_ERR,
            }),
            origin,
        }
    }

    /// The standard lattice `Z^n`.
    pub fn standard(n: usize) -> Self {
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_columns(&cols).expect("identity is unimodular")
    }

    pub fn from_theta_lattice(lat: ThetaLattice) -> Self {
        UnimodularLattice {
            inner: Inner::Theta(lat),
            origin: LatticeOrigin::Theta,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.inner {
            Inner::Theta(t) => t.dim(),
            Inner::Float(f) => f.rows.len(),
        }
    }

    pub fn origin(&self) -> LatticeOrigin {
        self.origin
    }

    pub fn log_time(&self) -> f64 {
        match &self.inner {
            Inner::Theta(t) => t.time(),
            Inner::Float(f) => f.log_time,
        }
    }

    pub fn as_theta(&self) -> Option<&ThetaLattice> {
        match &self.inner {
            Inner::Theta(t) => Some(t),
            Inner::Float(_) => None,
        }
    }

    /// Current basis vectors (rows) in double precision.
    pub fn basis_rows(&self) -> Vec<Vec<f64>> {
        match &self.inner {
            Inner::Theta(t) => t.embedding(),
            Inner::Float(f) => f.rows.clone(),
        }
    }

    /// Relative accuracy of [`Self::basis_rows`].
    pub fn relative_error(&self) -> f64 {
        match &self.inner {
            Inner::Theta(_) => 1e-13,
            Inner::Float(f) => f.rel_err,
        }
    }

    /// Current basis as a matrix of enclosures; entry `[i][j]` is
    /// coordinate `i` of basis vector `j`.
    pub fn basis_intervals(&self, bits: u32) -> Vec<Vec<DyadicInterval>> {
        let n = self.dim();
        match &self.inner {
            Inner::Theta(t) => {
                let time = Rational::from_f64(t.time()).unwrap_or_default();
                let w = t.weights();
                let den = t.theta().den();
                (0..n)
                    .map(|i| {
                        t.basis()
                            .iter()
                            .map(|v| {
                                let (value, exponent) = if i + 1 < n {
                                    (
                                        Rational::from((v.res[i].clone(), den.clone())),
                                        Rational::from(&time * &w.rational(i)),
                                    )
                                } else {
                                    (Rational::from(v.q.clone()), Rational::from(-&time))
                                };
                                crate::quasinorm::WCoord::Exact {
                                    value,
                                    log_scale: exponent,
                                }
                                .interval(bits)
                            })
                            .collect()
                    })
                    .collect()
            }
            Inner::Float(f) => (0..n)
                .map(|i| {
                    f.rows
                        .iter()
                        .map(|row| {
                            let x = row[i];
                            let e = x.abs() * f.rel_err;
                            DyadicInterval::from_f64_bounds(x - e, x + e, bits)
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Exact coordinates of a point, available while the lattice is still
    /// spanned by the double-precision generators it was built from.
    pub fn exact_coords(&self, pt: &LatticePoint) -> Option<Vec<Rational>> {
        let Inner::Float(f) = &self.inner else {
            return None;
        };
        if f.log_time != 0.0 || f.rel_err != FLOAT_REL_ERR {
            return None;
        }
        let n = f.rows.len();
        let mut out = vec![Rational::new(); n];
        for (c, row) in pt.coeffs.iter().zip(&f.rows) {
            if *c == 0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(row) {
                *o += Rational::from_f64(*x)? * c;
            }
        }
        Some(out)
    }

    /// Determinant of the current basis in double precision.
    pub fn determinant(&self) -> f64 {
        det(&self.basis_rows())
    }

    /// `a_t L` for the given flow.
    pub fn apply_flow(&self, fp: &FlowParams, t: f64) -> Result<UnimodularLattice> {
        if fp.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: fp.dim(),
            });
        }
        let inner = match &self.inner {
            Inner::Theta(lat) => {
                if fp.weight_vector() != Some(lat.weights()) {
                    return Err(Error::InvalidArgument(
                        "a theta lattice follows the flow of its own weight vector".into(),
                    ));
                }
                let mut next = lat.clone();
                next.advance_to(lat.time() + t)?;
                Inner::Theta(next)
            }
            Inner::Float(f) => Inner::Float(f.flowed(fp, t)?),
        };
        Ok(UnimodularLattice {
            inner,
            origin: self.origin,
        })
    }

    /// Primitive lattice points (both signs) with `|coord_j| <= bounds[j]`,
    /// bounds taken with a small relative slack.
    pub(crate) fn points_in_box(&self, bounds: &[f64], budget: u64) -> Result<Vec<LatticePoint>> {
        let slack = 1.0 + 1e-9 + 4.0 * self.relative_error();
        let inflated: Vec<f64> = bounds.iter().map(|b| b * slack).collect();
        let mut out = Vec::new();
        match &self.inner {
            Inner::Theta(t) => {
                for (v, _) in t.enumerate_box(&inflated, budget)? {
                    let coords = t.embed(&v);
                    let err = coords.iter().map(|x| x.abs() * 1e-14 + f64::MIN_POSITIVE).collect();
                    let mut coeffs = v.p;
                    coeffs.push(v.q);
                    let pt = LatticePoint { coeffs, coords, err };
                    out.push(pt.negated());
                    out.push(pt);
                }
            }
            Inner::Float(f) => {
                let n = f.rows.len();
                let unit = f.rel_err + 8.0 * n as f64 * f64::EPSILON;
                for bp in reduce::enumerate_primitive_box(&f.rows, &inflated, budget)? {
                    let mut coeffs = vec![Integer::new(); n];
                    let mut err = vec![0.0; n];
                    for ((c, row), orig) in bp.coeffs.iter().zip(&f.rows).zip(&f.to_original) {
                        if *c == 0 {
                            continue;
                        }
                        for (o, u) in coeffs.iter_mut().zip(orig) {
                            *o += Integer::from(*c) * Integer::from(*u);
                        }
                        for (e, x) in err.iter_mut().zip(row) {
                            *e += (*c as f64 * x).abs() * unit;
                        }
                    }
                    let pt = LatticePoint {
                        coeffs,
                        coords: bp.coords,
                        err,
                    };
                    out.push(pt.negated());
                    out.push(pt);
                }
            }
        }
        Ok(out)
    }
}

impl FloatLattice {
    #[allow(clippy::needless_range_loop)]
    fn flowed(&self, fp: &FlowParams, t: f64) -> Result<FloatLattice> {
        let ex = fp.exponents();
        let spread = ex.iter().cloned().fold(f64::MIN, f64::max) - ex.iter().cloned().fold(f64::MAX, f64::min);
        let rel_err = self.rel_err * (spread * t.abs()).exp().sqrt() + FLOAT_REL_ERR;
        if rel_err > FLOAT_ERR_CEILING {
            return Err(Error::PrecisionExhausted {
                needed: (53.0 + (rel_err / FLOAT_ERR_CEILING).log2()).ceil() as u64,
                available: 53,
            });
        }
        let mut rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| r.iter().zip(&ex).map(|(x, e)| x * (e * t).exp()).collect())
            .collect();
        let u = reduce::lll(&mut rows)?;
        let n = rows.len();
        let mut to_original = vec![vec![0i64; n]; n];
        for i in 0..n {
            for k in 0..n {
                if u[i][k] == 0 {
                    continue;
                }
                for j in 0..n {
                    let p = u[i][k].checked_mul(self.to_original[k][j]);
                    to_original[i][j] =
                        p.and_then(|p| to_original[i][j].checked_add(p))
                            .ok_or(Error::PrecisionExhausted {
                                needed: 64,
                                available: 63,
                            })?;
                }
            }
        }
        Ok(FloatLattice {
            rows,
            to_original,
            log_time: self.log_time + t,
            rel_err,
        })
    }
}

/// `Lambda_theta = u(-theta) Z^(d+1)`.
pub fn make_theta_lattice(theta: Arc<ThetaVector>, w: &WeightVector, max_bits: u32) -> Result<UnimodularLattice> {
    Ok(UnimodularLattice::from_theta_lattice(ThetaLattice::new(
        theta, w, max_bits,
    )?))
}

/// `a_t L`.
pub fn apply_flow(lattice: &UnimodularLattice, fp: &FlowParams, t: f64) -> Result<UnimodularLattice> {
    lattice.apply_flow(fp, t)
}

/// Regions of `R^(d+1)` used by the cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `||x||_w <= r` and `x_(d+1) = 1`.
    Disk { r: f64 },
    /// `||x||_w <= r` and `|x_(d+1)| <= 1`.
    Cylinder { r: f64 },
    /// `||x||_w <= r` and `|x_(d+1)| <= e`.
    CylinderTall { r: f64, e: f64 },
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Disk { r } | Region::Cylinder { r } => r >= 0.0 && r.is_finite(),
            Region::CylinderTall { r, e } => r >= 0.0 && e > 0.0 && r.is_finite() && e.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid region {self:?}")))
        }
    }
}

fn gcd_is_one(v: &[Integer]) -> bool {
    let mut g = Integer::new();
    for x in v {
        g.gcd_mut(x);
    }
    g == 1
}

/// Every primitive lattice vector in the (closed) region.
pub fn enumerate_in_region(
    lattice: &UnimodularLattice,
    region: &Region,
    w: &WeightVector,
    budget: u64,
) -> Result<Vec<LatticePoint>> {
    region.validate()?;
    let n = lattice.dim();
    if w.dim() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: w.dim(),
        });
    }
    let (r, height) = match *region {
        Region::Disk { r } | Region::Cylinder { r } => (r, 1.0),
        Region::CylinderTall { r, e } => (r, e),
    };
    let tol = 1e-9 + 8.0 * lattice.relative_error();
    let mut bounds: Vec<f64> = (0..n - 1).map(|i| r.powf(w.value(i)).max(tol)).collect();
    bounds.push(height);
    let mut out: Vec<LatticePoint> = lattice
        .points_in_box(&bounds, reduce::DEFAULT_NODE_BUDGET.max(budget))?
        .into_iter()
        .filter(|pt| {
            let y = pt.coords[n - 1];
            let x_norm = (0..n - 1)
                .map(|i| pt.coords[i].abs().powf(1.0 / w.value(i)))
                .fold(0.0, f64::max);
            let in_x = x_norm <= r * (1.0 + tol) + tol;
            let in_y = match region {
                Region::Disk { .. } => (y - 1.0).abs() <= tol,
                _ => y.abs() <= height * (1.0 + tol),
            };
            in_x && in_y && gcd_is_one(&pt.coeffs)
        })
        .collect();
    out.sort_by(|a, b| a.coeffs.cmp(&b.coeffs));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(pts: &[LatticePoint]) -> Vec<Vec<i64>> {
        pts.iter()
            .map(|p| p.coeffs.iter().map(|x| x.to_i64().unwrap()).collect())
            .collect()
    }

    #[test]
    fn theta_lattice_generators() {
        let theta = Arc::new(ThetaVector::parse_list("1/2").unwrap());
        let lat = make_theta_lattice(theta, &WeightVector::equal(1), 8192).unwrap();
        let rows = lat.basis_rows();
        assert_eq!(rows, vec![vec![1.0, 0.0], vec![-0.5, 1.0]]);
        assert_eq!(lat.determinant(), 1.0);
        let iv = lat.basis_intervals(128);
        assert!(iv[0][1].contains_rational(&Rational::from((-1, 2))));
    }

    #[test]
    fn zero_theta_is_standard() {
        let theta = Arc::new(ThetaVector::parse_list("0,0").unwrap());
        let lat = make_theta_lattice(theta, &WeightVector::equal(2), 8192).unwrap();
        let rows = lat.basis_rows();
        let std = UnimodularLattice::standard(3).basis_rows();
        assert_eq!(rows, std);
    }

    #[test]
    fn flow_determinant_and_inverse() {
        let fp = FlowParams::vector(WeightVector::parse_list("2/3,1/3").unwrap());
        assert_eq!(fp.exponent_sum(), 0);
        let lat =
            UnimodularLattice::from_columns(&[vec![1.0, 0.0, 0.0], vec![0.3, 1.0, 0.0], vec![0.25, 0.7, 1.0]]).unwrap();
        let there = lat.apply_flow(&fp, 1.5).unwrap();
        assert!((there.determinant().abs() - 1.0).abs() < 1e-12);
        let back = there.apply_flow(&fp, -1.5).unwrap();
        let w = WeightVector::parse_list("2/3,1/3").unwrap();
        let region = Region::CylinderTall { r: 1.0, e: 1.5 };
        let a = enumerate_in_region(&lat, &region, &w, 0).unwrap();
        let b = enumerate_in_region(&back, &region, &w, 0).unwrap();
        assert_eq!(coeffs(&a), coeffs(&b));
    }

    #[test]
    fn standard_lattice_disk_and_cylinder() {
        let w = WeightVector::parse_list("2/3,1/3").unwrap();
        let z3 = UnimodularLattice::standard(3);
        let disk = enumerate_in_region(&z3, &Region::Disk { r: 0.5 }, &w, 0).unwrap();
        assert_eq!(coeffs(&disk), vec![vec![0, 0, 1]]);
        let cyl = enumerate_in_region(&z3, &Region::Cylinder { r: 1.0 }, &w, 0).unwrap();
        // every primitive vector with entries in {-1, 0, 1}
        assert_eq!(cyl.len(), 26);
    }

    #[test]
    fn theta_lattice_flow_scales_last_row() {
        let theta = Arc::new(ThetaVector::parse_list("3/10").unwrap());
        let w = WeightVector::equal(1);
        let lat = make_theta_lattice(theta, &w, 8192).unwrap();
        let q = 7.0f64;
        let flowed = lat.apply_flow(&FlowParams::vector(w.clone()), q.ln()).unwrap();
        let t = flowed.as_theta().unwrap();
        let v = LatticeVec::from_pq(vec![Integer::from(2)], Integer::from(7), t.theta());
        let e = t.embed(&v);
        assert!((e[1] - 1.0).abs() < 1e-15);
        assert!((e[0] - 7.0 * (2.0 - 2.1)).abs() < 1e-12);
    }

    #[test]
    fn matrix_flow_supported_for_float_lattices() {
        let a = WeightVector::equal(2);
        let b = WeightVector::equal(1);
        let fp = FlowParams::Matrix { a, b };
        assert_eq!(fp.exponent_sum(), 0);
        let z3 = UnimodularLattice::standard(3);
        let l = z3.apply_flow(&fp, 2.0).unwrap();
        assert!((l.determinant() - 1.0).abs() < 1e-12);
    }
}
