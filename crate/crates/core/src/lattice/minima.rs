//! Successive-minimum functionals: `lambda_1` in the sup norm, in the
//! weighted norm `max(||pi v||_w, |v_(d+1)|)`, and `Delta = -ln lambda_1`
//! in the Euclidean norm.

use crate::error::{Error, Result};
use crate::interval::DyadicInterval;
use crate::lattice::reduce::{self, DEFAULT_NODE_BUDGET};
use crate::lattice::{LatticePoint, UnimodularLattice};
use crate::weights::WeightVector;

const BITS: u32 = 64;

/// A shortest vector together with its length.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub value: f64,
    pub err: f64,
    pub vector: LatticePoint,
}

impl Minimum {
    pub fn interval(&self) -> DyadicInterval {
        DyadicInterval::from_f64_bounds((self.value - self.err).max(0.0), self.value + self.err, BITS)
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn min_row_sup(lattice: &UnimodularLattice) -> f64 {
    let mut rows = lattice.basis_rows();
    let _ = reduce::lll(&mut rows);
    rows.iter().map(|r| sup_norm(r)).fold(f64::INFINITY, f64::min)
}

fn best_of<F: Fn(&LatticePoint) -> (f64, f64)>(points: Vec<LatticePoint>, norm: F) -> Result<Minimum> {
    points
        .into_iter()
        .filter(|p| p.coeffs.iter().any(|c| *c != 0))
        .map(|p| {
            let (value, err) = norm(&p);
            Minimum { value, err, vector: p }
        })
        .min_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then_with(|| a.vector.coeffs.cmp(&b.vector.coeffs))
        })
        .ok_or(Error::EnumerationBudgetExceeded { budget: 0 })
}

/// Shortest nonzero vector in the sup norm.
pub fn shortest_sup(lattice: &UnimodularLattice) -> Result<Minimum> {
    let n = lattice.dim();
    let radius = min_row_sup(lattice).min(1.0);
    let pts = lattice.points_in_box(&vec![radius; n], DEFAULT_NODE_BUDGET)?;
    best_of(pts, |p| {
        let (i, v) = p.coords.iter().enumerate().fold(
            (0, 0.0f64),
            |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) },
        );
        (v, p.err[i])
    })
}

/// `||v||_(w,inf) = max(||pi v||_w, |v_(d+1)|)` in double precision, with
/// an error bound derived from the coordinate errors.
pub fn weighted_sup_norm(coords: &[f64], err: &[f64], w: &WeightVector) -> (f64, f64) {
    let d = w.dim();
    let mut value = coords[d].abs();
    let mut hi = value + err[d];
    for i in 0..d {
        let inv = 1.0 / w.value(i);
        value = value.max(coords[i].abs().powf(inv));
        hi = hi.max((coords[i].abs() + err[i]).powf(inv));
    }
    (value, (hi - value).max(0.0) + value * 4.0 * f64::EPSILON)
}

/// Shortest nonzero vector in `||.||_(w,inf)`.
pub fn shortest_w(lattice: &UnimodularLattice, w: &WeightVector) -> Result<Minimum> {
    let n = lattice.dim();
    if w.dim() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: w.dim(),
        });
    }
    let mut radius: f64 = 1.0;
    let mut rows = lattice.basis_rows();
    let _ = reduce::lll(&mut rows);
    for r in &rows {
        let zeros = vec![0.0; n];
        radius = radius.min(weighted_sup_norm(r, &zeros, w).0);
    }
    let mut bounds: Vec<f64> = (0..n - 1).map(|i| radius.powf(w.value(i))).collect();
    bounds.push(radius);
    let pts = lattice.points_in_box(&bounds, DEFAULT_NODE_BUDGET)?;
    best_of(pts, |p| weighted_sup_norm(&p.coords, &p.err, w))
}

/// Shortest nonzero vector in the Euclidean norm.
pub fn shortest_euclidean(lattice: &UnimodularLattice) -> Result<Minimum> {
    let mut rows = lattice.basis_rows();
    reduce::lll(&mut rows)?;
    let radius = rows
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    let n = lattice.dim();
    let pts = lattice.points_in_box(&vec![radius; n], DEFAULT_NODE_BUDGET)?;
    best_of(pts, |p| {
        let v = p.coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        let e = p.err.iter().map(|x| x * x).sum::<f64>().sqrt();
        (v, e + v * 4.0 * f64::EPSILON)
    })
}

/// Enclosure of `lambda_1` in the sup norm.
pub fn lambda1_sup(lattice: &UnimodularLattice) -> Result<DyadicInterval> {
    Ok(shortest_sup(lattice)?.interval())
}

/// Enclosure of `lambda_1^w`, the minimum of `||.||_(w,inf)`.
pub fn lambda1_w(lattice: &UnimodularLattice, w: &WeightVector) -> Result<DyadicInterval> {
    Ok(shortest_w(lattice, w)?.interval())
}

/// Enclosure of `Delta = -ln lambda_1` for the Euclidean norm.
pub fn delta_fn(lattice: &UnimodularLattice) -> Result<DyadicInterval> {
    let m = shortest_euclidean(lattice)?;
    let lo = -(m.value + m.err).ln();
    let hi = -(m.value - m.err).max(f64::MIN_POSITIVE).ln();
    let slack = 4.0 * f64::EPSILON * (1.0 + lo.abs().max(hi.abs()));
    Ok(DyadicInterval::from_f64_bounds(lo - slack, hi + slack, BITS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::FlowParams;

    #[test]
    fn standard_lattice_minima() {
        for n in 2..=4 {
            let z = UnimodularLattice::standard(n);
            let w = WeightVector::equal(n - 1);
            assert!(lambda1_sup(&z).unwrap().contains_f64(1.0));
            assert!(lambda1_w(&z, &w).unwrap().contains_f64(1.0));
            assert!(delta_fn(&z).unwrap().contains_f64(0.0));
        }
    }

    #[test]
    fn diagonal_lattice() {
        let l = UnimodularLattice::from_columns(&[vec![2.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let w = WeightVector::equal(1);
        assert!(lambda1_sup(&l).unwrap().contains_f64(0.5));
        assert!(lambda1_w(&l, &w).unwrap().contains_f64(0.5));
        let e = std::f64::consts::E;
        let l = UnimodularLattice::from_columns(&[vec![1.0 / e, 0.0], vec![0.0, e]]).unwrap();
        let delta = delta_fn(&l).unwrap();
        assert!((delta.to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flowed_standard_lattice() {
        let w = WeightVector::parse_list("2/3,1/3").unwrap();
        let z = UnimodularLattice::standard(3);
        let l = z.apply_flow(&FlowParams::vector(w.clone()), 3.0).unwrap();
        let m = shortest_sup(&l).unwrap();
        assert!((m.value - (-3.0f64).exp()).abs() < 1e-12);
        let m = shortest_w(&l, &w).unwrap();
        assert!((m.value - (-3.0f64).exp()).abs() < 1e-12);
    }
}
