//! Double-precision LLL reduction and Fincke-Pohst enumeration.
//!
//! Bases are lists of row vectors. Every routine tracks the integer
//! transform so callers can replay it on exact data.

use crate::error::{Error, Result};

/// Node budget used when callers do not supply one.
pub const DEFAULT_NODE_BUDGET: u64 = 5_000_000;

const LLL_DELTA: f64 = 0.99;
const LLL_MAX_ITERS: usize = 100_000;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn overflow() -> Error {
    Error::PrecisionExhausted {
        needed: 64,
        available: 53,
    }
}

/// Gram-Schmidt data: `mu[i][j]` for `j < i` and squared norms `b_star[i]`.
struct GramSchmidt {
    mu: Vec<Vec<f64>>,
    norms: Vec<f64>,
}

fn gram_schmidt(b: &[Vec<f64>]) -> GramSchmidt {
    let n = b.len();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut mu = vec![vec![0.0; n]; n];
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let mut v = b[i].clone();
        for j in 0..i {
            let m = if norms[j] > 0.0 {
                dot(&b[i], &star[j]) / norms[j]
            } else {
                0.0
            };
            mu[i][j] = m;
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= m * sk;
            }
        }
        norms[i] = dot(&v, &v);
        star.push(v);
    }
    GramSchmidt { mu, norms }
}

fn identity(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

/// LLL-reduces `basis` in place and returns `U` with `new = U * old`.
pub fn lll(basis: &mut [Vec<f64>]) -> Result<Vec<Vec<i64>>> {
    let n = basis.len();
    let mut u = identity(n);
    if n < 2 {
        return Ok(u);
    }
    let mut k = 1;
    let mut iters = 0;
    while k < n {
        iters += 1;
        if iters > LLL_MAX_ITERS {
            return Err(overflow());
        }
        for j in (0..k).rev() {
            let gs = gram_schmidt(&basis[..=k]);
            let m = gs.mu[k][j];
            if m.abs() > 0.5 + 1e-12 {
                let r = m.round();
                if !r.is_finite() || r.abs() > 9.0e15 {
                    return Err(overflow());
                }
                let (head, tail) = basis.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= r * y;
                }
                let ri = r as i64;
                let (uh, ut) = u.split_at_mut(k);
                for (x, y) in ut[0].iter_mut().zip(&uh[j]) {
                    *x = y.checked_mul(ri).and_then(|p| x.checked_sub(p)).ok_or_else(overflow)?;
                }
            }
        }
        let gs = gram_schmidt(&basis[..=k]);
        let m = gs.mu[k][k - 1];
        if gs.norms[k] >= (LLL_DELTA - m * m) * gs.norms[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            u.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    Ok(u)
}

/// All nonzero integer coefficient vectors `x` with `|sum_i x_i b_i| <= radius`,
/// one from each `{x, -x}` pair (the last nonzero entry is positive).
pub fn enumerate_ball(basis: &[Vec<f64>], radius: f64, budget: u64) -> Result<Vec<Vec<i64>>> {
    search_ball(basis, radius, budget, false)
}

fn gcd(a: i64, b: i64) -> u64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn search_ball(basis: &[Vec<f64>], radius: f64, budget: u64, primitive: bool) -> Result<Vec<Vec<i64>>> {
    let n = basis.len();
    let gs = gram_schmidt(basis);
    if gs.norms.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::InvalidArgument("degenerate lattice basis".into()));
    }
    let r2 = radius * radius * (1.0 + 1e-9);
    let mut state = Search {
        mu: &gs.mu,
        norms: &gs.norms,
        r2,
        budget,
        nodes: 0,
        x: vec![0; n],
        out: Vec::new(),
        primitive,
    };
    state.descend(n - 1, 0.0, true)?;
    Ok(state.out)
}

struct Search<'a> {
    mu: &'a [Vec<f64>],
    norms: &'a [f64],
    r2: f64,
    budget: u64,
    nodes: u64,
    x: Vec<i64>,
    out: Vec<Vec<i64>>,
    primitive: bool,
}

impl Search<'_> {
    fn descend(&mut self, level: usize, partial: f64, zero_above: bool) -> Result<()> {
        let n = self.x.len();
        let center: f64 = -((level + 1)..n)
            .map(|j| self.mu[j][level] * self.x[j] as f64)
            .sum::<f64>();
        let room = self.r2 - partial;
        if room < 0.0 {
            return Ok(());
        }
        let half = (room / self.norms[level]).sqrt();
        let mut lo = (center - half).ceil();
        let mut hi = (center + half).floor();
        if zero_above {
            lo = lo.max(0.0);
            if level == 0 && self.primitive {
                hi = hi.min(1.0);
            }
        }
        if hi < lo {
            return Ok(());
        }
        if hi - lo > 1e7 {
            return Err(Error::EnumerationBudgetExceeded { budget: self.budget });
        }
        let mut xi = lo as i64;
        while xi as f64 <= hi {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::EnumerationBudgetExceeded { budget: self.budget });
            }
            let diff = xi as f64 - center;
            let p = partial + diff * diff * self.norms[level];
            if p <= self.r2 {
                self.x[level] = xi;
                let still_zero = zero_above && xi == 0;
                if level == 0 {
                    if !still_zero && (!self.primitive || self.x.iter().fold(0, |g, &c| gcd(g as i64, c)) == 1) {
                        self.out.push(self.x.clone());
                    }
                } else {
                    self.descend(level - 1, p, still_zero)?;
                }
            }
            xi += 1;
        }
        self.x[level] = 0;
        Ok(())
    }
}

/// A lattice point found by [`enumerate_box`]: coefficients with respect to
/// the input basis and its coordinates.
#[derive(Debug, Clone)]
pub struct BoxPoint {
    pub coeffs: Vec<i64>,
    pub coords: Vec<f64>,
}

/// All nonzero lattice points (one per sign pair) with `|coord_j| <= bounds[j]`.
pub fn enumerate_box(basis: &[Vec<f64>], bounds: &[f64], budget: u64) -> Result<Vec<BoxPoint>> {
    search_box(basis, bounds, budget, false)
}

/// As [`enumerate_box`], restricted to primitive points. Multiples of a
/// very short vector are skipped without being visited.
pub fn enumerate_primitive_box(basis: &[Vec<f64>], bounds: &[f64], budget: u64) -> Result<Vec<BoxPoint>> {
    search_box(basis, bounds, budget, true)
}

fn search_box(basis: &[Vec<f64>], bounds: &[f64], budget: u64, primitive: bool) -> Result<Vec<BoxPoint>> {
    let n = basis.len();
    let mut scaled: Vec<Vec<f64>> = basis
        .iter()
        .map(|row| row.iter().zip(bounds).map(|(x, b)| x / b).collect())
        .collect();
    let u = lll(&mut scaled)?;
    let radius = (n as f64).sqrt();
    let found = search_ball(&scaled, radius, budget, primitive)?;
    let mut out = Vec::with_capacity(found.len());
    for c in found {
        let mut coords = vec![0.0; n];
        for (ck, row) in c.iter().zip(&scaled) {
            if *ck != 0 {
                for (x, r) in coords.iter_mut().zip(row) {
                    *x += *ck as f64 * r;
                }
            }
        }
        if coords.iter().any(|x| x.abs() > 1.0 + 1e-9) {
            continue;
        }
        for (x, b) in coords.iter_mut().zip(bounds) {
            *x *= b;
        }
        let mut orig = vec![0i64; n];
        for (ck, urow) in c.iter().zip(&u) {
            if *ck == 0 {
                continue;
            }
            for (o, uk) in orig.iter_mut().zip(urow) {
                *o = uk
                    .checked_mul(*ck)
                    .and_then(|p| o.checked_add(p))
                    .ok_or_else(overflow)?;
            }
        }
        out.push(BoxPoint { coeffs: orig, coords });
    }
    Ok(out)
}
