//! The cross-section `S_1`, its sharp part `S_1^#`, the subset `B`, and
//! visits of the orbit `a_t Lambda_theta` to them.
//!
//! Classification of arbitrary lattices works in double precision with
//! explicit margins. Along `a_t Lambda_theta` a visit can only happen at
//! `t = ln q`, and there every membership test is decided exactly.

use std::sync::Arc;

use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::DyadicInterval;
use crate::lattice::minima::weighted_sup_norm;
use crate::lattice::reduce::DEFAULT_NODE_BUDGET;
use crate::lattice::theta_lattice::{LatticeVec, ThetaLattice};
use crate::lattice::{LatticePoint, UnimodularLattice};
use crate::quasinorm::{
    compare_scaled_exact, compare_scaled_residual_to_one, compare_scaled_residuals, ln_abs, ln_norm_residual,
    power_norm, residual_norm_interval,
};
use crate::serde_big;
use crate::theta::ThetaVector;
use crate::weights::WeightVector;

/// Relative width of the band around a boundary inside which double
/// precision classification refuses to decide.
pub const AMBIGUITY_TOL: f64 = 1e-9;

/// Relative inflation of every enumeration box.
const BOX_SLACK: f64 = 1.1;

/// Classification of a lattice with respect to `S_1`, `S_1^#` and `B`.
#[derive(Debug, Clone, PartialEq)]
pub enum SectionClass {
    NotInS1,
    S1NotSharp { members: usize },
    S1Sharp { v: LatticePoint, r: f64, in_b: bool },
}

impl SectionClass {
    pub fn in_b(&self) -> bool {
        matches!(self, SectionClass::S1Sharp { in_b: true, .. })
    }
}

fn x_norm(p: &LatticePoint, w: &WeightVector) -> (f64, f64) {
    let d = w.dim();
    let mut coords = p.coords[..d].to_vec();
    coords.push(0.0);
    let mut err = p.err[..d].to_vec();
    err.push(0.0);
    weighted_sup_norm(&coords, &err, w)
}

enum Side {
    Inside,
    Outside,
    Ambiguous,
}

/// Position of `value` (with error `err`) relative to the closed bound `bound`.
fn side(value: f64, err: f64, bound: f64) -> Side {
    let band = err + AMBIGUITY_TOL * bound.max(1e-300);
    if value <= bound - band {
        Side::Inside
    } else if value > bound + band {
        Side::Outside
    } else if err == 0.0 && value == bound {
        Side::Inside
    } else {
        Side::Ambiguous
    }
}

fn in_disk_f64(p: &LatticePoint, w: &WeightVector) -> Option<bool> {
    let d = w.dim();
    let y = p.coords[d];
    let on_plane = (y - 1.0).abs() <= 8.0 * p.err[d] + 1e-14;
    if !on_plane {
        if (y - 1.0).abs() <= AMBIGUITY_TOL && x_norm(p, w).0 <= 1.0 + AMBIGUITY_TOL {
            return None;
        }
        return Some(false);
    }
    let (xn, xe) = x_norm(p, w);
    match side(xn, xe, 1.0) {
        Side::Inside => Some(true),
        Side::Outside => Some(false),
        Side::Ambiguous => None,
    }
}

fn in_cylinder_f64(p: &LatticePoint, r: f64, w: &WeightVector) -> Option<bool> {
    let d = w.dim();
    let (xn, xe) = x_norm(p, w);
    match (side(p.coords[d].abs(), p.err[d], 1.0), side(xn, xe, r)) {
        (Side::Outside, _) | (_, Side::Outside) => Some(false),
        (Side::Inside, Side::Inside) => Some(true),
        _ => None,
    }
}

/// Classifies `L` with respect to `S_1`, `S_1^#` and `B`.
///
/// Decisions are taken in double precision with a margin. Inside the margin
/// a lattice given by exact generators is settled in rational arithmetic;
/// otherwise the call fails with [`Error::BoundaryAmbiguous`].
pub fn classify_section_point(lattice: &UnimodularLattice, w: &WeightVector) -> Result<SectionClass> {
    let n = lattice.dim();
    if w.dim() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: w.dim(),
        });
    }
    let d = n - 1;
    let bound = 1.0 + 1e-6;
    let pts: Vec<LatticePoint> = lattice
        .points_in_box(&vec![bound; n], DEFAULT_NODE_BUDGET)?
        .into_iter()
        .filter(LatticePoint::is_primitive)
        .collect();
    let exact = |p: &LatticePoint| lattice.exact_coords(p).ok_or(Error::BoundaryAmbiguous);

    let mut members: Vec<&LatticePoint> = Vec::new();
    for p in &pts {
        let inside = match in_disk_f64(p, w) {
            Some(b) => b,
            None => {
                let x = exact(p)?;
                x[d] == 1 && power_norm(&x[..d], w) <= 1
            }
        };
        if inside {
            members.push(p);
        }
    }
    match members.len() {
        0 => return Ok(SectionClass::NotInS1),
        1 => {}
        k => return Ok(SectionClass::S1NotSharp { members: k }),
    }
    let v = members[0];
    let r = x_norm(v, w).0;
    let mut in_b = true;
    for p in &pts {
        if p.same_line(v) {
            continue;
        }
        let inside = match in_cylinder_f64(p, r, w) {
            Some(b) => b,
            None => {
                let x = exact(p)?;
                let xv = exact(v)?;
                let one = Rational::from(1);
                Rational::from(x[d].abs_ref()) <= 1 && compare_scaled_exact(&one, &x[..d], &one, &xv[..d], w).is_le()
            }
        };
        if inside {
            in_b = false;
            break;
        }
    }
    Ok(SectionClass::S1Sharp { v: v.clone(), r, in_b })
}

/// A time `t = ln q` at which `a_t Lambda_theta` lies in `S_1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossSectionVisit {
    pub t: f64,
    #[serde(with = "serde_big::integer")]
    pub q: Integer,
    #[serde(with = "serde_big::integers")]
    pub p: Vec<Integer>,
    /// `r(Lambda) = q ||q theta - p||_w`.
    pub r_of_visit: DyadicInterval,
    pub in_s1_sharp: bool,
    pub in_b: bool,
}

impl CrossSectionVisit {
    /// Residual `p den - q numer` of the witness.
    pub fn residual(&self, theta: &ThetaVector) -> Vec<Integer> {
        LatticeVec::from_pq(self.p.clone(), self.q.clone(), theta).res
    }
}

/// All visits found on `(0, t_budget]`.
#[derive(Debug, Clone, Serialize)]
pub struct VisitReport {
    pub visits: Vec<CrossSectionVisit>,
    /// The orbit leaves every compact set (rational `theta` reached its
    /// denominator inside the budget).
    pub divergent: bool,
    /// Largest number of visits to `B` in a closed time interval of length one.
    pub max_b_visits_per_unit: usize,
    pub t_budget: f64,
}

impl VisitReport {
    pub fn b_visits(&self) -> impl Iterator<Item = &CrossSectionVisit> {
        self.visits.iter().filter(|v| v.in_b)
    }
}

fn floor_div(a: &Integer, b: &Integer) -> Integer {
    let (q, _) = a.clone().div_rem_floor(b.clone());
    q
}

fn gcd_with(p: &[Integer], q: &Integer) -> Integer {
    let mut g = q.clone().abs();
    for x in p {
        g.gcd_mut(x);
    }
    g
}

/// Enumerates the box `bounds` taken at time `s` using the lattice at its
/// current time, which should be within a few units of `s`.
fn enumerate_at(lat: &ThetaLattice, s: f64, bounds: &[f64]) -> Result<Vec<(LatticeVec, Vec<f64>)>> {
    let delta = s - lat.time();
    let w = lat.weights();
    let d = w.dim();
    let mut b: Vec<f64> = (0..d).map(|i| bounds[i] * (-w.value(i) * delta).exp()).collect();
    b.push(bounds[d] * delta.exp());
    lat.enumerate_box(&b, DEFAULT_NODE_BUDGET)
}

/// Exact classification of `a_t Lambda_theta` at `t = ln q`.
pub(crate) fn classify_at_q(lat: &ThetaLattice, q: &Integer) -> Result<Option<CrossSectionVisit>> {
    let theta = lat.theta();
    let w = lat.weights();
    let den = theta.den();
    let d = theta.dim();
    let base: Vec<Integer> = theta
        .numer()
        .iter()
        .map(|a| floor_div(&Integer::from(q * a), den))
        .collect();
    let exact: Vec<bool> = theta
        .numer()
        .iter()
        .zip(&base)
        .map(|(a, b)| Integer::from(q * a) == Integer::from(b * den))
        .collect();
    let mut members: Vec<LatticeVec> = Vec::new();
    for mask in 0u32..(1 << d) {
        if (0..d).any(|i| mask & (1 << i) != 0 && exact[i]) {
            continue;
        }
        let p: Vec<Integer> = (0..d)
            .map(|i| Integer::from(&base[i] + u32::from(mask & (1 << i) != 0)))
            .collect();
        let v = LatticeVec::from_pq(p, q.clone(), theta);
        if compare_scaled_residual_to_one(q, &v.res, den, w).is_gt() {
            continue;
        }
        if gcd_with(&v.p, q) == 1 {
            members.push(v);
        }
    }
    if members.is_empty() {
        return Ok(None);
    }
    members.sort_by(|a, b| a.p.cmp(&b.p));
    let sharp = members.len() == 1;
    let v = members.swap_remove(0);
    let t = ln_abs(q);
    let in_b = sharp && unique_in_cylinder(lat, &v, t)?;
    let r_of_visit =
        DyadicInterval::from_rational(&Rational::from(q), 128).mul(&residual_norm_interval(&v.res, den, w, 128));
    Ok(Some(CrossSectionVisit {
        t,
        q: v.q,
        p: v.p,
        r_of_visit,
        in_s1_sharp: sharp,
        in_b,
    }))
}

/// `C_(r) cap prim(a_t Lambda_theta) = {+-v}` at `t = ln q_v`.
fn unique_in_cylinder(lat: &ThetaLattice, v: &LatticeVec, t: f64) -> Result<bool> {
    if v.res.iter().all(|x| *x == 0) {
        return Ok(true);
    }
    let w = lat.weights();
    let den = lat.theta().den();
    let d = w.dim();
    let ln_r = ln_abs(&v.q) + ln_norm_residual(&v.res, ln_abs(den), w);
    let r = ln_r.exp();
    let mut bounds: Vec<f64> = (0..d).map(|i| (BOX_SLACK * r).powf(w.value(i))).collect();
    bounds.push(BOX_SLACK);
    let one = Integer::from(1);
    for (u, _) in enumerate_at(lat, t, &bounds)? {
        if u == *v || u.q > v.q {
            continue;
        }
        if compare_scaled_residuals(&one, &u.res, &one, &v.res, den, w).is_le() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Walks `a_t Lambda_theta` in windows of length one, reporting each
/// denominator `q` with `ln q` in the window at most once.
pub(crate) struct VisitScanner {
    lat: ThetaLattice,
    t0: f64,
    done_upto: f64,
    stop_after: Option<f64>,
}

impl VisitScanner {
    pub(crate) fn new(theta: Arc<ThetaVector>, w: &WeightVector, max_bits: u32, start: f64) -> Result<Self> {
        let mut lat = ThetaLattice::new(theta.clone(), w, max_bits)?;
        lat.advance_to(start.max(0.0))?;
        let stop_after = if theta.precision_bits().is_none() || theta.is_zero() {
            Some(ln_abs(&theta.reduced_denominator()) / w.min_value())
        } else {
            None
        };
        Ok(VisitScanner {
            lat,
            t0: start.max(0.0),
            done_upto: start.max(0.0),
            stop_after,
        })
    }

    pub(crate) fn time(&self) -> f64 {
        self.t0
    }

    /// Beyond this time the orbit has no more visits (rational `theta`).
    pub(crate) fn exhausted(&self) -> bool {
        self.stop_after.is_some_and(|s| self.t0 > s)
    }

    /// Visits with `ln q` in `(done, t0 + 1]`, in increasing `q`; advances one unit.
    pub(crate) fn next_window(&mut self) -> Result<Vec<CrossSectionVisit>> {
        let hi = self.t0 + 1.0;
        self.lat.check_precision(hi)?;
        let d = self.lat.weights().dim();
        let mut bounds = vec![BOX_SLACK; d];
        bounds.push(BOX_SLACK * std::f64::consts::E);
        let mut qs: Vec<Integer> = self
            .lat
            .enumerate_box(&bounds, DEFAULT_NODE_BUDGET)?
            .into_iter()
            .filter(|(v, _)| v.q > 0)
            .map(|(v, _)| v.q)
            .filter(|q| {
                let lq = ln_abs(q);
                lq > self.done_upto && lq <= hi
            })
            .collect();
        qs.sort();
        qs.dedup();
        let mut out = Vec::new();
        for q in qs {
            if q == 1 && self.done_upto <= 0.0 {
                continue;
            }
            if let Some(v) = classify_at_q(&self.lat, &q)? {
                out.push(v);
            }
        }
        self.done_upto = hi;
        self.t0 = hi;
        self.lat.advance_to(hi)?;
        Ok(out)
    }
}

/// Largest number of times in a closed interval of length one.
pub fn max_per_unit(times: &[f64]) -> usize {
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..times.len() {
        while times[hi] - times[lo] > 1.0 {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best
}

/// Every `t in (0, t_budget]` with `a_t Lambda_theta in S_1`, classified.
pub fn cross_section_visits(
    theta: Arc<ThetaVector>,
    w: &WeightVector,
    t_budget: f64,
    max_bits: u32,
) -> Result<VisitReport> {
    if theta.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: theta.dim(),
        });
    }
    let divergent =
        (theta.precision_bits().is_none() || theta.is_zero()) && ln_abs(&theta.reduced_denominator()) <= t_budget;
    let mut scanner = VisitScanner::new(theta, w, max_bits, 0.0)?;
    let mut visits = Vec::new();
    while scanner.time() < t_budget && !scanner.exhausted() {
        for v in scanner.next_window()? {
            if v.t <= t_budget {
                visits.push(v);
            }
        }
    }
    let b_times: Vec<f64> = visits.iter().filter(|v| v.in_b).map(|v| v.t).collect();
    Ok(VisitReport {
        max_b_visits_per_unit: max_per_unit(&b_times),
        visits,
        divergent,
        t_budget,
    })
}

/// Return data from one visit to `B` to the next.
#[derive(Debug, Clone, Serialize)]
pub struct FirstReturn {
    pub t_return: f64,
    pub next: CrossSectionVisit,
    /// `F = e^(t_return) r(Lambda) = q_next ||q theta - p||_w`.
    pub f_value: DyadicInterval,
}

/// The next visit to `B` after `visit`; `None` when there is none (the
/// witness of `visit` is an exact hit).
pub fn first_return(
    visit: &CrossSectionVisit,
    theta: Arc<ThetaVector>,
    w: &WeightVector,
    max_bits: u32,
) -> Result<Option<FirstReturn>> {
    if !visit.in_b {
        return Err(Error::InvalidArgument(
            "first return is defined from visits to B".into(),
        ));
    }
    let res = visit.residual(&theta);
    if res.iter().all(|x| *x == 0) {
        return Ok(None);
    }
    let den = theta.den().clone();
    let mut scanner = VisitScanner::new(theta, w, max_bits, visit.t)?;
    scanner.done_upto = visit.t;
    loop {
        if scanner.exhausted() {
            return Ok(None);
        }
        for next in scanner.next_window()? {
            if next.in_b && next.q > visit.q {
                let f_value = DyadicInterval::from_rational(&Rational::from(&next.q), 128)
                    .mul(&residual_norm_interval(&res, &den, w, 128));
                return Ok(Some(FirstReturn {
                    t_return: next.t - visit.t,
                    next,
                    f_value,
                }));
            }
        }
    }
}
