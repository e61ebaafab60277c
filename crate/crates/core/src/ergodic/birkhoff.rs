//! Time averages of indicator observables along `a_t x_0`.
//!
//! On each unit window `[k, k+1]` the lattice is enumerated once at time `k`
//! in a box containing every vector that can become short before `k + 1`.
//! For a single vector `v` the set of `s` with `||a_s v|| < rho` is an
//! interval (the norm is a convex function of `s` in logarithmic scale), so
//! the times outside the observable's set are an explicit union of
//! intervals.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::reduce::DEFAULT_NODE_BUDGET;
use crate::lattice::{FlowParams, LatticePoint, UnimodularLattice};

/// Largest admissible Riemann step.
pub const MAX_DT: f64 = 0.05;

/// Default Riemann step.
pub const DEFAULT_DT: f64 = 0.01;

/// Timing uncertainty below which a grid point is treated as a boundary tie.
const TIME_TOL: f64 = 1e-9;

/// Indicator observables on the space of lattices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Observable {
    /// `chi_K(eps)`: no nonzero vector of sup norm below `eps`.
    ChiK { eps: f64 },
    /// `chi_C(z)`: `Delta <= z`, i.e. no nonzero vector of Euclidean norm
    /// below `e^(-z)`.
    ChiC { z: f64 },
}

impl Observable {
    fn radius(&self) -> f64 {
        match *self {
            Observable::ChiK { eps } => eps,
            Observable::ChiC { z } => (-z).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Observable::ChiK { eps } if !(eps > 0.0 && eps.is_finite()) => {
                Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")))
            }
            Observable::ChiC { z } if !z.is_finite() => Err(Error::InvalidArgument(format!("invalid z = {z}"))),
            _ => Ok(()),
        }
    }

    pub fn id(&self) -> String {
        match *self {
            Observable::ChiK { eps } => format!("chi_K({eps})"),
            Observable::ChiC { z } => format!("chi_C({z})"),
        }
    }
}

/// An open time interval with the uncertainty of its endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Span {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

/// `{s in [0,1] : max_j |c_j| e^(e_j s) < rho}`.
fn sup_span(c: &[f64], ex: &[f64], rho: f64) -> Option<(f64, f64)> {
    let ln_rho = rho.ln();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for (x, e) in c.iter().zip(ex) {
        let l = x.abs().ln();
        if *e == 0.0 {
            if l >= ln_rho {
                return None;
            }
        } else if *e > 0.0 {
            hi = hi.min((ln_rho - l) / e);
        } else {
            lo = lo.max((ln_rho - l) / e);
        }
    }
    (lo < hi).then_some((lo, hi))
}

/// `{s in [0,1] : sum_j c_j^2 e^(2 e_j s) < rho^2}`.
fn euclidean_span(c: &[f64], ex: &[f64], rho: f64) -> Option<(f64, f64)> {
    let g = |s: f64| c.iter().zip(ex).map(|(x, e)| x * x * (2.0 * e * s).exp()).sum::<f64>();
    let r2 = rho * rho;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if g(m1) < g(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let s_min = 0.5 * (a + b);
    if g(s_min) >= r2 {
        return None;
    }
    let root = |mut inside: f64, mut outside: f64| {
        for _ in 0..100 {
            let m = 0.5 * (inside + outside);
            if g(m) < r2 {
                inside = m;
            } else {
                outside = m;
            }
        }
        0.5 * (inside + outside)
    };
    let lo = if g(0.0) < r2 { 0.0 } else { root(s_min, 0.0) };
    let hi = if g(1.0) < r2 { 1.0 } else { root(s_min, 1.0) };
    (lo < hi).then_some((lo, hi))
}

fn span_of(pt: &LatticePoint, ex: &[f64], obs: &Observable) -> Option<Span> {
    let rho = obs.radius();
    let (lo, hi) = match obs {
        Observable::ChiK { .. } => sup_span(&pt.coords, ex, rho)?,
        Observable::ChiC { .. } => euclidean_span(&pt.coords, ex, rho)?,
    };
    let e_min = ex
        .iter()
        .fold(f64::INFINITY, |m, e| if *e != 0.0 { m.min(e.abs()) } else { m });
    let rel = pt
        .coords
        .iter()
        .zip(&pt.err)
        .filter(|(x, _)| **x != 0.0)
        .fold(0.0f64, |m, (x, e)| m.max(e / x.abs()));
    Some(Span {
        lo,
        hi,
        tol: TIME_TOL + rel / e_min,
    })
}

/// Sorted disjoint union of spans.
pub(crate) fn merge(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Span> = Vec::with_capacity(spans.len());
    for s in spans {
        match out.last_mut() {
            Some(last) if s.lo <= last.hi => {
                if s.hi > last.hi {
                    last.hi = s.hi;
                    last.tol = s.tol;
                }
            }
            _ => out.push(s),
        }
    }
    out
}

/// Length of `union ∩ [0, x]`.
pub(crate) fn measure_upto(union: &[Span], x: f64) -> f64 {
    union.iter().map(|s| (s.hi.min(x) - s.lo).max(0.0)).sum()
}

/// `1` inside the union, `0` outside, `1/2` within the endpoint uncertainty.
fn indicator(union: &[Span], s: f64) -> f64 {
    for sp in union {
        if (s - sp.lo).abs() <= sp.tol || (s - sp.hi).abs() <= sp.tol {
            return 0.5;
        }
        if s > sp.lo && s < sp.hi {
            return 1.0;
        }
    }
    0.0
}

/// Successive unit windows of an orbit.
pub(crate) struct OrbitWindows {
    current: UnimodularLattice,
    fp: FlowParams,
    exponents: Vec<f64>,
}

impl OrbitWindows {
    pub(crate) fn new(x0: &UnimodularLattice, fp: &FlowParams) -> Result<Self> {
        if fp.dim() != x0.dim() {
            return Err(Error::DimensionMismatch {
                expected: x0.dim(),
                found: fp.dim(),
            });
        }
        Ok(OrbitWindows {
            current: x0.clone(),
            fp: fp.clone(),
            exponents: fp.exponents(),
        })
    }

    pub(crate) fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// Points at the start of the current window that can have norm below
    /// `rho` during it, then moves to the next window.
    pub(crate) fn next_window(&mut self, rho: f64) -> Result<Vec<LatticePoint>> {
        let bounds: Vec<f64> = self.exponents.iter().map(|e| rho * (-e).max(0.0).exp()).collect();
        let pts = self.current.points_in_box(&bounds, DEFAULT_NODE_BUDGET)?;
        self.current = self.current.apply_flow(&self.fp, 1.0)?;
        Ok(pts)
    }
}

/// Averages of an observable for each horizon of a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicAverageCurve {
    pub observable: Observable,
    pub t_grid: Vec<f64>,
    pub dt: f64,
    /// Midpoint Riemann sums `(1/T) sum f(a_(t_m) x_0) dt`.
    pub averages: Vec<f64>,
    /// The same averages with exact integration over each window.
    pub exact_averages: Vec<f64>,
    /// Average at the longest horizon, used as a proxy for the limit.
    pub reference: f64,
    pub errors: Vec<f64>,
    /// Riemann points that fell within timing uncertainty of a boundary
    /// crossing and contributed `1/2`.
    pub half_steps: Vec<u64>,
}

/// Time averages of `obs` along `a_t x0` for every horizon in `t_grid`.
pub fn birkhoff_average(
    x0: &UnimodularLattice,
    fp: &FlowParams,
    obs: Observable,
    t_grid: &[f64],
    dt: f64,
) -> Result<ErgodicAverageCurve> {
    obs.validate()?;
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::InvalidArgument(format!(
            "dt must lie in (0, {MAX_DT}], got {dt}"
        )));
    }
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidArgument("T grid must be positive and increasing".into()));
    }
    let t_max = *t_grid.last().expect("nonempty grid");
    let steps: Vec<u64> = t_grid.iter().map(|t| ((t / dt).round() as u64).max(1)).collect();
    let n_steps = *steps.last().expect("nonempty grid");
    let windows = t_max.max(n_steps as f64 * dt).ceil() as u64;

    let mut orbit = OrbitWindows::new(x0, fp)?;
    let mut riemann = vec![0.0; t_grid.len()];
    let mut exact = vec![0.0; t_grid.len()];
    let mut halves = vec![0u64; t_grid.len()];
    let (mut sum, mut half_count, mut outside) = (0.0, 0u64, 0.0);
    let mut m = 0u64;
    let mut g = 0usize;
    let mut ge = 0usize;
    for k in 0..windows {
        let ex = orbit.exponents().to_vec();
        let pts = orbit.next_window(obs.radius())?;
        let union = merge(pts.iter().filter_map(|p| span_of(p, &ex, &obs)).collect());
        let kf = k as f64;
        while ge < t_grid.len() && t_grid[ge] <= kf + 1.0 {
            exact[ge] = 1.0 - (outside + measure_upto(&union, t_grid[ge] - kf)) / t_grid[ge];
            ge += 1;
        }
        outside += measure_upto(&union, 1.0);
        while m < n_steps {
            let t = (m as f64 + 0.5) * dt;
            if t >= kf + 1.0 {
                break;
            }
            let ind = indicator(&union, t - kf);
            if ind == 0.5 {
                half_count += 1;
            }
            sum += 1.0 - ind;
            m += 1;
            while g < steps.len() && steps[g] == m {
                riemann[g] = sum / m as f64;
                halves[g] = half_count;
                g += 1;
            }
        }
    }
    let reference = *riemann.last().expect("nonempty grid");
    Ok(ErgodicAverageCurve {
        observable: obs,
        t_grid: t_grid.to_vec(),
        dt,
        errors: riemann.iter().map(|a| (a - reference).abs()).collect(),
        averages: riemann,
        exact_averages: exact,
        reference,
        half_steps: halves,
    })
}
