//! Fraction of orbit time spent outside `K_eps` as `eps` shrinks.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::birkhoff::{measure_upto, merge, OrbitWindows, Span};
use super::stats::linear_fit;
use crate::error::{Error, Result};
use crate::lattice::{make_theta_lattice, FlowParams};
use crate::theta::ThetaVector;

/// One row of the cusp table.
#[derive(Debug, Clone, Serialize)]
pub struct CuspRow {
    pub eps: f64,
    /// Pooled fraction of `[0, T]` with a nonzero vector of sup norm below `eps`.
    pub fraction_outside: f64,
    pub per_theta: Vec<f64>,
}

/// Fractions outside `K_eps` and their fitted log-log slope.
#[derive(Debug, Clone, Serialize)]
pub struct CuspScaling {
    pub t: f64,
    pub n_theta: usize,
    pub rows: Vec<CuspRow>,
    pub slope: f64,
    pub intercept: f64,
}

/// Time outside `K_eps` along `a_t Lambda_theta` over `[0, t]` for each `eps`.
pub fn time_outside(
    theta: Arc<ThetaVector>,
    fp: &FlowParams,
    eps_grid: &[f64],
    t: f64,
    max_bits: u32,
) -> Result<Vec<f64>> {
    let w = fp
        .weight_vector()
        .ok_or_else(|| Error::InvalidArgument("theta orbits need a weight-vector flow".into()))?;
    let x0 = make_theta_lattice(theta, w, max_bits)?;
    let mut orbit = OrbitWindows::new(&x0, fp)?;
    let ex = orbit.exponents().to_vec();
    let rho = eps_grid.iter().cloned().fold(0.0, f64::max);
    let mut out = vec![0.0; eps_grid.len()];
    let windows = t.ceil() as u64;
    for k in 0..windows {
        let pts = orbit.next_window(rho)?;
        let upto = (t - k as f64).min(1.0);
        for (acc, eps) in out.iter_mut().zip(eps_grid) {
            let ln_eps = eps.ln();
            let spans = pts
                .iter()
                .filter_map(|p| {
                    let (mut lo, mut hi) = (0.0f64, 1.0f64);
                    for (x, e) in p.coords.iter().zip(&ex) {
                        let bound = (ln_eps - x.abs().ln()) / e;
                        if *e > 0.0 {
                            hi = hi.min(bound);
                        } else {
                            lo = lo.max(bound);
                        }
                    }
                    (lo < hi).then_some(Span { lo, hi, tol: 0.0 })
                })
                .collect();
            *acc += measure_upto(&merge(spans), upto);
        }
    }
    Ok(out)
}

/// Pooled fraction of orbit time outside `K_eps` over a sample of `theta`.
pub fn cusp_scaling(
    fp: &FlowParams,
    theta_sample: &[Arc<ThetaVector>],
    eps_grid: &[f64],
    t: f64,
    max_bits: u32,
) -> Result<CuspScaling> {
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e > 0.0 && *e <= 0.5)) {
        return Err(Error::InvalidArgument("eps grid must lie in (0, 0.5]".into()));
    }
    if theta_sample.is_empty() || !(t > 0.0) {
        return Err(Error::InvalidArgument("need a nonempty sample and T > 0".into()));
    }
    if fp.exponents().contains(&0.0) {
        return Err(Error::InvalidArgument("flow exponents must be nonzero".into()));
    }
    let per_theta: Vec<Vec<f64>> = theta_sample
        .par_iter()
        .map(|th| time_outside(th.clone(), fp, eps_grid, t, max_bits))
        .collect::<Result<_>>()?;
    let n = theta_sample.len() as f64;
    let rows: Vec<CuspRow> = eps_grid
        .iter()
        .enumerate()
        .map(|(j, eps)| {
            let fr: Vec<f64> = per_theta.iter().map(|v| v[j] / t).collect();
            CuspRow {
                eps: *eps,
                fraction_outside: fr.iter().sum::<f64>() / n,
                per_theta: fr,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.fraction_outside > 0.0)
        .map(|r| (r.eps.ln(), r.fraction_outside.ln()))
        .unzip();
    let (slope, intercept) = if xs.len() >= 2 {
        linear_fit(&xs, &ys)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(CuspScaling {
        t,
        n_theta: theta_sample.len(),
        rows,
        slope,
        intercept,
    })
}

/// `n` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    (0..n)
        .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}
