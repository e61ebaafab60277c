//! One runner per subcommand, each producing a [`Report`].

use std::sync::Arc;

use serde_json::{json, Value};
use wba_core::best_approx::{
    enumerate_best_approx_fast, enumerate_regular_best_approx, ApproxKind, BestApproxSequence,
};
use wba_core::ergodic::{self, Observable, THETA_BITS};
use wba_core::lattice::theta_lattice::needed_bits;
use wba_core::lattice::{cross_section_visits, delta_fn, first_return, lambda1_sup, lambda1_w, make_theta_lattice};
use wba_core::section_mc::{
    calibration_from_d1, estimate_b_probability, sample_e_seeded, section_total_mass, unit_ball_volume, zeta,
};
use wba_core::{DyadicInterval, FlowParams, ThetaVector, UnimodularLattice, WeightVector};

use crate::config::{CommandKind, ObservableKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::Report;

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(x.to_string()), Value::Number)
}

fn text<T: ToString>(x: T) -> Value {
    Value::String(x.to_string())
}

fn interval_cells(iv: &DyadicInterval) -> [Value; 2] {
    [num(iv.to_f64()), num(iv.width_f64())]
}

/// The supplied `theta`, or stream 0 of the seeded sampler.
fn theta_for(cfg: &RunConfig, bits: u32) -> CliResult<Arc<ThetaVector>> {
    match (&cfg.theta_vector, cfg.seed) {
        (Some(t), _) => Ok(Arc::new(t.clone())),
        (None, Some(seed)) => Ok(Arc::new(ergodic::sample_theta(cfg.d, bits, seed, 0)?)),
        (None, None) => Err(CliError::config("need --theta or --seed")),
    }
}

/// `theta` in double precision together with where it came from.
fn theta_summary(rep: &mut Report, theta: &ThetaVector) -> CliResult<()> {
    rep.set("theta_approx", theta.to_f64())?;
    rep.set("theta_provenance", theta.provenance())?;
    rep.set("theta_bits", theta.precision_bits())
}

fn p_columns(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("p{i}")).collect()
}

/// Bits of a sampled `theta` that cover an orbit up to time `t`.
fn bits_for_time(t: f64, w: &WeightVector) -> u32 {
    u32::try_from(needed_bits(t, w) + 64)
        .unwrap_or(u32::MAX)
        .max(THETA_BITS)
}

pub fn run(cfg: &RunConfig) -> CliResult<Report> {
    use CommandKind as K;
    match cfg.subcommand {
        K::BestApprox => best_approx(cfg, ApproxKind::Weighted),
        K::BestApproxRegular => best_approx(cfg, ApproxKind::Regular),
        K::CrossSection => cross_section(cfg),
        K::FirstReturn => first_returns(cfg),
        K::Levy => levy(cfg),
        K::BetaDist => beta_dist(cfg),
        K::McMeasure => mc_measure(cfg),
        K::Equidist => equidist(cfg),
        K::CuspScaling => cusp(cfg),
        K::LatticeMin => lattice_min(cfg),
    }
}

fn best_approx(cfg: &RunConfig, kind: ApproxKind) -> CliResult<Report> {
    let w = &cfg.weight_vector;
    let theta = theta_for(cfg, THETA_BITS)?;
    let q_max = cfg.budgets.q_max.expect("resolved");
    let n_max = cfg.budgets.n_records.expect("resolved");
    let ln_q = (q_max as f64).ln();
    let t_budget = ln_q + 1e-12 * (1.0 + ln_q);
    let max_bits = cfg.precision.max_bits;
    let seq: BestApproxSequence = match kind {
        ApproxKind::Weighted => enumerate_best_approx_fast(theta, w, n_max, t_budget, max_bits)?,
        ApproxKind::Regular => enumerate_regular_best_approx(theta, w, n_max, t_budget, max_bits)?,
    };
    let mut cols = vec!["n".to_string()];
    cols.extend(p_columns(cfg.d));
    cols.extend(["q", "r", "r_width"].map(String::from));
    let mut rep = Report::new(&cols);
    let mut count = 0;
    for (n, rec) in seq.records.iter().enumerate() {
        if rec.q > q_max {
            break;
        }
        let mut row = vec![json!(n + 1)];
        row.extend(rec.p.iter().map(text));
        row.push(text(&rec.q));
        row.extend(interval_cells(&rec.r));
        rep.push(row);
        count += 1;
    }
    rep.set("records", count)?;
    rep.set("terminal", seq.terminal)?;
    if kind == ApproxKind::Weighted {
        rep.set("minkowski_bound_holds", seq.check_minkowski().is_ok())?;
    }
    theta_summary(&mut rep, &seq.theta)?;
    Ok(rep)
}

fn cross_section(cfg: &RunConfig) -> CliResult<Report> {
    let w = &cfg.weight_vector;
    let t_budget = cfg.budgets.t_budget.expect("resolved");
    let theta = theta_for(cfg, bits_for_time(t_budget, w))?;
    let report = cross_section_visits(theta.clone(), w, t_budget, cfg.precision.max_bits)?;
    let mut cols = vec!["t".to_string(), "q".to_string()];
    cols.extend(p_columns(cfg.d));
    cols.extend(["r", "r_width", "in_s1_sharp", "in_b"].map(String::from));
    let mut rep = Report::new(&cols);
    for v in &report.visits {
        let mut row = vec![num(v.t), text(&v.q)];
        row.extend(v.p.iter().map(text));
        row.extend(interval_cells(&v.r_of_visit));
        row.push(json!(v.in_s1_sharp));
        row.push(json!(v.in_b));
        rep.push(row);
    }
    rep.set("visits", report.visits.len())?;
    rep.set("b_visits", report.b_visits().count())?;
    rep.set("divergent", report.divergent)?;
    rep.set("max_b_visits_per_unit", report.max_b_visits_per_unit)?;
    theta_summary(&mut rep, &theta)?;
    Ok(rep)
}

fn first_returns(cfg: &RunConfig) -> CliResult<Report> {
    let w = &cfg.weight_vector;
    let t_budget = cfg.budgets.t_budget.expect("resolved");
    let max_bits = cfg.precision.max_bits;
    let theta = theta_for(cfg, bits_for_time(t_budget + 1.0, w))?;
    let report = cross_section_visits(theta.clone(), w, t_budget, max_bits)?;
    let mut rep = Report::new(&["t", "q", "t_return", "next_q", "f", "f_width"]);
    let mut truncated = false;
    for v in report.b_visits() {
        let fr = match first_return(v, theta.clone(), w, max_bits) {
            Ok(Some(fr)) => fr,
            Ok(None) => break,
            Err(wba_core::Error::PrecisionExhausted { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        if fr.next.t > t_budget {
            truncated = true;
            break;
        }
        let [f, fw] = interval_cells(&fr.f_value);
        rep.push(vec![num(v.t), text(&v.q), num(fr.t_return), text(&fr.next.q), f, fw]);
    }
    rep.set("returns", rep.rows.len())?;
    rep.set("truncated_at_budget", truncated)?;
    theta_summary(&mut rep, &theta)?;
    Ok(rep)
}

fn levy(cfg: &RunConfig) -> CliResult<Report> {
    let seed = cfg.seed.expect("resolved");
    let est = ergodic::estimate_levy(
        &cfg.weight_vector,
        cfg.budgets.n_theta.expect("resolved"),
        cfg.budgets.n_records.expect("resolved"),
        seed,
        cfg.precision.max_bits,
    )?;
    let mut rep = Report::new(&["stream", "ln_q_rate", "ln_r_rate", "slope_ln_q", "slope_ln_r"]);
    for r in &est.per_theta {
        rep.push(vec![
            json!(r.stream),
            num(r.ln_q_rate),
            num(r.ln_r_rate),
            num(r.slope_ln_q),
            num(r.slope_ln_r),
        ]);
    }
    rep.set("L_hat", est.l_hat)?;
    rep.set("L_hat_stderr", est.l_hat_stderr)?;
    rep.set("ln_r_rate", est.ln_r_rate)?;
    rep.set("mean_slope_ln_q", est.mean_slope_ln_q)?;
    rep.set("mean_slope_ln_r", est.mean_slope_ln_r)?;
    rep.set("visit_rate", est.visit_rate())?;
    rep.set("kept", est.per_theta.len())?;
    rep.set("dropped", est.dropped)?;
    Ok(rep)
}

fn beta_dist(cfg: &RunConfig) -> CliResult<Report> {
    let h = ergodic::beta_distribution(
        &cfg.weight_vector,
        cfg.budgets.n_theta.expect("resolved"),
        cfg.budgets.n_records.expect("resolved"),
        cfg.budgets.bins.expect("resolved"),
        cfg.seed.expect("resolved"),
        cfg.precision.max_bits,
    )?;
    let mut rep = Report::new(&["bin_lo", "bin_hi", "count", "ecdf"]);
    for (k, c) in h.counts.iter().enumerate() {
        rep.push(vec![num(h.edges[k]), num(h.edges[k + 1]), json!(c), num(h.ecdf[k])]);
    }
    rep.set("n_total", h.n_total)?;
    rep.set("ks_max", h.ks_max)?;
    rep.set("dropped", h.dropped)?;
    Ok(rep)
}

fn mc_measure(cfg: &RunConfig) -> CliResult<Report> {
    let w = &cfg.weight_vector;
    let seed = cfg.seed.expect("resolved");
    let n = cfg.budgets.n_samples.expect("resolved");
    let est = estimate_b_probability(w, n, seed)?;
    let calibration = if cfg.calibrate == Some(true) {
        let d1 = if cfg.d == 1 {
            est.clone()
        } else {
            estimate_b_probability(&WeightVector::equal(1), n, seed)?
        };
        calibration_from_d1(d1.p_hat)
    } else {
        1.0
    };
    let mu = est.section_measure(calibration);
    let mut rep = Report::new(&["d", "n_samples", "hits_b", "not_sharp", "ambiguous", "p_hat", "stderr"]);
    rep.push(vec![
        json!(est.d),
        json!(est.n_samples),
        json!(est.hits_b),
        json!(est.not_sharp),
        json!(est.ambiguous),
        num(est.p_hat),
        num(est.stderr),
    ]);
    rep.set("unit_ball_volume", unit_ball_volume(w).to_string())?;
    rep.set("zeta", zeta(cfg.d as u32 + 1))?;
    rep.set("section_total_mass", section_total_mass(w))?;
    rep.set("calibration", calibration)?;
    rep.set("mu_hat", mu)?;
    rep.set("inverse_mu_hat", 1.0 / mu)?;
    Ok(rep)
}

fn equidist(cfg: &RunConfig) -> CliResult<Report> {
    let w = &cfg.weight_vector;
    let grid = cfg.budgets.t_grid.clone().expect("resolved");
    let t_max = *grid.last().expect("nonempty");
    let theta = theta_for(cfg, bits_for_time(t_max + 1.0, w))?;
    let x0 = make_theta_lattice(theta.clone(), w, cfg.precision.max_bits)?;
    let obs = match cfg.observable.expect("resolved") {
        ObservableKind::ChiK => Observable::ChiK {
            eps: cfg.eps.expect("resolved"),
        },
        ObservableKind::ChiC => Observable::ChiC {
            z: cfg.z.expect("resolved"),
        },
    };
    let curve = ergodic::birkhoff_average(
        &x0,
        &FlowParams::vector(w.clone()),
        obs,
        &grid,
        cfg.budgets.dt.expect("resolved"),
    )?;
    let mut rep = Report::new(&["T", "average", "exact_average", "error", "half_steps"]);
    for (k, t) in grid.iter().enumerate() {
        rep.push(vec![
            num(*t),
            num(curve.averages[k]),
            num(curve.exact_averages[k]),
            num(curve.errors[k]),
            json!(curve.half_steps[k]),
        ]);
    }
    rep.set("observable", obs.id())?;
    rep.set("reference", curve.reference)?;
    theta_summary(&mut rep, &theta)?;
    Ok(rep)
}

fn cusp(cfg: &RunConfig) -> CliResult<Report> {
    let w = &cfg.weight_vector;
    let t = *cfg.budgets.t_grid.as_ref().and_then(|g| g.last()).expect("resolved");
    let seed = cfg.seed.expect("resolved");
    let bits = bits_for_time(t + 1.0, w);
    let sample = (0..cfg.budgets.n_theta.expect("resolved") as u64)
        .map(|k| Ok(Arc::new(ergodic::sample_theta(cfg.d, bits, seed, k)?)))
        .collect::<CliResult<Vec<_>>>()?;
    let eps = cfg.eps_grid.clone().expect("resolved");
    let c = ergodic::cusp_scaling(&FlowParams::vector(w.clone()), &sample, &eps, t, cfg.precision.max_bits)?;
    let mut rep = Report::new(&["eps", "fraction_outside"]);
    for r in &c.rows {
        rep.push(vec![num(r.eps), num(r.fraction_outside)]);
    }
    rep.set("slope", c.slope)?;
    rep.set("intercept", c.intercept)?;
    rep.set("T", t)?;
    Ok(rep)
}

fn lattice_min(cfg: &RunConfig) -> CliResult<Report> {
    let w = &cfg.weight_vector;
    let lattice = match (&cfg.basis, &cfg.theta_vector, cfg.seed) {
        (Some(cols), _, _) => UnimodularLattice::from_columns(cols)?,
        (None, Some(t), _) => make_theta_lattice(Arc::new(t.clone()), w, cfg.precision.max_bits)?,
        (None, None, Some(seed)) => sample_e_seeded(cfg.d, seed)?,
        (None, None, None) => return Err(CliError::config("need --basis, --theta or --seed")),
    };
    let mut rep = Report::new(&["quantity", "value", "width"]);
    for (name, iv) in [
        ("lambda1_sup", lambda1_sup(&lattice)?),
        ("lambda1_w", lambda1_w(&lattice, w)?),
        ("delta", delta_fn(&lattice)?),
    ] {
        let [v, wd] = interval_cells(&iv);
        rep.push(vec![text(name), v, wd]);
    }
    Ok(rep)
}
