//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAIL` are reported but do not fail the run.

use std::f64::consts::{LN_2, PI};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rug::Integer;
use wba_core::best_approx::{
    enumerate_best_approx_bruteforce, enumerate_best_approx_fast, prefix_equivalent, BestApproxSequence,
};
use wba_core::ergodic::{birkhoff_average, cusp_scaling, estimate_levy, log_grid, sample_theta, Observable};
use wba_core::lattice::theta_lattice::needed_bits;
use wba_core::lattice::{cross_section_visits, lambda1_sup, lambda1_w, make_theta_lattice};
use wba_core::section_mc::{calibration_from_d1, estimate_b_probability};
use wba_core::{FlowParams, ThetaVector, WeightVector};

const EXPECTED_FAIL: &[u32] = &[9];

const LEVY_D1: f64 = PI * PI / (12.0 * LN_2);

/// Quantities gathered across criteria.
#[derive(Default)]
struct Shared {
    betas_checked: usize,
    beta_violations: usize,
    max_b_visits: usize,
    orbits: usize,
    levy_d2: Option<f64>,
}

impl Shared {
    fn check_betas(&mut self, seq: &BestApproxSequence) {
        let mut bad = usize::from(seq.check_minkowski().is_err());
        for b in seq.betas() {
            self.betas_checked += 1;
            if !(b.hi().to_f64() > 0.0 && b.lo().to_f64() <= 1.0) {
                bad += 1;
            }
        }
        self.beta_violations += bad;
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn weights(list: &[(u64, u64)]) -> WeightVector {
    WeightVector::new(list).unwrap()
}

fn theta(d: usize, bits: u32, seed: u64, k: u64) -> Arc<ThetaVector> {
    Arc::new(sample_theta(d, bits, seed, k).unwrap())
}

/// Denominators of the convergents of `a / n`, without repeats.
fn cf_denominators(a: &Integer, n: &Integer) -> Vec<Integer> {
    let (mut num, mut den) = (a.clone(), n.clone());
    let (mut k0, mut k1) = (Integer::from(1), Integer::from(0));
    let mut out: Vec<Integer> = Vec::new();
    while den != 0 {
        let (quot, rem) = num.div_rem_floor(den.clone());
        let k = quot * &k1 + &k0;
        (k0, k1) = (k1, k.clone());
        if out.last() != Some(&k) {
            out.push(k);
        }
        num = den;
        den = rem;
    }
    out
}

fn cf_reduction(sh: &mut Shared) -> Outcome {
    let w = WeightVector::equal(1);
    let q_max = Integer::from(1_000_000);
    let mut mismatches = 0;
    let mut records = 0;
    for k in 0..200 {
        let th = theta(1, 256, 1, k);
        let seq = enumerate_best_approx_fast(th.clone(), &w, 1000, 1e6f64.ln() + 1.0, 4096).unwrap();
        sh.check_betas(&seq);
        let got: Vec<Integer> = seq.q_values().into_iter().filter(|q| *q <= q_max).collect();
        let want: Vec<Integer> = cf_denominators(&th.numer()[0], th.den())
            .into_iter()
            .filter(|q| *q <= q_max)
            .collect();
        records += want.len();
        mismatches += usize::from(got != want);
    }
    outcome(
        mismatches == 0,
        format!("200 theta, {records} records, {mismatches} mismatching sequences"),
    )
}

fn levy_d1(_: &mut Shared) -> Outcome {
    let est = estimate_levy(&WeightVector::equal(1), 100, 200, 7, 8192).unwrap();
    let rel = (est.l_hat - LEVY_D1).abs() / LEVY_D1;
    outcome(
        rel < 0.01,
        format!(
            "L = {:.4} +- {:.4}, target {LEVY_D1:.5}, relative error {:.2}%",
            est.l_hat,
            est.l_hat_stderr,
            100.0 * rel
        ),
    )
}

fn minkowski(sh: &mut Shared) -> Outcome {
    let configs = [
        WeightVector::equal(1),
        WeightVector::equal(2),
        weights(&[(3, 4), (1, 4)]),
        WeightVector::equal(3),
        weights(&[(1, 2), (1, 3), (1, 6)]),
    ];
    for (c, w) in configs.iter().enumerate() {
        for k in 0..20 {
            let th = theta(w.dim(), 4096, 3 + c as u64, k);
            let seq = enumerate_best_approx_fast(th, w, 200, f64::INFINITY, 8192).unwrap();
            sh.check_betas(&seq);
        }
    }
    outcome(
        sh.beta_violations == 0,
        format!(
            "{} values of beta checked, {} outside (0, 1]",
            sh.betas_checked, sh.beta_violations
        ),
    )
}

fn correspondence(sh: &mut Shared) -> Outcome {
    let configs = [
        WeightVector::equal(2),
        weights(&[(2, 3), (1, 3)]),
        weights(&[(3, 4), (1, 4)]),
    ];
    let t = 40.0;
    let (mut set_fail, mut prefix_fail, mut compared) = (0, 0, 0);
    for (c, w) in configs.iter().enumerate() {
        for k in 0..50 {
            let th = theta(2, 1024, 4 + c as u64, k);
            let report = cross_section_visits(th.clone(), w, t, 8192).unwrap();
            sh.max_b_visits = sh.max_b_visits.max(report.max_b_visits_per_unit);
            sh.orbits += 1;
            let seq = enumerate_best_approx_fast(th, w, 100_000, t, 8192).unwrap();
            sh.check_betas(&seq);
            let tail = |q: &Integer| w.exceeds_two_pow_inverse_min(q);
            let visits: Vec<Integer> = report.b_visits().map(|v| v.q.clone()).filter(tail).collect();
            let recs: Vec<Integer> = seq
                .q_values()
                .into_iter()
                .filter(|q| tail(q) && q.to_f64().ln() <= t)
                .collect();
            compared += recs.len();
            set_fail += usize::from(visits != recs);
            let all: Vec<Integer> = report.b_visits().map(|v| v.q.clone()).collect();
            prefix_fail += usize::from(prefix_equivalent(&all, &seq.q_values()).is_err());
        }
    }
    outcome(
        set_fail == 0 && prefix_fail == 0,
        format!(
            "150 instances, {compared} denominators compared, {set_fail} set mismatches, {prefix_fail} prefix failures"
        ),
    )
}

fn oracle_equivalence(sh: &mut Shared) -> Outcome {
    let configs = [
        vec![WeightVector::equal(1)],
        vec![
            WeightVector::equal(2),
            weights(&[(2, 3), (1, 3)]),
            weights(&[(3, 4), (1, 4)]),
        ],
        vec![
            WeightVector::equal(3),
            weights(&[(1, 2), (1, 3), (1, 6)]),
            weights(&[(3, 5), (1, 5), (1, 5)]),
        ],
    ];
    let q_max = 100_000u64;
    let bound = Integer::from(q_max);
    let (mut bad, mut records) = (0, 0);
    for i in 0..100u64 {
        let d = (i % 3) as usize;
        let w = &configs[d][(i / 3) as usize % configs[d].len()];
        let th = theta(d + 1, 256, 5, i);
        let fast = enumerate_best_approx_fast(th.clone(), w, 100_000, (q_max as f64).ln() + 1.0, 4096).unwrap();
        let brute = enumerate_best_approx_bruteforce(th, w, q_max).unwrap();
        sh.check_betas(&brute);
        let a: Vec<_> = fast.truncated(&bound).into_iter().map(|r| (&r.q, &r.p)).collect();
        let b: Vec<_> = brute.records.iter().map(|r| (&r.q, &r.p)).collect();
        records += b.len();
        bad += usize::from(a != b);
    }
    outcome(
        bad == 0,
        format!("100 instances, {records} records, {bad} discrepancies"),
    )
}

fn linkage(sh: &mut Shared) -> Outcome {
    let est = estimate_levy(&WeightVector::equal(2), 100, 500, 8, 8192).unwrap();
    sh.levy_d2 = Some(est.l_hat);
    let good = est.per_theta.iter().filter(|r| r.linkage_defect() < 0.02).count();
    let worst = est.per_theta.iter().map(|r| r.linkage_defect()).fold(0.0, f64::max);
    let n = est.per_theta.len();
    outcome(
        n == 100 && good * 100 >= 95 * n,
        format!("d = 2: {good}/{n} vectors below 0.02, worst defect {worst:.4}"),
    )
}

fn mc_d1(_: &mut Shared) -> Outcome {
    let est = estimate_b_probability(&WeightVector::equal(1), 1_000_000, 7).unwrap();
    let z = (est.p_hat - LN_2) / est.stderr;
    outcome(
        z.abs() <= 3.0,
        format!(
            "p = {:.6} +- {:.6}, {z:.2} stderr from ln 2, {} ambiguous",
            est.p_hat, est.stderr, est.ambiguous
        ),
    )
}

fn cross_pipeline(sh: &mut Shared) -> Outcome {
    let n = 1_000_000;
    let d1 = estimate_b_probability(&WeightVector::equal(1), n, 9).unwrap();
    let d2 = estimate_b_probability(&WeightVector::equal(2), n, 9).unwrap();
    let inv_mu = 1.0 / d2.section_measure(calibration_from_d1(d1.p_hat));
    let levy = sh.levy_d2.expect("linkage criterion runs first");
    let rel = (inv_mu - levy).abs() / levy;
    outcome(
        rel < 0.05,
        format!("1/mu = {inv_mu:.4}, L = {levy:.4}, relative gap {:.2}%", 100.0 * rel),
    )
}

fn lambda_comparison(_: &mut Shared) -> Outcome {
    let configs = [
        WeightVector::equal(1),
        WeightVector::equal(2),
        weights(&[(2, 3), (1, 3)]),
        weights(&[(3, 4), (1, 4)]),
    ];
    let mut parts = Vec::new();
    let mut total = 0;
    for (c, w) in configs.iter().enumerate() {
        let fp = FlowParams::vector(w.clone());
        let (w_first, w_last) = (w.value(0), w.value(w.dim() - 1));
        let (mut first, mut second) = (0, 0);
        for k in 0..1000u64 {
            let t = 0.01 * k as f64;
            let th = theta(w.dim(), 256, 10 + c as u64, k);
            let lat = make_theta_lattice(th, w, 4096).unwrap().apply_flow(&fp, t).unwrap();
            let l = lambda1_sup(&lat).unwrap();
            let lw = lambda1_w(&lat, w).unwrap();
            if l.lo().to_f64() > lw.hi().to_f64().powf(w_last) * (1.0 + 1e-12) {
                first += 1;
            }
            if lw.lo().to_f64() > l.hi().to_f64().powf(1.0 / w_first) * (1.0 + 1e-12) {
                second += 1;
            }
        }
        total += first + second;
        parts.push(format!("w = ({}): {first}/{second}", w.to_strings().join(",")));
    }
    outcome(
        total == 0,
        format!("violations first/second per config: {}", parts.join("; ")),
    )
}

fn temperedness(sh: &mut Shared) -> Outcome {
    let w = WeightVector::equal(1);
    for k in 0..20 {
        let report = cross_section_visits(theta(1, 1024, 11, k), &w, 60.0, 8192).unwrap();
        sh.max_b_visits = sh.max_b_visits.max(report.max_b_visits_per_unit);
        sh.orbits += 1;
    }
    outcome(
        sh.max_b_visits <= 10,
        format!(
            "max visits to B per unit time over {} orbits: {}",
            sh.orbits, sh.max_b_visits
        ),
    )
}

fn cusp(_: &mut Shared) -> Outcome {
    let w = WeightVector::equal(1);
    let t = 1e4;
    let bits = (needed_bits(t + 1.0, &w) + 64) as u32;
    let sample: Vec<_> = (0..20).map(|k| theta(1, bits, 12, k)).collect();
    let c = cusp_scaling(&FlowParams::vector(w), &sample, &log_grid(0.05, 0.5, 8), t, bits + 1024).unwrap();
    outcome(
        (1.5..=2.5).contains(&c.slope),
        format!("slope {:.3} over 20 theta at T = 1e4 (target 2)", c.slope),
    )
}

fn decay(_: &mut Shared) -> Outcome {
    let w = WeightVector::equal(1);
    let fp = FlowParams::vector(w.clone());
    let grid = [1e2, 1e4, 1e5];
    let bits = (needed_bits(grid[2] + 1.0, &w) + 64) as u32;
    let (mut early, mut late) = (0.0, 0.0);
    for k in 0..20 {
        let x0 = make_theta_lattice(theta(1, bits, 13, k), &w, bits + 1024).unwrap();
        let c = birkhoff_average(&x0, &fp, Observable::ChiK { eps: 0.5 }, &grid, 0.01).unwrap();
        early += (c.averages[0] - c.averages[2]).abs();
        late += (c.averages[1] - c.averages[2]).abs();
    }
    let ratio = early / late;
    outcome(ratio >= 3.0, format!("pooled error ratio {ratio:.2} over 20 theta"))
}

fn determinism(_: &mut Shared) -> Outcome {
    let runs: [&[&str]; 10] = [
        &["best-approx", "--d", "2", "--seed", "1", "--q-max", "100000"],
        &["best-approx-regular", "--d", "2", "--seed", "1", "--q-max", "100000"],
        &["cross-section", "--d", "2", "--seed", "1", "--t-budget", "15"],
        &["first-return", "--d", "2", "--seed", "1", "--t-budget", "15"],
        &[
            "levy",
            "--d",
            "2",
            "--seed",
            "1",
            "--n-theta",
            "10",
            "--n-records",
            "50",
            "--format",
            "json",
        ],
        &[
            "beta-dist",
            "--d",
            "2",
            "--seed",
            "1",
            "--n-theta",
            "10",
            "--n-records",
            "50",
        ],
        &[
            "mc-measure",
            "--d",
            "2",
            "--seed",
            "1",
            "--n-samples",
            "20000",
            "--calibrate",
        ],
        &["equidist", "--seed", "1", "--t-grid", "50,200", "--format", "json"],
        &["cusp-scaling", "--seed", "1", "--n-theta", "3", "--t-max", "200"],
        &["lattice-min", "--d", "2", "--seed", "1"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        let once = || {
            let out = Command::new(env!("CARGO_BIN_EXE_wba-lab")).args(args).output().unwrap();
            assert!(
                out.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            out.stdout
        };
        if once() != once() {
            differing.push(args[0]);
        }
    }
    outcome(
        differing.is_empty(),
        format!("10 subcommands run twice, differing: {differing:?}"),
    )
}

type Criterion = fn(&mut Shared) -> Outcome;

fn main() {
    let criteria: [(u32, &str, Criterion); 13] = [
        (1, "continued-fraction reduction", cf_reduction),
        (2, "Levy constant, d = 1", levy_d1),
        (4, "visits to B are best approximations", correspondence),
        (5, "fast and brute-force enumerators agree", oracle_equivalence),
        (6, "linkage of q_n and r_n growth", linkage),
        (3, "beta_n in (0, 1]", minkowski),
        (7, "Monte Carlo, d = 1", mc_d1),
        (8, "Monte Carlo against Levy, d = 2", cross_pipeline),
        (9, "lambda_1 comparison", lambda_comparison),
        (10, "temperedness", temperedness),
        (11, "cusp scaling", cusp),
        (12, "equidistribution decay", decay),
        (13, "CLI determinism", determinism),
    ];
    let mut shared = Shared::default();
    let mut results: Vec<(u32, bool, String)> = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run(&mut shared);
        let status = if o.pass { "PASS" } else { "FAIL" };
        let line = format!(
            "criterion {id:>2} {status}  {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        results.push((id, o.pass, line));
    }
    results.sort();
    for (_, _, line) in &results {
        println!("{line}");
    }
    let unexpected: Vec<u32> = results
        .iter()
        .filter(|(id, pass, _)| !pass && !EXPECTED_FAIL.contains(id))
        .map(|(id, _, _)| *id)
        .collect();
    for (id, pass, _) in &results {
        if *pass && EXPECTED_FAIL.contains(id) {
            println!("note: criterion {id} is listed as expected to fail but passed");
        }
    }
    let passed = results.iter().filter(|(_, p, _)| *p).count();
    println!(
        "acceptance: {passed}/{} passed, expected failures {EXPECTED_FAIL:?}",
        results.len()
    );
    if !unexpected.is_empty() {
        panic!("unexpected failures: {unexpected:?}");
    }
}
