//! Comparisons against independently computed reference values.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Integer, Rational};
use wba_core::best_approx::{enumerate_best_approx_fast, enumerate_regular_best_approx};
use wba_core::ergodic::{birkhoff_average, time_outside, Observable};
use wba_core::lattice::{delta_fn, lambda1_sup, lambda1_w, make_theta_lattice, SectionClass};
use wba_core::section_mc::{sample_modular_point, sample_section};
use wba_core::{FlowParams, ThetaVector, UnimodularLattice, WeightVector};

/// Convergents `(p_k, q_k)` of `a / n` by the Euclidean algorithm.
fn convergents(a: &Integer, n: &Integer) -> Vec<(Integer, Integer)> {
    let (mut num, mut den) = (a.clone(), n.clone());
    let (mut h0, mut h1) = (Integer::from(0), Integer::from(1));
    let (mut k0, mut k1) = (Integer::from(1), Integer::from(0));
    let mut out = Vec::new();
    while den != 0 {
        let (quot, rem) = num.div_rem_floor(den.clone());
        let h = Integer::from(&quot * &h1) + &h0;
        let k = quot * &k1 + &k0;
        (h0, h1) = (h1, h.clone());
        (k0, k1) = (k1, k.clone());
        out.push((h, k));
        num = den;
        den = rem;
    }
    out
}

fn random_theta(d: usize, bits: u32, rng: &mut ChaCha8Rng) -> Arc<ThetaVector> {
    Arc::new(ThetaVector::sample_uniform(d, bits, rng).unwrap())
}

#[test]
fn d1_records_are_continued_fraction_convergents() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w = WeightVector::equal(1);
    let q_max = Integer::from(1_000_000);
    for _ in 0..40 {
        let theta = random_theta(1, 256, &mut rng);
        let seq = enumerate_best_approx_fast(theta.clone(), &w, 100, 1e6f64.ln() + 1.0, 4096).unwrap();
        let mut expected: Vec<(Integer, Integer)> = convergents(&theta.numer()[0], theta.den())
            .into_iter()
            .filter(|(_, q)| *q <= q_max)
            .collect();
        expected.dedup_by(|b, a| a.1 == b.1);
        let got: Vec<&Integer> = seq.records.iter().map(|r| &r.q).filter(|q| **q <= q_max).collect();
        let want: Vec<&Integer> = expected.iter().map(|(_, q)| q).collect();
        assert_eq!(got, want);
        for (rec, (p, q)) in seq.records.iter().zip(&expected).skip(1) {
            assert_eq!(&rec.q, q);
            assert_eq!(&rec.p[0], p);
        }
    }
}

#[test]
fn d1_betas_match_convergent_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = WeightVector::equal(1);
    for _ in 0..10 {
        let theta = random_theta(1, 512, &mut rng);
        let seq = enumerate_best_approx_fast(theta.clone(), &w, 60, 200.0, 4096).unwrap();
        let th = theta.coord(0);
        let betas = seq.betas_f64();
        for (k, pair) in seq.records.windows(2).enumerate().skip(1) {
            let err = Rational::from(&th * &pair[0].q) - &pair[0].p[0];
            let exact_q = &pair[1].q * err.abs();
            let exact = exact_q.to_f64();
            assert!((betas[k] - exact).abs() <= 1e-12 * exact, "{} vs {exact}", betas[k]);
            assert!(seq.betas()[k].contains_rational(&exact_q));
        }
    }
}

#[test]
fn d1_weighted_and_regular_records_coincide() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let w = WeightVector::equal(1);
    for _ in 0..5 {
        let theta = random_theta(1, 512, &mut rng);
        let a = enumerate_best_approx_fast(theta.clone(), &w, 40, 60.0, 4096).unwrap();
        let b = enumerate_regular_best_approx(theta, &w, 40, 60.0, 4096).unwrap();
        let n = a.len().min(b.len());
        assert!(n >= 10);
        assert_eq!(a.q_values()[..n], b.q_values()[..n]);
    }
}

/// Random unimodular lattice close to the identity.
fn near_identity(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| f64::from(u8::from(i == j)) + rng.random_range(-0.3..0.3))
                    .collect()
            })
            .collect();
        let det = determinant(&cols);
        if det.abs() < 0.2 {
            continue;
        }
        let s = det.abs().powf(-1.0 / n as f64);
        for c in &mut cols {
            for x in c.iter_mut() {
                *x *= s;
            }
        }
        if det < 0.0 {
            for x in &mut cols[0] {
                *x = -*x;
            }
        }
        return cols;
    }
}

fn determinant(cols: &[Vec<f64>]) -> f64 {
    match cols.len() {
        2 => cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1],
        3 => {
            let (a, b, c) = (&cols[0], &cols[1], &cols[2]);
            a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1]) + c[0] * (a[1] * b[2] - a[2] * b[1])
        }
        _ => unreachable!(),
    }
}

/// Minimum of `norm` over nonzero combinations with coefficients in `[-k, k]`.
fn scan_min<F: Fn(&[f64]) -> f64>(cols: &[Vec<f64>], k: i64, norm: F) -> f64 {
    let n = cols.len();
    let mut best = f64::INFINITY;
    let mut c = vec![-k; n];
    loop {
        if c.iter().any(|x| *x != 0) {
            let v: Vec<f64> = (0..n).map(|i| (0..n).map(|j| c[j] as f64 * cols[j][i]).sum()).collect();
            best = best.min(norm(&v));
        }
        let mut i = 0;
        while i < n {
            c[i] += 1;
            if c[i] <= k {
                break;
            }
            c[i] = -k;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}

#[test]
fn minima_agree_with_coefficient_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let weights = [
        WeightVector::equal(1),
        WeightVector::equal(2),
        WeightVector::new(&[(2, 3), (1, 3)]).unwrap(),
    ];
    for w in &weights {
        let n = w.dim() + 1;
        for _ in 0..30 {
            let cols = near_identity(n, &mut rng);
            let lat = UnimodularLattice::from_columns(&cols).unwrap();
            let sup = scan_min(&cols, 6, |v| v.iter().fold(0.0, |m, x| m.max(x.abs())));
            let euc = scan_min(&cols, 6, |v| v.iter().map(|x| x * x).sum::<f64>().sqrt());
            let wsup = scan_min(&cols, 6, |v| {
                (0..n - 1).fold(v[n - 1].abs(), |m, i| m.max(v[i].abs().powf(1.0 / w.value(i))))
            });
            let tol = 1e-12;
            let l = lambda1_sup(&lat).unwrap();
            assert!((l.to_f64() - sup).abs() < tol, "{} vs {sup}", l.to_f64());
            let lw = lambda1_w(&lat, w).unwrap();
            assert!((lw.to_f64() - wsup).abs() < tol, "{} vs {wsup}", lw.to_f64());
            let delta = delta_fn(&lat).unwrap();
            assert!((delta.to_f64() + euc.ln()).abs() < tol);
        }
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn modular_sampler_matches_quadrature() {
    // E[1/y] = (3/pi) * int_{-1/2}^{1/2} int_{sqrt(1-x^2)}^inf y^-3 dy dx
    let expected = 3.0 / PI * simpson(|x| 0.5 / (1.0 - x * x), -0.5, 0.5, 2000);
    assert!((expected - 3.0 * 3f64.ln() / (2.0 * PI)).abs() < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let n = 100_000;
    let inv: Vec<f64> = (0..n).map(|_| 1.0 / sample_modular_point(&mut rng).1).collect();
    let mean = inv.iter().sum::<f64>() / n as f64;
    let var = inv.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected} (se {se})");
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let inside = (0..20_000).filter(|_| {
        let (x, y) = sample_modular_point(&mut rng);
        x.abs() <= 0.5 && x * x + y * y >= 1.0
    });
    assert_eq!(inside.count(), 20_000);
}

#[test]
fn section_samples_have_the_disk_vector() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for w in [WeightVector::equal(1), WeightVector::equal(2)] {
        for _ in 0..50 {
            let s = sample_section(&w, &mut rng).unwrap();
            assert!(s.v.iter().all(|x| x.abs() <= 1.0));
            let class = s.classification.unwrap();
            assert!(!matches!(class, SectionClass::NotInS1), "{class:?}");
        }
    }
}

/// For `d = 1` and `eps < 1/sqrt(2)` a unimodular lattice has at most one
/// primitive pair in the square of side `2 eps`, so Siegel's mean value
/// formula gives `mu(lambda_1 < eps) = 4 eps^2 / (2 zeta(2)) = 12 eps^2 / pi^2`.
fn cusp_mass(eps: f64) -> f64 {
    12.0 * eps * eps / (PI * PI)
}

#[test]
fn chi_k_average_approaches_siegel_value() {
    let w = WeightVector::equal(1);
    let fp = FlowParams::vector(w.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let mut pooled = 0.0;
    let n_theta = 4;
    for _ in 0..n_theta {
        let theta = random_theta(1, 8192, &mut rng);
        let lat = make_theta_lattice(theta, &w, 8192).unwrap();
        let c = birkhoff_average(&lat, &fp, Observable::ChiK { eps: 0.5 }, &[500.0, 2000.0], 0.01).unwrap();
        assert!(c
            .averages
            .iter()
            .chain(&c.exact_averages)
            .all(|a| (0.0..=1.0).contains(a)));
        assert!((c.averages[1] - c.exact_averages[1]).abs() < 5e-3);
        pooled += c.exact_averages[1] / n_theta as f64;
    }
    let expected = 1.0 - cusp_mass(0.5);
    assert!((pooled - expected).abs() < 0.02, "{pooled} vs {expected}");
}

#[test]
fn time_outside_matches_siegel_value() {
    let w = WeightVector::equal(1);
    let fp = FlowParams::vector(w.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let eps = [0.1, 0.3, 0.5];
    let mut pooled = [0.0; 3];
    let (n_theta, t) = (4, 2000.0);
    for _ in 0..n_theta {
        let theta = random_theta(1, 8192, &mut rng);
        let f = time_outside(theta, &fp, &eps, t, 8192).unwrap();
        for (acc, v) in pooled.iter_mut().zip(f) {
            *acc += v / t / n_theta as f64;
        }
    }
    for (e, got) in eps.iter().zip(pooled) {
        let want = cusp_mass(*e);
        assert!((got - want).abs() < 0.25 * want + 2e-3, "eps {e}: {got} vs {want}");
    }
}
