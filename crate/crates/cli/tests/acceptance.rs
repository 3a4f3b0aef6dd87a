//! End-to-end acceptance run. Prints one `AC<n> PASS|FAIL` line per
//! criterion and exits non-zero unless exactly the known failures fail.

mod common;

use std::f64::consts::FRAC_PI_4;
use std::time::{Duration, Instant};

use common::*;
use kronmle::closedform::{
    block_pair, classify_2x2, critical_points_nonunique, g0_at_optimum, mle_m2_plus_1, TwoByTwoCase,
};
use kronmle::minrank::{r2, r2_closed, s2, s2_closed_form, SValue};
use kronmle::montecarlo::{standard_normal_matrix, standard_sample, trial_rng};
use kronmle::pencil::{canonical_pair, canonicalize_pair, DEFAULT_CANONICAL_TOL};
use kronmle::thresholds::{
    table1_embedded_csv, table1_lookup, theorem_values, thresholds, Source, Threshold,
};
use kronmle::{
    fit, geodesic, group_transform, log_likelihood, profile_objective, transport_psi2,
    DataSample64, FitStatus, FlipFlopConfig64, Normalization, PrecisionPair64, SpdMatrix64,
};
use nalgebra::DMatrix;
use rand_xoshiro::Xoshiro256PlusPlus;

/// Checks that are known to fail; see the project notes.
const EXPECTED_FAILURES: &[&str] = &["AC5 g"];

struct Check {
    id: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, id: &'static str, pass: bool, detail: String) {
        println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
        self.checks.push(Check { id, pass, detail });
    }
}

type Rng = Xoshiro256PlusPlus;

fn gaussian(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    standard_normal_matrix(rows, cols, rng)
}

fn random_spd(dim: usize, rng: &mut Rng) -> SpdMatrix64 {
    let z = gaussian(dim, dim, rng);
    SpdMatrix64::new(&z * z.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.2).unwrap()
}

fn random_sample(m1: usize, m2: usize, n: usize, rng: &mut Rng) -> DataSample64 {
    standard_sample(m1, m2, n, rng).unwrap()
}

fn canonical_sample(m1: usize, m2: usize) -> DataSample64 {
    let (a, b) = canonical_pair(m1, m2);
    DataSample64::new(vec![a, b]).unwrap()
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > top * 1e-9).count()
}

fn stacked(ys: &[&DMatrix<f64>], x: &DMatrix<f64>) -> DMatrix<f64> {
    let k = x.ncols();
    let mut m = DMatrix::zeros(ys[0].nrows(), ys.len() * k);
    for (i, y) in ys.iter().enumerate() {
        m.columns_mut(i * k, k).copy_from(&(*y * x));
    }
    m
}

fn max_fd_gradient(f: impl Fn(&SpdMatrix64) -> f64, psi: &SpdMatrix64, h: f64) -> f64 {
    let dim = psi.dim();
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in i..dim {
            if i == 0 && j == 0 {
                continue;
            }
            let mut e = DMatrix::zeros(dim, dim);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            let plus = SpdMatrix64::new(psi.matrix() + &e * h).unwrap();
            let minus = SpdMatrix64::new(psi.matrix() - &e * h).unwrap();
            worst = worst.max(((f(&plus) - f(&minus)) / (2.0 * h)).abs());
        }
    }
    worst
}

fn rel_dist(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn trace_normalized(m: &DMatrix<f64>) -> DMatrix<f64> {
    m / m.trace()
}

fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// `(N_b, N_e, N_u)` from the closed-form results, recomputed with
/// rational arithmetic in floating point; `None` when none applies.
fn theorem_oracle(m1: usize, m2: usize) -> Option<(usize, usize, usize)> {
    let ratio = m1 as f64 / m2 as f64;
    if m2 == 1 {
        return Some((m1, m1, m1));
    }
    if m1 == m2 {
        return Some((1, 1, 3));
    }
    if m1.is_multiple_of(m2) {
        let q = ratio as usize;
        return Some((q, q, q + 1));
    }
    if m1 < 2 * m2 {
        let e = if m2.is_multiple_of(m1 - m2) { 2 } else { 3 };
        return Some((e, e, if m1 == m2 + 1 { 2 } else { 3 }));
    }
    let r = (m1 % m2) as f64;
    let floor = ratio.floor();
    if floor > 1.0 + r * r / (m2 as f64 * (m2 as f64 - r)) {
        let v = floor as usize + 1;
        return Some((v, v, v));
    }
    None
}

fn ac1(suite: &mut Suite) {
    let (run, elapsed) = timed(|| kronmle(&["threshold", "--table", "10"]));
    let embedded = table1_embedded_csv();
    let rows = run.stdout.lines().count();
    suite.record(
        "AC1 table",
        run.code == 0 && run.stdout == embedded && rows == 111,
        format!("{rows} lines, byte-identical: {}", run.stdout == embedded),
    );

    let mut checked = 0;
    let mut mismatches = Vec::new();
    for line in run.stdout.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (m1, m2): (usize, usize) = (f[1].parse().unwrap(), f[2].parse().unwrap());
        let Some((nb, ne, nu)) = theorem_oracle(m1, m2) else {
            continue;
        };
        let want = if f[0] == "n_u" { nu } else { ne };
        assert_eq!(nb, ne);
        checked += 1;
        if f[3] != want.to_string() {
            mismatches.push(format!("{}({m1},{m2})={} vs {want}", f[0], f[3]));
        }
    }
    suite.record(
        "AC1 theorems",
        mismatches.is_empty(),
        format!("{checked} theorem cells recomputed {mismatches:?}"),
    );
    suite.record(
        "AC1 time",
        elapsed < Duration::from_secs(1),
        format!("{elapsed:?} < 1s"),
    );
}

/// `S₂` for `m₁ = 2..17`, `m₂ = 2..min(m₁, 16)`; `-` is a blank cell.
const PUBLISHED_S2: &str = "\
0|2
1 0
0 1 0
- -1 1 0
- 0 0 1 0
- - -2 -1 1 0
- - 0 -2 0 1 0
- - - -3 0 -1 1 0
- - - 0 -4 -2 0 1 0
- - - - -4 -3 -2 -1 1 0
- - - - 0 -6 0 0 0 1 0
- - - - - -5 -6 -3 -2 -1 1 0
- - - - - 0 -8 -4 -4 -2 0 1 0
- - - - - - -6 -9 0 -3 0 -1 1 0
- - - - - - 0 -10 -8 -4 0 -2 0 1 0
- - - - - - - -7 -12 -5 -6 -3 -2 -1 1";

fn ac2(suite: &mut Suite) {
    let mut expected = String::from("m1,m2,s2,verdict\n");
    for (i, line) in PUBLISHED_S2.lines().enumerate() {
        for (j, tok) in line.split_whitespace().enumerate() {
            let (value, verdict) = match tok {
                "-" => ("", "no_mle"),
                "0|2" => ("0|2", "non_unique|unique"),
                "0" => ("0", "non_unique"),
                t if t.parse::<i64>().unwrap() > 0 => (t, "unique"),
                t => (t, "no_mle"),
            };
            expected.push_str(&format!("{},{},{value},{verdict}\n", i + 2, j + 2));
        }
    }
    let (run, elapsed) = timed(|| kronmle(&["s2", "--table", "17"]));
    suite.record(
        "AC2 table",
        run.code == 0 && run.stdout == expected,
        format!(
            "{} cells match the published table",
            expected.lines().count() - 1
        ),
    );

    let mut disagreements = Vec::new();
    let mut shapes = 0;
    for m1 in 3..=40 {
        for m2 in (m1 / 2 + 1)..m1 {
            shapes += 1;
            for k in 1..=m2 {
                let (ip, closed) = (r2(m1, m2, k).unwrap().r, r2_closed(m1, m2, k).unwrap().r);
                if ip != closed {
                    disagreements.push(format!("r2({m1},{m2},{k}) {ip} vs {closed}"));
                }
            }
            let deficit = (1..m2)
                .map(|k| (m2 * r2(m1, m2, k).unwrap().r) as i64 - (m1 * k) as i64)
                .min()
                .unwrap();
            let closed = s2_closed_form(m1, m2).unwrap();
            if deficit != closed || s2(m1, m2).unwrap().value != SValue::Exact(closed) {
                disagreements.push(format!("S2({m1},{m2}) {deficit} vs {closed}"));
            }
        }
    }
    suite.record(
        "AC2 closed forms",
        disagreements.is_empty(),
        format!("{shapes} shapes with m1 <= 40 {disagreements:?}"),
    );
    suite.record(
        "AC2 time",
        elapsed < Duration::from_secs(1),
        format!("{elapsed:?} < 1s"),
    );
}

fn ac3(suite: &mut Suite) {
    let run = kronmle(&["minrank", "--m1", "5", "--m2", "3", "--k", "2"]);
    let cert = run.json();
    let witness: Vec<Vec<u8>> = serde_json::from_value(cert["witness"].clone()).unwrap();
    let zero_one = witness.iter().flatten().all(|&v| v <= 1);
    let x = DMatrix::from_fn(3, 2, |i, j| witness[j][i] as f64);
    let (y1, y2) = canonical_pair::<f64>(5, 3);
    let rank = numerical_rank(&stacked(&[&y1, &y2], &x));
    let pass = run.code == 0
        && cert["r"] == 3
        && cert["verified_rank"] == 3
        && zero_one
        && numerical_rank(&x) == 2
        && rank == 3;
    suite.record(
        "AC3",
        pass,
        format!(
            "r = {}, witness 0-1: {zero_one}, stacked rank {rank}",
            cert["r"]
        ),
    );
}

fn ac4(suite: &mut Suite) {
    let cases = [
        (5, "UniqueMax"),
        (6, "NonUniqueMax"),
        (8, "NonUniqueMax"),
        (7, "Diverged"),
    ];
    let files: Vec<String> = cases
        .iter()
        .map(|&(m1, _)| {
            let run = kronmle(&[
                "sample",
                "--m1",
                &m1.to_string(),
                "--m2",
                "4",
                "--canonical",
            ]);
            temp_file(&format!("acceptance_{m1}_4.json"), &run.stdout)
                .display()
                .to_string()
        })
        .collect();
    let (runs, elapsed) = timed(|| {
        files
            .iter()
            .map(|f| kronmle(&["fit", "--input", f]).json())
            .collect::<Vec<_>>()
    });
    let mut pass = true;
    let mut seen = Vec::new();
    for ((m1, want), report) in cases.iter().zip(&runs) {
        let iterations = report["iterations"].as_u64().unwrap();
        pass &= report["status"] == *want && iterations <= 500;
        seen.push(format!(
            "({m1},4) {} in {iterations}",
            report["status"].as_str().unwrap()
        ));
    }
    suite.record("AC4 statuses", pass, seen.join(", "));
    suite.record(
        "AC4 time",
        elapsed < Duration::from_secs(1),
        format!("{elapsed:?} < 1s"),
    );
}

fn ac5(suite: &mut Suite) {
    let s = canonical_sample(5, 4);
    let report = fit(&s, &FlipFlopConfig64::default()).unwrap();
    let got = trace_normalized(report.estimate.psi2.matrix());
    let want = trace_normalized(&DMatrix::from_diagonal(&nalgebra::dvector![
        1.0, 3.0, 3.0, 1.0
    ]));
    let err = rel_dist(&got, &want);
    suite.record(
        "AC5 psi2",
        report.status == FitStatus::UniqueMax && err <= 1e-6,
        format!("relative error {err:.2e}"),
    );

    let g = profile_objective(&s, &report.estimate.psi2).unwrap();
    let g0 = g0_at_optimum(4).unwrap();
    suite.record(
        "AC5 g",
        (g - g0).abs() <= 1e-8,
        format!("g at the limit {g:.10} vs g0_at_optimum(4) {g0:.10}"),
    );
}

#[allow(clippy::approx_constant)]
fn ac6(suite: &mut Suite) {
    let (run, elapsed) =
        timed(|| kronmle(&["montecarlo", "eig2x2", "--trials", "100000", "--seed", "42"]));
    let p = run.json()["estimate"].as_f64().unwrap();
    let band = 3.0 * (0.7854f64 * 0.2146 / 1e5).sqrt();
    suite.record(
        "AC6 estimate",
        (p - 0.7854).abs() <= band,
        format!("{p:.5} in 0.7854 +- {band:.4}"),
    );
    suite.record(
        "AC6 time",
        elapsed < Duration::from_secs(5),
        format!("{elapsed:?} < 5s"),
    );
}

fn ac7(suite: &mut Suite) {
    const TRIALS: u64 = 10_000;
    let config = FlipFlopConfig64 {
        max_iterations: 2_000_000,
        ..Default::default()
    };
    let (mut complex, mut unique, mut worst, mut misses) = (0, 0, 0.0f64, 0);
    for t in 0..TRIALS {
        let s = random_sample(2, 2, 2, &mut trial_rng(7, t));
        let class = classify_2x2(&s.matrices()[0], &s.matrices()[1]).unwrap();
        let report = fit(&s, &config).unwrap();
        if report.status == FitStatus::UniqueMax {
            unique += 1;
        }
        if class.case == TwoByTwoCase::Complex {
            complex += 1;
            let err = rel_dist(
                &trace_normalized(report.estimate.psi2.matrix()),
                class.mle_psi2.unwrap().matrix(),
            );
            worst = worst.max(err);
            if err > 1e-6 {
                misses += 1;
            }
        }
    }
    suite.record(
        "AC7 closed form",
        misses == 0,
        format!("{complex} complex trials, worst relative error {worst:.2e}"),
    );
    let p = 1.0 - FRAC_PI_4;
    let freq = unique as f64 / TRIALS as f64;
    let sigma = (p * (1.0 - p) / TRIALS as f64).sqrt();
    suite.record(
        "AC7 frequency",
        (freq - p).abs() <= 3.0 * sigma,
        format!("UniqueMax {freq:.4} vs {p:.4} +- {:.4}", 3.0 * sigma),
    );
}

fn scaling_invariance() -> (usize, usize) {
    let mut bad = 0;
    for t in 0..200 {
        let mut r = trial_rng(81, t);
        let (m1, m2, n) = (
            1 + t as usize % 4,
            1 + (t as usize / 4) % 4,
            1 + (t as usize / 16) % 3,
        );
        let s = random_sample(m1, m2, n, &mut r);
        let (p1, p2) = (random_spd(m1, &mut r), random_spd(m2, &mut r));
        let c = 10f64.powf(gaussian(1, 1, &mut r)[(0, 0)]);
        let base = log_likelihood(
            &s,
            &PrecisionPair64::new(p1.clone(), p2.clone(), Normalization::None),
        )
        .unwrap();
        let moved = log_likelihood(
            &s,
            &PrecisionPair64::new(p1.scaled(c), p2.scaled(1.0 / c), Normalization::None),
        )
        .unwrap();
        if (base - moved).abs() > 1e-9 * (1.0 + base.abs()) {
            bad += 1;
        }
    }
    (200, bad)
}

fn geodesic_convexity() -> (usize, usize) {
    let shapes = [
        (3, 2, 2),
        (4, 3, 2),
        (5, 4, 2),
        (6, 2, 3),
        (3, 3, 2),
        (4, 4, 1),
    ];
    let mut violations = 0;
    for trial in 0..1000u64 {
        let mut r = trial_rng(82, trial);
        let (m1, m2, n) = shapes[trial as usize % shapes.len()];
        let s = random_sample(m1, m2, n, &mut r);
        let (q0, q1) = (random_spd(m2, &mut r), random_spd(m2, &mut r));
        let (g0, g1) = (
            profile_objective(&s, &q0).unwrap(),
            profile_objective(&s, &q1).unwrap(),
        );
        for i in 1..10 {
            let t = i as f64 / 10.0;
            let gt = profile_objective(&s, &geodesic(&q0, &q1, t).unwrap()).unwrap();
            if gt > (1.0 - t) * g0 + t * g1 + 1e-8 {
                violations += 1;
            }
        }
    }
    (1000, violations)
}

fn surface_translation() -> (usize, usize) {
    let mut bad = 0;
    let mut tried = 0;
    for t in 0..200u64 {
        let mut r = trial_rng(83, t);
        let (m1, m2, n) = (4, 3, 2);
        let s = random_sample(m1, m2, n, &mut r);
        let (a, b) = (gaussian(m1, m1, &mut r), gaussian(m2, m2, &mut r));
        if kronmle::linalg::condition_number(&a) >= 1e3
            || kronmle::linalg::condition_number(&b) >= 1e3
        {
            continue;
        }
        tried += 1;
        let moved = group_transform(&s, &a, &b).unwrap();
        let (p, q) = (random_spd(m2, &mut r), random_spd(m2, &mut r));
        let lhs = profile_objective(&moved, &p).unwrap() - profile_objective(&moved, &q).unwrap();
        let rhs = profile_objective(&s, &transport_psi2(&b, &p).unwrap()).unwrap()
            - profile_objective(&s, &transport_psi2(&b, &q).unwrap()).unwrap();
        if (lhs - rhs).abs() >= 1e-7 * (1.0 + lhs.abs()) {
            bad += 1;
        }
    }
    (tried, bad)
}

/// Every closed-form critical point with `m₂ ≤ 8`, paired with its data.
fn critical_points() -> Vec<(DataSample64, SpdMatrix64)> {
    let mut r = trial_rng(84, 0);
    let mut out = Vec::new();
    for m in 1..=8 {
        out.push((canonical_sample(m + 1, m), mle_m2_plus_1::<f64>(m).unwrap()));
    }
    for m2 in 2..=8 {
        for m1 in m2 + 2..=2 * m2 {
            if m2 % (m1 - m2) != 0 {
                continue;
            }
            let mut c = vec![1.0];
            c.extend((1..m1 - m2).map(|_| (gaussian(1, 1, &mut r)[(0, 0)] * 1.5).exp()));
            let p = critical_points_nonunique(m1, m2, &c).unwrap();
            let (b1, b2) = block_pair::<f64>(m1, m2).unwrap();
            out.push((DataSample64::new(vec![b1, b2]).unwrap(), p.block));
            out.push((canonical_sample(m1, m2), p.stacked));
        }
    }
    out
}

fn critical_point_checks() -> (usize, f64, usize) {
    let points = critical_points();
    let mut r = trial_rng(85, 0);
    let (mut worst_grad, mut beaten) = (0.0f64, 0);
    for (s, phi) in &points {
        worst_grad = worst_grad.max(max_fd_gradient(
            |p| profile_objective(s, p).unwrap(),
            phi,
            1e-6,
        ));
        let best = profile_objective(s, phi).unwrap();
        for _ in 0..50 {
            if profile_objective(s, &random_spd(s.m2(), &mut r)).unwrap() < best - 1e-8 {
                beaten += 1;
            }
        }
    }
    (points.len(), worst_grad, beaten)
}

fn witness_checks() -> (usize, Vec<String>) {
    let mut count = 0;
    let mut bad = Vec::new();
    for m1 in 3..=20 {
        for m2 in (m1 / 2 + 1)..m1 {
            let (y1, y2) = canonical_pair::<f64>(m1, m2);
            for k in 1..=m2 {
                count += 1;
                let cert = r2(m1, m2, k).unwrap();
                let x = cert.witness_matrix::<f64>().transpose();
                let ok = cert.witness.iter().flatten().all(|&v| v <= 1)
                    && numerical_rank(&x) == k
                    && numerical_rank(&stacked(&[&y1, &y2], &x)) == cert.r
                    && cert.verified_rank == cert.r;
                if !ok {
                    bad.push(format!("({m1},{m2},{k})"));
                }
            }
        }
    }
    (count, bad)
}

fn canonicalization_checks() -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (i, &(m1, m2)) in [(5, 4), (7, 4), (9, 5), (11, 7)].iter().enumerate() {
        let (t1, t2) = canonical_pair::<f64>(m1, m2);
        for t in 0..100 {
            let mut r = trial_rng(86 + i as u64, t);
            let (y1, y2) = (gaussian(m1, m2, &mut r), gaussian(m1, m2, &mut r));
            match canonicalize_pair(&y1, &y2, DEFAULT_CANONICAL_TOL) {
                Ok(c) => {
                    let res = (&c.a * &y1 * &c.b - &t1)
                        .norm()
                        .max((&c.a * &y2 * &c.b - &t2).norm());
                    worst = worst.max(res);
                }
                Err(_) => failures += 1,
            }
        }
    }
    (worst, failures)
}

fn ac8(suite: &mut Suite) {
    let start = Instant::now();
    let (n, bad) = scaling_invariance();
    suite.record("AC8 scaling", bad == 0, format!("{bad}/{n} violations"));
    let (n, bad) = geodesic_convexity();
    suite.record(
        "AC8 convexity",
        bad == 0,
        format!("{bad} violations over {n} triples"),
    );
    let (n, bad) = surface_translation();
    suite.record(
        "AC8 translation",
        n >= 100 && bad == 0,
        format!("{bad}/{n} violations"),
    );
    let (n, grad, beaten) = critical_point_checks();
    suite.record(
        "AC8 critical points",
        grad <= 1e-4 && beaten == 0,
        format!("{n} points, max gradient {grad:.2e}, {beaten} beaten"),
    );
    let (n, bad) = witness_checks();
    suite.record(
        "AC8 witnesses",
        bad.is_empty(),
        format!("{n} certificates {bad:?}"),
    );
    let (worst, failures) = canonicalization_checks();
    suite.record(
        "AC8 canonicalization",
        worst <= 1e-8 && failures == 0,
        format!("worst residual {worst:.2e}, {failures} failures"),
    );
    let elapsed = start.elapsed();
    suite.record(
        "AC8 time",
        elapsed < Duration::from_secs(30),
        format!("{elapsed:?} < 30s"),
    );
}

fn ac9(suite: &mut Suite) {
    let mut embedded = 0;
    let mut pass = true;
    for m1 in 1..=10 {
        for m2 in 1..=m1 {
            if !theorem_values(m1, m2).is_empty() {
                continue;
            }
            embedded += 1;
            let report = thresholds(m1, m2, false).unwrap();
            let (nb, ne, nu) = table1_lookup(m1, m2).unwrap();
            pass &= report.source == Source::EmbeddedTable
                && report.n_b == Threshold::Exact(nb)
                && report.n_e == Threshold::Exact(ne)
                && report.n_u == Threshold::Exact(nu);
        }
    }
    let outside = thresholds(17, 6, false).unwrap();
    pass &= outside.source == Source::BoundsOnly && outside.n_u.exact().is_none();
    suite.record(
        "AC9",
        pass,
        format!(
            "{embedded} non-theorem cells read from the embedded table; (17,6) reports bounds only"
        ),
    );
}

fn main() {
    let mut suite = Suite::default();
    ac1(&mut suite);
    ac2(&mut suite);
    ac3(&mut suite);
    ac4(&mut suite);
    ac5(&mut suite);
    ac6(&mut suite);
    ac7(&mut suite);
    ac8(&mut suite);
    ac9(&mut suite);

    let unexpected: Vec<&Check> = suite
        .checks
        .iter()
        .filter(|c| c.pass == EXPECTED_FAILURES.contains(&c.id))
        .collect();
    for c in &unexpected {
        let what = if c.pass {
            "passed but is listed as a known failure"
        } else {
            "failed"
        };
        eprintln!("{} {what}: {}", c.id, c.detail);
    }
    let passed = suite.checks.iter().filter(|c| c.pass).count();
    println!(
        "{passed}/{} checks passed, known failures: {EXPECTED_FAILURES:?}",
        suite.checks.len()
    );
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
