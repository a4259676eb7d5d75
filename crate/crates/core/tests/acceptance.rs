//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Runs as a plain binary (`harness = false`): every criterion is evaluated
//! in sequence, a verdict line is printed for each, and the process exits
//! nonzero if any failed.

mod common;

use std::time::{Duration, Instant};

use ghhjb_core::harness::{
    build_circle_family, build_interval_family, emit_report, run_hopflax_stability,
    run_kantorovich_stability, strip_wall_ms, ConvergenceReport, ReportFormat, MONOTONE_SLACK,
    TOTAL_DECREASE,
};
use ghhjb_core::hopf_lax::{
    c_transform, double_transform, hj_residual, hopf_lax, Potential,
};
use ghhjb_core::kantorovich::{dual_value, solve_dual, w2_exact, Measure};
use ghhjb_core::maps::{epsilon_inverse, InverseBounds};
use ghhjb_core::metric::{make_circle, make_interval, make_sierpinski, SpaceRef};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, ok: bool, elapsed: Duration, limit_s: f64, detail: &str) -> bool {
    let within = elapsed.as_secs_f64() <= limit_s;
    let budget = if limit_s.is_finite() { format!(" of {limit_s}s") } else { String::new() };
    println!(
        "criterion {n}: {} ({:.2}s{budget}) {detail}",
        if ok && within { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok && within
}

fn centered_abs(space: &SpaceRef, length: f64) -> Potential {
    let c = space.coords().unwrap().to_vec();
    Potential::from_fn(space.clone(), |i| (c[i][0] - 0.5 * length).abs()).unwrap()
}

fn angle_sin(space: &SpaceRef) -> Potential {
    let c = space.coords().unwrap().to_vec();
    Potential::from_fn(space.clone(), |i| c[i][1]).unwrap()
}

/// `Q_t|x|` in closed form (Huber function).
fn huber(x: f64, t: f64) -> f64 {
    if x.abs() <= t {
        x * x / (2.0 * t)
    } else {
        x.abs() - t / 2.0
    }
}

fn criterion_1_duality() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let circle = make_circle(24).unwrap().into_ref();
    let gasket = make_sierpinski(2).unwrap().into_ref();
    let cases = std::iter::repeat(&circle).take(50).chain(std::iter::repeat(&gasket).take(20));
    for space in cases {
        let mu = common::random_measure(&mut rng, space, 0.3);
        let nu = common::random_measure(&mut rng, space, 0.3);
        let (w2, _) = w2_exact(&mu, &nu).unwrap();
        let sol = solve_dual(&mu, &nu).unwrap();
        let dv = dual_value(&sol.phi, &mu, &nu).unwrap();
        let rel = (0.5 * w2 * w2 - dv).abs() / 1f64.max(w2 * w2);
        worst = worst.max(rel);
    }
    verdict(
        1,
        worst <= 1e-9,
        start.elapsed(),
        30.0,
        &format!("70 instances, worst |W2^2/2 - dual| / max(1, W2^2) = {worst:.3e}"),
    )
}

fn criterion_2_inverse_bounds() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    let mut worst_ratio = 0.0f64;
    for _ in 0..100 {
        let ns = rng.gen_range(1..=20);
        let nt = rng.gen_range(1..=20);
        let s = common::random_graph_space(&mut rng, ns);
        let t = common::random_graph_space(&mut rng, nt);
        let f = common::random_map(&mut rng, &s, &t);
        let g = epsilon_inverse(&f).unwrap();
        let b = InverseBounds::measure(&f, &g);
        if !b.holds(1e-12) {
            failures += 1;
        }
        if b.epsilon > 0.0 {
            worst_ratio = worst_ratio.max(b.inverse.epsilon / (4.0 * b.epsilon));
        }
    }
    verdict(
        2,
        failures == 0,
        start.elapsed(),
        10.0,
        &format!("100 random maps, {failures} violations, max eps(f')/(4 eps) = {worst_ratio:.3}"),
    )
}

fn criterion_3_moreau_envelope() -> bool {
    let start = Instant::now();
    let length = 2.0;
    let space = make_interval(2001, length).unwrap().into_ref();
    let mesh = 1e-3;
    let g = centered_abs(&space, length);
    let coords = space.coords().unwrap().to_vec();
    let mut worst = 0.0f64;
    for t in [0.25, 0.5, 1.0] {
        let q = hopf_lax(&g, t).unwrap();
        for (i, c) in coords.iter().enumerate() {
            worst = worst.max((q.at(i) - huber(c[0] - 1.0, t)).abs());
        }
    }
    verdict(
        3,
        worst <= 2.0 * mesh,
        start.elapsed(),
        5.0,
        &format!("max |Q_t g - closed form| = {worst:.3e} (tolerance {})", 2.0 * mesh),
    )
}

fn hopflax_runs() -> (ConvergenceReport, ConvergenceReport) {
    let circle = build_circle_family(&[8, 16, 32, 64, 128, 256], 2048).unwrap();
    let rc = run_hopflax_stability(&circle, &angle_sin(&circle.limit), 1.0).unwrap();
    let interval = build_interval_family(&[9, 17, 33, 65, 129, 257], 2049, 2.0).unwrap();
    let ri = run_hopflax_stability(&interval, &centered_abs(&interval.limit, 2.0), 0.5).unwrap();
    (rc, ri)
}

fn stability_ok(r: &ConvergenceReport) -> (bool, String) {
    let e = r.sup_errors();
    let positive = e[0] > 0.0;
    let monotone = e.windows(2).all(|w| w[1] <= MONOTONE_SLACK * w[0]);
    let total = e[e.len() - 1] <= e[0] / TOTAL_DECREASE;
    (
        positive && monotone && total,
        format!(
            "errors {:?} (first > 0: {positive}, non-increasing within {MONOTONE_SLACK}x: {monotone}, last/first = {:.4})",
            e.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>(),
            e[e.len() - 1] / e[0]
        ),
    )
}

fn criterion_4_hopflax_stability() -> bool {
    let start = Instant::now();
    let (rc, ri) = hopflax_runs();
    let (okc, dc) = stability_ok(&rc);
    let (oki, di) = stability_ok(&ri);
    println!("{}", emit_report(&rc, ReportFormat::Table));
    println!("{}", emit_report(&ri, ReportFormat::Table));
    verdict(
        4,
        okc && oki && rc.passed() && ri.passed(),
        start.elapsed(),
        60.0,
        &format!("circle: {dc}; interval: {di}"),
    )
}

const KANTOROVICH_LEVELS: [usize; 4] = [9, 17, 33, 65];
const KANTOROVICH_REF: usize = 513;

fn kantorovich_run() -> ConvergenceReport {
    let family = build_interval_family(&KANTOROVICH_LEVELS, KANTOROVICH_REF, 2.0).unwrap();
    let mesh = 2.0 / (KANTOROVICH_REF - 1) as f64;
    // x = -0.5 and x = +0.5 in centered coordinates
    let a = (0.5 / mesh).round() as usize;
    let b = (1.5 / mesh).round() as usize;
    let mu = Measure::delta(family.limit.clone(), a).unwrap();
    let nu = Measure::delta(family.limit.clone(), b).unwrap();
    run_kantorovich_stability(&family, &mu, &nu, 0).unwrap()
}

fn criterion_5_kantorovich_stability() -> bool {
    let start = Instant::now();
    let r = kantorovich_run();
    println!("{}", emit_report(&r, ReportFormat::Table));
    let mesh_ref = 2.0 / (KANTOROVICH_REF - 1) as f64;
    let target = r.limit_half_w2_squared.unwrap();
    let mut ok = (target - 0.5).abs() <= 1e-12;
    let mut lines = vec![format!("reference W2^2/2 = {target}")];
    for (rec, k) in r.records.iter().zip(&r.kantorovich) {
        let err = (rec.dual_value.unwrap() - 0.5).abs();
        let budget = k.lipschitz.metric * (rec.epsilon + mesh_ref);
        let value_ok = err <= budget + 1e-12;
        let half_dsq_ok = k.lipschitz.half_dsq_within_one();
        let half_diam_ok = k.lipschitz.metric_within_half_diameter();
        ok &= value_ok && half_dsq_ok && half_diam_ok;
        lines.push(format!(
            "level {}: |dual - 0.5| = {err:.2e} <= {budget:.3e}: {value_ok}; Lip wrt d^2/2 = {:.3} <= 1: {half_dsq_ok}; Lip = {:.4} <= diam/2 = {:.4}: {half_diam_ok}",
            rec.level,
            k.lipschitz.half_dsq,
            k.lipschitz.metric,
            0.5 * k.lipschitz.diameter
        ));
    }
    let errs: Vec<f64> = r.kantorovich.iter().map(|k| k.value_error).collect();
    let converging = errs.windows(2).all(|w| w[1] <= MONOTONE_SLACK * w[0] + 1e-12);
    ok &= converging;
    lines.push(format!("value errors non-increasing: {converging}"));
    verdict(5, ok, start.elapsed(), 60.0, &lines.join("\n  "))
}

fn band_residual(n: usize) -> f64 {
    let length = 2.0;
    let space = make_interval(n, length).unwrap().into_ref();
    let mesh = length / (n - 1) as f64;
    let g = centered_abs(&space, length);
    let r = hj_residual(&g, 0.5, 1e-3, 5.0 * mesh).unwrap();
    let coords = space.coords().unwrap();
    (0..n)
        .filter(|&i| {
            let x = (coords[i][0] - 1.0).abs();
            (0.6..=0.9).contains(&x)
        })
        .map(|i| r.at(i).abs())
        .fold(0.0, f64::max)
}

fn criterion_6_hj_residual() -> bool {
    let start = Instant::now();
    let coarse = band_residual(2001);
    let fine = band_residual(4001);
    let ratio = coarse / fine;
    let small = coarse <= 0.05;
    let halves = (2.0 / 3.0..=6.0).contains(&ratio);
    verdict(
        6,
        small && halves,
        start.elapsed(),
        20.0,
        &format!(
            "band residual N=2001: {coarse:.3e} (<= 0.05: {small}); N=4001: {fine:.3e}; ratio {ratio:.3} within [2/3, 6]: {halves}"
        ),
    )
}

fn runner(seed: u64) -> TestRunner {
    TestRunner::new(Config {
        cases: 200,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    })
}

fn space_and_values() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (3usize..24).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(-3.0f64..3.0, n),
        )
    })
}

fn measure_from(space: &SpaceRef, raw: &[f64]) -> Measure {
    let w: Vec<f64> = raw.iter().map(|x| x.abs() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    Measure::new(space.clone(), w.iter().map(|x| x / s).collect()).unwrap()
}

fn criterion_7_property_suites() -> bool {
    let start = Instant::now();
    let mut results: Vec<(&str, Result<(), String>)> = Vec::new();
    let circle = |n: usize| make_circle(n).unwrap().into_ref();

    let r = runner(71).run(&(space_and_values(), 0.01f64..3.0, 0.01f64..3.0), |((n, g, _), s, t)| {
        let sp = circle(n);
        let g = Potential::new(sp, g).unwrap();
        let (s, t) = if s <= t { (s, t) } else { (t, s) };
        let qs = hopf_lax(&g, s).unwrap();
        let qt = hopf_lax(&g, t).unwrap();
        for x in 0..n {
            prop_assert!(qt.at(x) <= qs.at(x));
        }
        Ok(())
    });
    results.push(("Q_t monotone in t", r.map_err(|e| e.to_string())));

    let r = runner(72).run(&(space_and_values(), 0.01f64..3.0), |((n, g, h), t)| {
        let sp = circle(n);
        let g = Potential::new(sp.clone(), g).unwrap();
        let h = Potential::new(sp, h).unwrap();
        let lhs = hopf_lax(&g, t).unwrap().sup_distance(&hopf_lax(&h, t).unwrap()).unwrap();
        prop_assert!(lhs <= g.sup_distance(&h).unwrap() + 1e-12);
        Ok(())
    });
    results.push(("sup-norm contraction", r.map_err(|e| e.to_string())));

    let r = runner(73).run(&(space_and_values(), 0.01f64..3.0), |((n, g, _), t)| {
        let g = Potential::new(circle(n), g).unwrap();
        let q = hopf_lax(&g, t).unwrap();
        for x in 0..n {
            prop_assert!(q.at(x) <= g.at(x));
        }
        Ok(())
    });
    results.push(("Q_t g <= g", r.map_err(|e| e.to_string())));

    let r = runner(74).run(&(space_and_values(), 0.01f64..3.0), |((n, g, _), t)| {
        let g = Potential::new(circle(n), g).unwrap();
        let l = g.lipschitz_constant();
        let q = hopf_lax(&g, t).unwrap();
        for x in 0..n {
            prop_assert!(g.at(x) - q.at(x) <= l * l * t / 2.0 + 1e-12);
        }
        Ok(())
    });
    results.push(("g - Q_t g <= L^2 t / 2", r.map_err(|e| e.to_string())));

    let r = runner(75).run(&(space_and_values(), -5.0f64..5.0), |((n, g, w), c)| {
        let sp = circle(n);
        let phi = Potential::new(sp.clone(), g).unwrap();
        let mu = measure_from(&sp, &w);
        let nu = measure_from(&sp, &w.iter().rev().copied().collect::<Vec<_>>());
        let a = dual_value(&phi, &mu, &nu).unwrap();
        let b = dual_value(&phi.shifted(c), &mu, &nu).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        Ok(())
    });
    results.push(("dual shift invariance", r.map_err(|e| e.to_string())));

    let r = runner(76).run(&space_and_values(), |(n, g, w)| {
        let sp = circle(n);
        let phi = Potential::new(sp.clone(), g.clone()).unwrap();
        let mu = measure_from(&sp, &w);
        let nu = measure_from(&sp, &g);
        let (w2, _) = w2_exact(&mu, &nu).unwrap();
        prop_assert!(dual_value(&phi, &mu, &nu).unwrap() <= 0.5 * w2 * w2 + 1e-9);
        Ok(())
    });
    results.push(("weak duality", r.map_err(|e| e.to_string())));

    let r = runner(77).run(&space_and_values(), |(n, a, b)| {
        let sp = circle(n);
        let mu = measure_from(&sp, &a);
        let nu = measure_from(&sp, &b);
        let (_, plan) = w2_exact(&mu, &nu).unwrap();
        prop_assert!(plan.coupling().iter().all(|&p| p >= 0.0));
        prop_assert!(plan.marginal_error(&mu, &nu) <= 1e-9);
        Ok(())
    });
    results.push(("plan marginal feasibility", r.map_err(|e| e.to_string())));

    let r = runner(78).run(&space_and_values(), |(n, g, _)| {
        let phi = Potential::new(circle(n), g).unwrap();
        let once = double_transform(&phi);
        let twice = double_transform(&once);
        prop_assert!(once.sup_distance(&twice).unwrap() <= 1e-12);
        prop_assert!(c_transform(&once).sup_distance(&c_transform(&phi)).unwrap() <= 1e-9);
        Ok(())
    });
    results.push(("double transform idempotent", r.map_err(|e| e.to_string())));

    let failures: Vec<String> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    let names: Vec<&str> = results.iter().map(|(n, _)| *n).collect();
    verdict(
        7,
        failures.is_empty(),
        start.elapsed(),
        60.0,
        &format!("{} suites x 200 cases ({}); failures: {failures:?}", names.len(), names.join(", ")),
    )
}

fn criterion_8_determinism() -> bool {
    let start = Instant::now();
    let csv = |r: &ConvergenceReport| strip_wall_ms(&emit_report(r, ReportFormat::Csv));
    let (c1, i1) = hopflax_runs();
    let k1 = kantorovich_run();
    let (c2, i2) = hopflax_runs();
    let k2 = kantorovich_run();
    let same = csv(&c1) == csv(&c2) && csv(&i1) == csv(&i2) && csv(&k1) == csv(&k2);
    verdict(
        8,
        same,
        start.elapsed(),
        f64::INFINITY,
        "criteria 4 and 5 CSVs identical across two runs (wall_ms excluded)",
    )
}

fn main() -> std::process::ExitCode {
    let criteria: [fn() -> bool; 8] = [
        criterion_1_duality,
        criterion_2_inverse_bounds,
        criterion_3_moreau_envelope,
        criterion_4_hopflax_stability,
        criterion_5_kantorovich_stability,
        criterion_6_hj_residual,
        criterion_7_property_suites,
        criterion_8_determinism,
    ];
    let passed = criteria.iter().filter(|c| c()).count();
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        std::process::ExitCode::SUCCESS
    } else {
        std::process::ExitCode::FAILURE
    }
}
