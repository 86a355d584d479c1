//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the report is printed in
//! order; the process exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::Rng;
use vcorr::kernel::{
    apply_tm, centered_cross_moment, fredholm_det_closed_form, fredholm_det_truncated,
    quadratic_form_x, EigenPair, GridSpec,
};
use vcorr::moments::{bracket_b, even_moment_from_integrals, weight_integral, ExtractionSpec};
use vcorr::montecarlo::{
    gen_walk, quantile_interval, simulate_thetas, stream_rng, MomentTable, SimConfig, ThetaSample,
};
use vcorr::quadrature::gauss_kronrod::{integrate_1d, Tolerance};
use vcorr::quadrature::{generating_rhs, second_moment, QuadratureSpec};
use vcorr::specialfun::{
    branches, df_dz, eval_f, MgfPoint, S_LOG_THRESHOLD, S_SERIES_THRESHOLD, T_SERIES_THRESHOLD,
};

const MU2: f64 = 0.240522;
const TABLE_DRAW_MU2: f64 = 0.235057;
/// Reference simulated moments of orders 4, 6, 8, 10.
const REFERENCE_EVEN: [(usize, f64); 4] = [(4, 0.109276), (6, 0.0609591), (8, 0.0378654), (10, 0.0251693)];

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("criterion {id:>2}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

struct Shared {
    sample: ThetaSample,
    table: MomentTable,
    elapsed: Duration,
}

fn shared_run() -> Shared {
    let cfg = SimConfig {
        n: 10_000,
        paths: 10_000,
        seed: 42,
        workers: 4,
        max_moment: 10,
        ..SimConfig::default()
    };
    let start = Instant::now();
    let sample = simulate_thetas(&cfg).expect("simulation");
    let table = MomentTable::from_samples(&sample.thetas, cfg.max_moment).expect("moments");
    Shared {
        sample,
        table,
        elapsed: start.elapsed(),
    }
}

fn c1(r: &mut Report) {
    let start = Instant::now();
    let res = second_moment(&QuadratureSpec::default());
    let elapsed = start.elapsed();
    match res {
        Ok(v) => r.line(
            1,
            (v.value - MU2).abs() <= 5e-4 && elapsed <= Duration::from_secs(10),
            format!("second moment {:.9} (err {:.1e}, tail {:.1e}) in {:.3}s", v.value, v.error_estimate, v.truncation_tail, elapsed.as_secs_f64()),
        ),
        Err(e) => r.line(1, false, format!("second moment failed: {e}")),
    }
}

fn c2(r: &mut Report, s: &Shared) {
    let m = s.table.get(2).unwrap();
    let ok_truth = (m.estimate - MU2).abs() <= 3.0 * m.std_error;
    let ok_draw = (m.estimate - TABLE_DRAW_MU2).abs() <= 3.0 * m.std_error;
    let ok_time = s.elapsed <= Duration::from_secs(120);
    r.line(
        2,
        ok_truth && ok_draw && ok_time,
        format!(
            "E[theta^2] = {:.6} +- {:.6}; |est - {MU2}| = {:.2} SE, |est - {TABLE_DRAW_MU2}| = {:.2} SE; {:.1}s at 4 workers",
            m.estimate,
            m.std_error,
            (m.estimate - MU2).abs() / m.std_error,
            (m.estimate - TABLE_DRAW_MU2).abs() / m.std_error,
            s.elapsed.as_secs_f64()
        ),
    );
}

fn c3(r: &mut Report, s: &Shared) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(k, reference) in &REFERENCE_EVEN {
        let m = s.table.get(k).unwrap();
        // The reference draw has the same sampling error as ours.
        let combined = m.std_error * std::f64::consts::SQRT_2;
        let z = (m.estimate - reference).abs() / combined;
        ok &= z <= 3.0;
        parts.push(format!("m{k} {:.5} ({z:.2})", m.estimate));
    }
    for k in [1, 3, 5, 7, 9] {
        let m = s.table.get(k).unwrap();
        let z = m.estimate.abs() / m.std_error;
        ok &= z <= 3.0;
        parts.push(format!("m{k} ({z:.2})"));
    }
    r.line(3, ok, format!("moments vs reference, in combined SE: {}", parts.join(", ")));
}

fn c4(r: &mut Report, s: &Shared) {
    match quantile_interval(&s.sample.thetas, 0.95) {
        Ok((lo, hi)) => r.line(
            4,
            (lo + 0.83).abs() <= 0.02 && (hi - 0.83).abs() <= 0.02,
            format!("middle 95% interval [{lo:.4}, {hi:.4}]"),
        ),
        Err(e) => r.line(4, false, format!("{e}")),
    }
}

fn c5(r: &mut Report, s: &Shared) {
    let spec = QuadratureSpec::default();
    let prop = second_moment(&spec).expect("second moment");
    let result = ExtractionSpec::default()
        .build(spec.u_max)
        .and_then(|t| t.u_integrals(40, &spec))
        .and_then(|ints| Ok((even_moment_from_integrals(1, &ints)?, even_moment_from_integrals(2, &ints)?)));
    match result {
        Ok((m1, m2)) => {
            let tails = m1.tail_estimate + m1.error_estimate + prop.error_estimate + prop.truncation_tail;
            let ok1 = (m1.value - prop.value).abs() <= 1e-3f64.max(tails);
            let mc = s.table.get(4).unwrap();
            let combined = (mc.std_error.powi(2) + (m2.tail_estimate + m2.error_estimate).powi(2)).sqrt();
            let ok2 = (m2.value - mc.estimate).abs() <= 3.0 * combined;
            r.line(
                5,
                ok1 && ok2,
                format!(
                    "series mu2 {:.7} vs double integral {:.7}; series mu4 {:.6} vs simulated {:.6} ({:.2} combined SE)",
                    m1.value,
                    prop.value,
                    m2.value,
                    mc.estimate,
                    (m2.value - mc.estimate).abs() / combined
                ),
            );
        }
        Err(e) => r.line(5, false, format!("series moments failed: {e}")),
    }
}

fn c6(r: &mut Report) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (b1, b2, a) in [(1.0, 1.0, 0.5), (3.0, 4.0, 0.5), (1.0, 0.0, 0.9)] {
        let p = MgfPoint::new(b1, b2, a).unwrap();
        let exact = fredholm_det_closed_form(&p);
        let rel = |n| (fredholm_det_truncated(&p, n).unwrap().value - exact).abs() / exact;
        let (e3, e4) = (rel(1_000), rel(10_000));
        ok &= e4 <= 1e-3 && e4 < e3;
        parts.push(format!("({b1},{b2},{a}) {e3:.1e} -> {e4:.1e}"));
    }
    r.line(6, ok, format!("relative error N=1e3 -> 1e4: {}", parts.join(", ")));
}

fn c7(r: &mut Report) {
    let cfg = SimConfig {
        n: 2048,
        paths: 100,
        seed: 2024,
        ..SimConfig::default()
    };
    let mut rel: Vec<f64> = (0..100)
        .map(|rep| {
            let pair = gen_walk(&cfg, rep).unwrap();
            let x = quadratic_form_x(&pair, 1, 2).unwrap();
            let y = centered_cross_moment(&pair, 1, 2).unwrap();
            (x - y).abs() / y.abs()
        })
        .collect();
    rel.sort_by(f64::total_cmp);
    let median = 0.5 * (rel[49] + rel[50]);
    r.line(7, median <= 1e-2, format!("median |X12 - Y12| / |Y12| = {median:.2e} over 100 pairs at m = 2048"));
}

fn c8(r: &mut Report, s: &Shared) {
    let z: f64 = 0.1;
    let spec = QuadratureSpec::default();
    let rhs = generating_rhs(z, &spec).expect("rhs");
    let mu2 = second_moment(&spec).expect("second moment").value;
    // z^{2n} / (2n) * (n!)^2 4^n / (2n)!
    let coef = |n: usize| {
        let mut c = 1.0;
        for j in 1..=n {
            c *= 4.0 * (j * j) as f64 / ((2 * j - 1) * (2 * j)) as f64;
        }
        z.powi(2 * n as i32) / (2 * n) as f64 * c
    };
    let mut lhs = coef(1) * mu2;
    let mut var = 0.0;
    for n in 2..=5 {
        let m = s.table.get(2 * n).unwrap();
        lhs += coef(n) * m.estimate;
        var += (coef(n) * m.std_error).powi(2);
    }
    let allowed = 1e-3 * rhs.value.abs() + 3.0 * var.sqrt() + rhs.error_estimate + rhs.truncation_tail;
    let diff = (lhs - rhs.value).abs();
    r.line(
        8,
        diff <= allowed,
        format!("z = 0.1: rhs {:.10} lhs {:.10}, relative {:.2e}", rhs.value, lhs, diff / rhs.value),
    );
}

fn c9(r: &mut Report) {
    let grid = GridSpec::new(4096).unwrap();
    let mut worst = 0.0f64;
    for n in 1..=5 {
        let e = EigenPair::new(n);
        let psi = grid.sample(|t| e.psi(t));
        let image = apply_tm(&psi, &grid).unwrap();
        for (t, p) in image.iter().zip(&psi) {
            worst = worst.max((t - e.lambda * p).abs());
        }
    }
    r.line(9, worst <= 1e-6, format!("max eigen residual {worst:.2e} for n <= 5 at m = 4096"));
}

fn c10(r: &mut Report, s: &Shared) {
    let mut rng = stream_rng(99, 0);
    let mut failures = Vec::new();

    let mut worst_fd = 0.0f64;
    for _ in 0..100 {
        let b1 = rng.random_range(0.2..5.0);
        let b2 = rng.random_range(0.2..5.0);
        let a = rng.random_range(0.05..0.9);
        let p = MgfPoint::new(b1, b2, a).unwrap();
        let h = 1e-5;
        let fd = (eval_f(&MgfPoint { a: a + h, ..p }) - eval_f(&MgfPoint { a: a - h, ..p })) / (2.0 * h);
        let d = df_dz(&p).unwrap();
        worst_fd = worst_fd.max((d - fd).abs() / d.abs());
    }
    if worst_fd > 1e-6 {
        failures.push(format!("dF/dz {worst_fd:.1e}"));
    }

    let mut worst_branch = 0.0f64;
    for (lo, hi, x) in [
        (branches::s_series as fn(f64) -> f64, branches::s_direct as fn(f64) -> f64, S_SERIES_THRESHOLD),
        (branches::s_direct, branches::s_log_space, S_LOG_THRESHOLD),
        (branches::t_series, branches::t_direct, T_SERIES_THRESHOLD),
    ] {
        worst_branch = worst_branch.max((lo(x) - hi(x)).abs() / hi(x).abs());
    }
    if worst_branch > 1e-12 {
        failures.push(format!("branch {worst_branch:.1e}"));
    }

    let mut worst_odd = 0.0f64;
    for i in 0..40 {
        for j in 1..20 {
            let u = 0.25 * i as f64;
            let v = 0.049 * j as f64;
            let b = bracket_b(u, v).unwrap();
            let nb = bracket_b(u, -v).unwrap();
            if b != 0.0 {
                worst_odd = worst_odd.max((b + nb).abs() / b.abs());
            }
        }
    }
    if worst_odd > 1e-13 {
        failures.push(format!("oddness {worst_odd:.1e}"));
    }

    let tol = Tolerance {
        rel_tol: 1e-13,
        abs_tol: 1e-300,
        max_evals: 1_000_000,
    };
    let mut worst_weight = 0.0f64;
    for n in 1..=5usize {
        for rr in n..=30usize {
            let binom: f64 = (1..n).map(|k| (rr - k) as f64 / k as f64).product();
            let f = |v: f64| (1.0 - v * v).powi(n as i32 - 1) * v.powi(2 * (rr - n) as i32);
            let q = binom * integrate_1d(f, 0.0, 1.0, &[], tol).unwrap().value;
            let w = weight_integral(n, rr).unwrap();
            worst_weight = worst_weight.max((q - w).abs() / w);
        }
    }
    if worst_weight > 1e-10 {
        failures.push(format!("weights {worst_weight:.1e}"));
    }

    let small = SimConfig {
        n: 500,
        paths: 400,
        seed: 5,
        ..SimConfig::default()
    };
    let one = simulate_thetas(&SimConfig { workers: 1, ..small }).unwrap();
    let many = simulate_thetas(&SimConfig { workers: 4, ..small }).unwrap();
    let spec = QuadratureSpec::default();
    let quad = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| second_moment(&spec).unwrap())
    };
    if one != many || quad(1) != quad(4) {
        failures.push("worker-count determinism".into());
    }
    if s.sample.thetas.iter().any(|t| t.abs() > 1.0) {
        failures.push("|theta| > 1".into());
    }

    r.line(
        10,
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "dF/dz fd {worst_fd:.1e}, branches {worst_branch:.1e}, oddness {worst_odd:.1e}, weights {worst_weight:.1e}, determinism ok, |theta| <= 1"
            )
        } else {
            format!("failed: {}", failures.join(", "))
        },
    );
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored.
    let mut report = Report { failures: 0 };
    c1(&mut report);
    let shared = shared_run();
    c2(&mut report, &shared);
    c3(&mut report, &shared);
    c4(&mut report, &shared);
    c5(&mut report, &shared);
    c6(&mut report);
    c7(&mut report);
    c8(&mut report, &shared);
    c9(&mut report);
    c10(&mut report, &shared);
    println!(
        "acceptance: {} of 10 criteria passed",
        10 - report.failures
    );
    if report.failures > 0 {
        std::process::exit(1);
    }
}
