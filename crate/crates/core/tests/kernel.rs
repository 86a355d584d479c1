use vcorr::kernel::{
    apply_tm, centered_cross_moment, fredholm_det_closed_form, fredholm_det_truncated, kernel_m,
    mercer_partial_sum, quadratic_form_x, EigenPair, GridSpec,
};
use vcorr::montecarlo::{gen_walk, SimConfig};
use vcorr::specialfun::{eval_f, MgfPoint};

#[test]
fn eigenfunctions_at_fine_grid() {
    let grid = GridSpec::new(4096).unwrap();
    for n in 1..=5 {
        let e = EigenPair::new(n);
        let psi = grid.sample(|t| e.psi(t));
        let out = apply_tm(&psi, &grid).unwrap();
        let worst = out.iter().zip(&psi).map(|(o, p)| (o - e.lambda * p).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-6, "n = {n}: {worst}");
        assert!(out[0].abs() < 1e-15 && out[4096].abs() < 1e-15);
    }
}

#[test]
fn mercer_sum_converges_to_kernel() {
    let mut worst = 0.0f64;
    for i in 0..=32 {
        for j in 0..=32 {
            let (s, t) = (i as f64 / 32.0, j as f64 / 32.0);
            worst = worst.max((mercer_partial_sum(s, t, 1000) - kernel_m(s, t).unwrap()).abs());
        }
    }
    assert!(worst <= 2e-3, "{worst}");
}

#[test]
fn fredholm_truncation_order() {
    for (b1, b2, a) in [(1.0, 1.0, 0.5), (3.0, 4.0, 0.5), (1.0, 0.0, 0.9), (2.0, 0.5, -0.3)] {
        let p = MgfPoint::new(b1, b2, a).unwrap();
        let exact = fredholm_det_closed_form(&p);
        assert!((exact.powf(-0.5) - eval_f(&p)).abs() < 1e-14);
        let errs: Vec<f64> = [500, 1_000, 2_000, 10_000]
            .iter()
            .map(|&n| (fredholm_det_truncated(&p, n).unwrap().value - exact).abs() / exact)
            .collect();
        assert!(errs[3] <= 1e-3 && errs[3] < errs[1]);
        // Empirical order 1/N on doubling.
        let ratio = errs[1] / errs[2];
        assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
        let tail = fredholm_det_truncated(&p, 1_000).unwrap().tail_estimate;
        assert!(errs[1] <= 1.05 * tail, "error {} tail {tail}", errs[1]);
    }
}

#[test]
fn quadratic_form_matches_centered_moment() {
    let cfg = SimConfig { n: 2048, paths: 100, seed: 7, ..SimConfig::default() };
    let mut rel = Vec::new();
    for rep in 0..100 {
        let pair = gen_walk(&cfg, rep).unwrap();
        let x12 = quadratic_form_x(&pair, 1, 2).unwrap();
        assert_eq!(x12, quadratic_form_x(&pair, 2, 1).unwrap());
        let x11 = quadratic_form_x(&pair, 1, 1).unwrap();
        let x22 = quadratic_form_x(&pair, 2, 2).unwrap();
        assert!(x11 > 0.0 && x22 > 0.0);
        assert!(x12.abs() <= (x11 * x22).sqrt());
        let y12 = centered_cross_moment(&pair, 1, 2).unwrap();
        rel.push((x12 - y12).abs() / y12.abs());
    }
    rel.sort_by(f64::total_cmp);
    let median = 0.5 * (rel[49] + rel[50]);
    assert!(median <= 1e-2, "median {median}");
}
