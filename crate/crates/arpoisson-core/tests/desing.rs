use arpoisson_core::desing::*;
use arpoisson_core::flows::{alpha_of, solve_F};
use arpoisson_core::realization::{assemble_groupoid_poisson, verify_multiplicativity_pushforwards};
use arpoisson_core::{linalg, tensor};

fn fam(k: u32, eps: f64) -> DesingFamily {
    build_h(k).unwrap().with_eps(eps).unwrap()
}

#[test]
fn h_is_odd_with_exact_tails() {
    for k in 1..=3 {
        let f = build_h(k).unwrap();
        assert_eq!(f.h.h(0.0), 0.0);
        for i in 0..=40 {
            let x = -3.0 + 0.15 * i as f64;
            assert!((f.h.h(x) + f.h.h(-x)).abs() < 1e-12);
            if x.abs() <= 1.0 {
                assert!(f.h.h_prime(x) > 0.0);
            }
        }
        let odd = 2.0 * k as f64 - 1.0;
        for &x in &[1.5, 2.0, 7.0] {
            assert_eq!(f.h.h(x), -1.0 / (odd * x.powf(odd)) + 2.0);
            assert!((f.h.h_prime(x) - x.powf(-2.0 * k as f64)).abs() < 1e-12);
        }
        // continuity of h and h' at the joins
        assert!((f.h.h(1.0) - (2.0 - 1.0 / odd)).abs() < 1e-12, "k={k}: {}", f.h.h(1.0) - (2.0 - 1.0 / odd));
        assert!((f.h.h_prime(1.0 - 1e-15) - 1.0).abs() < 1e-12);
    }
    let f = build_h(1).unwrap();
    assert!((f.h.h_prime(2.0) - 0.25).abs() < 1e-15);
}

#[test]
fn blend_matches_tail_derivatives() {
    // central differences of h' straddling x = 1 agree with x^{-2k} ones
    for k in 1..=2 {
        let f = build_h(k).unwrap();
        let hd = |x: f64| f.h.h_prime(x);
        let t = |x: f64| x.powf(-2.0 * k as f64);
        let e = 1e-3;
        let d_in = (hd(1.0) - hd(1.0 - e)) / e;
        let d_out = (t(1.0 + e) - t(1.0)) / e;
        let exact = -2.0 * k as f64;
        assert!((d_in - exact).abs() < 1e-1 && (d_out - exact).abs() < 1e-1);
    }
}

#[test]
fn rescaled_h_properties() {
    let f = fam(1, 0.5);
    assert!((h_eps(&f, 1.0).unwrap() - 7.0).abs() < 1e-12);
    for &x in &[0.25, 0.3, -0.4, 2.0] {
        assert!((h_eps_prime(&f, x).unwrap() - x.powi(-2)).abs() < 1e-14 * x.powi(-2));
    }
    for &x in &[0.01, 0.1, 0.2] {
        assert!((h_eps(&f, x).unwrap() + h_eps(&f, -x).unwrap()).abs() < 1e-12);
    }
    assert!(h_eps(&build_h(1).unwrap(), 0.3).is_err());
}

#[test]
fn g_eps_bulleted_properties() {
    for k in 1..=2 {
        for &e in &[0.5, 0.3, 0.1] {
            let f = fam(k, e);
            let e2 = e * e;
            for &x in &[e2, -e2, 2.0 * e2, 0.9] {
                assert_eq!(g_eps(&f, x), 0.0);
            }
            let g0 = e.powi(4 * k as i32) / f.h.h_prime(0.0);
            assert!((g_eps(&f, 0.0) - g0).abs() < 1e-10);
            assert!(g_eps(&f, 0.0) > 0.0);
            for i in 0..=200 {
                let x = -e2 + 2.0 * e2 * i as f64 / 200.0;
                assert!(g_eps(&f, x) >= 0.0, "k={k} eps={e} x={x}");
            }
            // d h_eps = dx / (x^{2k} + g_eps)
            for &x in &[0.3 * e2, -0.7 * e2] {
                let lhs = h_eps_prime(&f, x).unwrap();
                let rhs = 1.0 / (x.powi(2 * k as i32) + g_eps(&f, x));
                assert!((lhs - rhs).abs() < 1e-9 * lhs.abs());
            }
        }
    }
    assert_eq!(g_eps(&build_h(1).unwrap(), 0.0), 0.0);
}

#[test]
fn inverse_matches_tail_closed_form_and_is_monotone() {
    let f = fam(1, 0.3);
    let mut prev = f64::NEG_INFINITY;
    for i in 0..100 {
        let y = -20.0 + 0.4 * i as f64;
        let x = h_eps_inverse(&f, y).unwrap();
        assert!(x > prev);
        prev = x;
        assert!((h_eps(&f, x).unwrap() - y).abs() < 1e-11);
        if let Some(xt) = h_eps_inverse_tail(&f, y) {
            assert!((xt - x).abs() < 1e-10 * x.abs().max(1.0));
        }
    }
    assert!(h_eps_inverse(&f, 1e6).is_err());
}

#[test]
fn alpha_branches() {
    let f0 = build_h(1).unwrap();
    assert_eq!(desing_alpha(&f0, 0.0, 0.4).unwrap(), 1.0);
    assert_eq!(desing_alpha(&f0, 0.3, 0.0).unwrap(), 1.0);
    // eps = 0 branch against the displayed root formula
    for k in 1..=2u32 {
        let f0 = build_h(k).unwrap();
        let (a, x) = (0.4f64, 0.7f64);
        let odd = 2.0 * k as f64 - 1.0;
        let u = 1.0 - odd * a * x.powf(odd);
        let expect = a * x.powf(odd) / (u.powf(-1.0 / odd) - 1.0);
        assert!((desing_alpha(&f0, a, x).unwrap() - expect).abs() < 1e-12);
    }
    // eps != 0 against the flow of x^{2k} + g_eps
    for &e in &[0.3, 0.1] {
        let f = fam(1, e);
        let gen = f.generator();
        for &(a, x) in &[(0.2, 0.05), (-0.3, 0.0), (0.5, 0.004), (1.0, -0.2), (0.05, 0.5)] {
            let da = desing_alpha(&f, a, x).unwrap();
            let fa = alpha_of(&gen, a, x, &[]).unwrap();
            assert!((da - fa).abs() < 1e-7, "eps={e} a={a} x={x}: {da} vs {fa}");
            let df = desing_F(&f, a, x).unwrap();
            let ff = solve_F(&gen, a, x, &[]).unwrap();
            assert!((df - ff).abs() < 1e-8);
        }
        // continuity across a = 0
        assert!((desing_alpha(&f, 1e-9, 0.01).unwrap() - 1.0).abs() < 1e-6);
        assert!((desing_alpha(&f, 1.1e-4, 0.01).unwrap() - desing_alpha(&f, 0.99e-4, 0.01).unwrap()).abs() < 1e-6);
    }
}

#[test]
fn convergence_orders_k1() {
    let grid: Vec<f64> = (0..=4000).map(|i| -0.2 + 0.4 * i as f64 / 4000.0).collect();
    let r = convergence_report(1, &[0.4, 0.2, 0.1, 0.05], &grid).unwrap();
    assert!((r.orders[0] - 4.0).abs() < 0.8, "{:?}", r.orders);
    assert!((r.orders[1] - 2.0).abs() < 0.4, "{:?}", r.orders);
    assert!(r.strictly_decreasing());
    assert!(r.sup.iter().flatten().all(|v| *v >= 0.0));
    assert!(convergence_report(1, &[0.1, 0.2], &grid).is_err());
}

#[test]
fn desing_poisson_is_poisson_and_groupoid_is_symplectic() {
    let beta = linalg::Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    for &e in &[0.3, 0.1] {
        let f = fam(1, e);
        let pi = f.poisson(Some(&beta));
        for &x in &[0.0, 0.01, -0.05, 0.3] {
            let j = tensor::jacobiator(&pi, &[x, 0.2, 0.1, -0.3]).unwrap();
            assert!(j.max_abs() < 1e-10);
        }
        let gp = assemble_groupoid_poisson(&f.flow_model(), None).unwrap();
        let mut probes = Vec::new();
        for &a in &[-0.4, -1e-5, 0.3] {
            for &x in &[0.0, 0.2 * e * e, -0.05, 0.2] {
                probes.push(vec![a, 0.7, x, 0.1]);
            }
        }
        let rep = verify_multiplicativity_pushforwards(&gp.pi_g, &gp.source, &gp.target, &gp.base_pi, &probes).unwrap();
        assert!(rep.max_defect() < 1e-6, "eps={e}: {rep:?}");
        for p in &probes {
            let pf = linalg::pfaffian(&gp.block4(p).unwrap()).unwrap();
            let al = desing_alpha(&f, p[0], p[2]).unwrap();
            assert!((pf - al).abs() < 1e-9 && pf > 0.0);
        }
    }
}
