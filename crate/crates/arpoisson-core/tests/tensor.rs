use arpoisson_core::linalg::{self, Mat};
use arpoisson_core::tensor::*;
use arpoisson_core::Jet;
use proptest::prelude::*;

fn bivector2(c: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> BivectorField {
    BivectorField::new(2, move |x| {
        let mut b = Bivec::zeros(2);
        b.set(0, 1, c(x));
        b
    })
}

fn canonical4() -> BivectorField {
    let mut m = Mat::zeros(4, 4);
    m[(0, 1)] = 1.0;
    m[(1, 0)] = -1.0;
    m[(2, 3)] = 1.0;
    m[(3, 2)] = -1.0;
    BivectorField::constant(&m)
}

/// pi^{xy} = 1, pi^{yz} = y on R^3.
fn lie_poisson_like() -> BivectorField {
    BivectorField::new(3, |x| {
        let mut b = Bivec::zeros(3);
        b.set(0, 1, Jet::cst(1.0));
        b.set(1, 2, x[1]);
        b
    })
}

/// A generic non-Poisson bivector on R^3.
fn generic3() -> BivectorField {
    BivectorField::new(3, |x| {
        let mut b = Bivec::zeros(3);
        b.set(0, 1, x[2] * x[0] + 0.3);
        b.set(0, 2, x[1].sin());
        b.set(1, 2, x[0] * x[0] - x[2]);
        b
    })
}

#[test]
fn jacobiator_examples() {
    let j = jacobiator(&bivector2(|x| x[0]), &[0.4, -1.2]).unwrap();
    assert_eq!(j.max_abs(), 0.0);
    let j = jacobiator(&canonical4(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
    assert_eq!(j.max_abs(), 0.0);
    for p in [[0.0, 0.0, 0.0], [1.5, -0.7, 2.0]] {
        let j = jacobiator(&lie_poisson_like(), &p).unwrap();
        assert_eq!(j.get(0, 1, 2), 1.0);
        assert_eq!(j.get(1, 0, 2), -1.0);
        assert_eq!(j.get(2, 0, 1), 1.0);
        assert_eq!(j.get(0, 0, 2), 0.0);
    }
    assert!(jacobiator(&canonical4(), &[0.0, 0.0]).is_err());
}

#[test]
fn jacobiator_is_fully_antisymmetric() {
    for p in [[0.3, 0.1, -0.5], [1.0, 2.0, -0.4], [-0.4, 0.9, 0.2]] {
        let j = jacobiator(&generic3(), &p).unwrap();
        assert!(j.max_abs() > 1e-3);
        assert!(j.antisymmetry_defect() < 1e-12);
    }
}

#[test]
fn pushforward_examples() {
    let pi = generic3();
    let p = [0.3, -0.2, 0.8];
    let id = pushforward_bivector(&SmoothMap::identity(3), &pi, &p).unwrap();
    assert_eq!(id, pi.matrix(&p).unwrap());

    let scale = SmoothMap::new(2, 2, |x| vec![x[0] * 2.0, x[1]]);
    let m = pushforward_bivector(&scale, &bivector2(|_| Jet::cst(1.0)), &[0.5, 0.5]).unwrap();
    assert_eq!(m[(0, 1)], 2.0);
    assert_eq!(m[(1, 0)], -2.0);

    // projection of the b-case groupoid bivector onto (x, y) gives -x dx ^ dy
    let x = 0.7;
    let mut pg = Mat::zeros(4, 4);
    let e = 0.3f64.exp_m1();
    let alpha = 0.3 / e;
    for (i, j, v) in [(0, 3, 1.0), (1, 2, alpha), (1, 3, 0.2 * (e - 0.3) / (0.3 * e)), (2, 3, -x)] {
        pg[(i, j)] = v;
        pg[(j, i)] = -v;
    }
    let pi_g = BivectorField::constant(&pg);
    let s = SmoothMap::projection(4, vec![2, 3]);
    let m = pushforward_bivector(&s, &pi_g, &[0.3, 0.2, x, 0.1]).unwrap();
    assert!((m[(0, 1)] + x).abs() < 1e-15);
}

#[test]
fn pushforward_is_functorial() {
    let psi = SmoothMap::new(3, 3, |x| vec![x[0] + x[1] * x[1], x[1].sin() + x[2], x[2] * x[0].exp()]);
    let phi = SmoothMap::new(3, 2, |x| vec![x[0] * x[2], x[1] - x[0] * x[0]]);
    let comp = phi.after(&psi).unwrap();
    let pi = generic3();
    for p in [[0.2, 0.4, -0.3], [0.9, -0.1, 0.5]] {
        let direct = pushforward_bivector(&comp, &pi, &p).unwrap();
        // push pi forward along psi at p, then along phi at psi(p)
        let (_, jpsi) = psi.jacobian(&p).unwrap();
        let mid = &jpsi * pi.matrix(&p).unwrap() * jpsi.transpose();
        let (_, jphi) = phi.jacobian(&psi.apply(&p).unwrap()).unwrap();
        let nested = &jphi * mid * jphi.transpose();
        assert!(linalg::max_abs(&(direct - nested)) < 1e-8);
    }
}

#[test]
fn pfaffian_examples() {
    // d_a ^ d_y + d_b ^ d_x in (a, b, x, y)
    let mut m = Mat::zeros(4, 4);
    m[(0, 3)] = 1.0;
    m[(3, 0)] = -1.0;
    m[(1, 2)] = 1.0;
    m[(2, 1)] = -1.0;
    assert_eq!(pfaffian4(&m).unwrap(), 1.0);
    assert_eq!(pfaffian4(&Mat::zeros(4, 4)).unwrap(), 0.0);
    let mut bad = m.clone();
    bad[(2, 1)] = 0.5;
    assert!(pfaffian4(&bad).is_err());
    assert!(pfaffian4(&Mat::zeros(3, 3)).is_err());
}

#[test]
fn sharp_examples() {
    let pi = bivector2(|x| x[0]);
    assert_eq!(sharp(&pi, &[1.0, 0.0], &[0.6, 2.0]).unwrap(), vec![0.0, 0.6]);
    assert_eq!(sharp(&pi, &[0.0, 0.0], &[0.6, 2.0]).unwrap(), vec![0.0, 0.0]);
    let c = bivector2(|_| Jet::cst(1.0));
    assert_eq!(sharp(&c, &[0.0, 1.0], &[0.0, 0.0]).unwrap(), vec![-1.0, 0.0]);
    assert!(sharp(&c, &[1.0], &[0.0, 0.0]).is_err());
}

#[test]
fn derivatives_match_finite_differences() {
    let fields = [
        ScalarField::new(3, |x| (x[0] * x[1]).sin() + x[2].exp() * x[0]),
        ScalarField::new(3, |x| x[0] / (x[1] * x[1] + 1.0) - x[2].powi(3)),
        ScalarField::new(3, |x| (x[0] * x[0] + x[1] * x[1] + 1.0).sqrt() * x[2].cos()),
    ];
    for f in &fields {
        for p in [[0.3, -0.2, 0.5], [1.1, 0.7, -0.9]] {
            assert!(f.fd_defect(&p, 1e-5).unwrap() < 1e-4);
            let (_, _, h) = f.evaluate(&p).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((h[i * 3 + j] - h[j * 3 + i]).abs() < 1e-12);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn stored_bivectors_are_exactly_antisymmetric(p in proptest::collection::vec(-2.0f64..2.0, 3)) {
        let m = generic3().matrix(&p).unwrap();
        prop_assert_eq!(linalg::antisymmetry_defect(&m), 0.0);
        for i in 0..3 {
            prop_assert_eq!(m[(i, i)], 0.0);
        }
    }
}
