use arpoisson_core::groupoid::*;
use arpoisson_core::probes::{ChartBox, Locus, ProbeSpec};
use arpoisson_core::tensor::VectorField;
use arpoisson_core::{Error, Jet};
use std::f64::consts::E;

fn frame(fields: Vec<VectorField>) -> AnchoredFrame {
    AnchoredFrame::new(fields).unwrap()
}

fn translations() -> AnchoredFrame {
    frame(vec![VectorField::coordinate(2, 0), VectorField::coordinate(2, 1)])
}

fn b_frame() -> AnchoredFrame {
    frame(vec![VectorField::new(2, |x| vec![x[0], Jet::cst(0.0)]), VectorField::coordinate(2, 1)])
}

fn zero_tangent() -> AnchoredFrame {
    frame(vec![
        VectorField::new(2, |x| vec![x[0], Jet::cst(0.0)]),
        VectorField::new(2, |x| vec![Jet::cst(0.0), x[0]]),
    ])
}

fn quadratic() -> AnchoredFrame {
    frame(vec![
        VectorField::new(2, |x| vec![x[0] * x[0], Jet::cst(0.0)]),
        VectorField::new(2, |x| vec![Jet::cst(0.0), -(x[0] * x[0])]),
    ])
}

fn groupoid(f: AnchoredFrame, r: f64) -> ChartGroupoid {
    ChartGroupoid::new(f, ChartBox::cube(2, r), ChartBox::cube(2, 3.0)).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

#[test]
fn targets() {
    let g = groupoid(b_frame(), 3.0);
    let u = vec![0.4, -0.3];
    assert_eq!(g.target(&g.identity(&u)).unwrap(), u);
    let t = g.target(&Arrow::new(vec![0.7, 0.2], vec![1.1, 0.5])).unwrap();
    assert!(close(&t, &[1.1 * 0.7f64.exp(), 0.7], 1e-10));

    let q = groupoid(quadratic(), 3.0);
    let (a, b, x, y) = (0.4, -0.6, 0.9, 0.1);
    let t = q.target(&Arrow::new(vec![a, b], vec![x, y])).unwrap();
    assert!(close(&t, &[x / (1.0 - a * x), -b * x * x / (1.0 - a * x) + y], 1e-10));
}

#[test]
fn worked_composition() {
    let g = groupoid(b_frame(), 3.0);
    let h = Arrow::new(vec![1.0, 0.0], vec![2.0, 0.0]);
    let gg = Arrow::new(vec![1.0, 1.0], vec![2.0 * E, 0.0]);
    let c = g.compose(&gg, &h).unwrap();
    assert_eq!(c, Arrow::new(vec![2.0, 1.0], vec![2.0, 0.0]));
    let t = g.target(&c).unwrap();
    assert!(close(&t, &[2.0 * E * E, 1.0], 1e-9));
    assert!(close(&t, &g.target(&gg).unwrap(), 1e-9));

    let u = vec![0.5, 0.5];
    assert_eq!(g.compose(&g.identity(&u), &g.identity(&u)).unwrap(), g.identity(&u));
    let inv = g.inverse(&h).unwrap();
    assert_eq!(g.compose(&inv, &h).unwrap(), g.identity(&h.u));
}

#[test]
fn composition_errors() {
    let g = groupoid(b_frame(), 1.5);
    let h = Arrow::new(vec![1.0, 0.0], vec![0.5, 0.0]);
    let far = Arrow::new(vec![0.0, 0.0], vec![0.9, 0.0]);
    assert!(matches!(g.compose(&far, &h), Err(Error::NotComposable(_))));
    let g2 = Arrow::new(vec![1.0, 0.0], g.target(&h).unwrap());
    assert!(matches!(g.compose(&g2, &h), Err(Error::OutOfChart(_))));
    assert!(ChartGroupoid::new(b_frame(), ChartBox::new(vec![0.1, 0.1], vec![1.0, 1.0]), ChartBox::cube(2, 1.0)).is_err());
}

#[test]
fn axioms_for_commuting_frames() {
    for (f, tol) in [(translations(), 1e-12), (b_frame(), 1e-9)] {
        let g = groupoid(f, 1.5);
        let probes = g.axiom_probes(5, 64);
        let r = g.verify_axioms(&probes).unwrap();
        assert!(r.max_defect() < tol, "{r:?}");
        assert_eq!(r.probes, 64);
    }
}

#[test]
fn non_commuting_frame_breaks_target_of_composition() {
    let g = groupoid(zero_tangent(), 1.5);
    let probes = g.axiom_probes(5, 64);
    let r = g.verify_axioms(&probes).unwrap();
    assert!(r.target_of_composition > 1e-3);
    assert!(r.witness < 64);
}

#[test]
fn commutativity_checks() {
    let p = vec![vec![0.3, 0.2], vec![-1.0, 0.5], vec![1.4, -0.8]];
    assert!(verify_commutative_frame(&b_frame(), &p).unwrap().0);
    assert!(verify_commutative_frame(&translations(), &p).unwrap().0);
    let (ok, m) = verify_commutative_frame(&zero_tangent(), &p).unwrap();
    assert!(!ok && (m - 1.4).abs() < 1e-12);
    // [x d_x, x d_y] = x d_y
    let br = zero_tangent().bracket(0, 1, &[0.7, 0.1]).unwrap();
    assert!(close(&br, &[0.0, 0.7], 1e-14));
}

#[test]
fn flows_of_commuting_fields_add() {
    let f = frame(vec![VectorField::new(2, |x| vec![x[0] * x[0], Jet::cst(0.0)]), VectorField::coordinate(2, 1)]);
    let g = groupoid(f, 0.4);
    for (v, w, u) in [([0.1, 0.2], [0.15, -0.1], [0.5, 0.3]), ([-0.3, 0.1], [0.2, 0.3], [-0.8, 0.0])] {
        let inner = g.target(&Arrow::new(w.to_vec(), u.to_vec())).unwrap();
        let outer = g.target(&Arrow::new(v.to_vec(), inner)).unwrap();
        let sum = g.target(&Arrow::new(vec![v[0] + w[0], v[1] + w[1]], u.to_vec())).unwrap();
        assert!(close(&outer, &sum, 1e-8));
    }
    // {x^2 d_x, -x^2 d_y} does not commute, so its flows do not add
    let g = groupoid(quadratic(), 0.4);
    let u = [0.5, 0.3];
    let inner = g.target(&Arrow::new(vec![0.0, 0.3], u.to_vec())).unwrap();
    let outer = g.target(&Arrow::new(vec![0.3, 0.0], inner)).unwrap();
    let sum = g.target(&Arrow::new(vec![0.3, 0.3], u.to_vec())).unwrap();
    assert!(!close(&outer, &sum, 1e-3));
}

#[test]
fn pair_map_is_injective_for_injective_anchor() {
    let g = groupoid(b_frame(), 1.0);
    // away from x = 0 the b-frame anchor is injective
    let pts = ProbeSpec::new(ChartBox::new(vec![-1.0, -1.0, 0.2, -1.0], vec![1.0, 1.0, 2.0, 1.0]), 9)
        .avoid(Locus::Hyperplane { coord: 2, value: 0.0 })
        .random(40)
        .random_points();
    let arrows: Vec<Arrow> = pts.iter().map(|p| Arrow::new(p[..2].to_vec(), p[2..].to_vec())).collect();
    assert!(g.pair_separation(&arrows).unwrap() > 0.0);
    // on x = 0 distinct arrows share endpoints
    let degenerate = vec![Arrow::new(vec![0.1, 0.0], vec![0.0, 0.0]), Arrow::new(vec![0.5, 0.0], vec![0.0, 0.0])];
    assert_eq!(g.pair_separation(&degenerate).unwrap(), 0.0);
}

#[test]
fn source_and_target_maps_on_the_flat_chart() {
    let g = groupoid(b_frame(), 2.0);
    let z = [0.3, -0.4, 0.8, 0.2];
    assert_eq!(g.source_map().apply(&z).unwrap(), vec![0.8, 0.2]);
    let t = g.target_map().apply(&z).unwrap();
    assert!(close(&t, &g.target(&Arrow::new(vec![0.3, -0.4], vec![0.8, 0.2])).unwrap(), 1e-14));
    let (_, j) = g.target_map().jacobian(&z).unwrap();
    // d/da (x e^a) = x e^a, d/dx = e^a
    assert!((j[(0, 0)] - 0.8 * 0.3f64.exp()).abs() < 1e-9 && (j[(0, 2)] - 0.3f64.exp()).abs() < 1e-9);
}
