use arpoisson_core::eform::*;
use arpoisson_core::groupoid::AnchoredFrame;
use arpoisson_core::linalg::{self, Mat};
use arpoisson_core::realization::EBivector;
use arpoisson_core::tensor::{Bivec, ScalarField, VectorField};
use arpoisson_core::Jet;
use proptest::prelude::*;

fn frame(fields: Vec<VectorField>) -> AnchoredFrame {
    AnchoredFrame::new(fields).unwrap()
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

fn probes2() -> Vec<Vec<f64>> {
    vec![vec![0.5, 0.2], vec![-0.7, 1.1], vec![1.3, -0.4], vec![0.0, 0.3]]
}

#[test]
fn structure_functions_examples() {
    let p = probes2();
    let s = fit_structure_functions(&b_frame(), &p).unwrap();
    assert_eq!(s.report.skipped, vec![3]);
    for q in &p[..3] {
        assert!(s.at(q).unwrap().iter().all(|c| c.abs() < 1e-14));
    }
    let s = fit_structure_functions(&zero_tangent(), &p).unwrap();
    for q in &p[..3] {
        assert!((s.get(q, 1, 0, 1).unwrap() - 1.0).abs() < 1e-13);
        assert!((s.get(q, 1, 1, 0).unwrap() + 1.0).abs() < 1e-13);
        assert!(s.get(q, 0, 0, 1).unwrap().abs() < 1e-13);
    }
    let cst = frame(vec![VectorField::coordinate(2, 0), VectorField::coordinate(2, 1)]);
    let s = fit_structure_functions(&cst, &p).unwrap();
    assert!(s.at(&p[0]).unwrap().iter().all(|c| *c == 0.0));
}

#[test]
fn non_involutive_frame_is_rejected() {
    // [d_x, d_y + x d_z] = d_z leaves the span
    let f = frame(vec![VectorField::coordinate(3, 0), VectorField::new(3, |x| vec![Jet::cst(0.0), Jet::cst(1.0), x[0]])]);
    assert!(fit_structure_functions(&f, &[vec![0.5, 0.0, 0.0]]).is_err());
}

#[test]
fn differential_examples() {
    let p = probes2();
    let fr = b_frame();
    let s = fit_structure_functions(&fr, &p).unwrap();
    let g = EForm::function(&ScalarField::coordinate(2, 1), 2);
    let dg = algebroid_d(&g, &fr, &s, &[0.4, 0.9]).unwrap();
    assert_eq!(dg, vec![0.0, 1.0]);
    // for g = x: dg(X_1) = x
    let gx = EForm::function(&ScalarField::coordinate(2, 0), 2);
    let d = algebroid_d(&gx, &fr, &s, &[0.4, 0.9]).unwrap();
    assert!((d[0] - 0.4).abs() < 1e-15 && d[1] == 0.0);

    let w = EForm::wedge1(&EForm::dual(2, 2, 0), &EForm::dual(2, 2, 1)).unwrap();
    assert!(is_closed(&w, &fr, &s, &p).unwrap().closed);

    let zt = zero_tangent();
    let sz = fit_structure_functions(&zt, &p).unwrap();
    let beta = EForm::dual(2, 2, 1);
    let db = algebroid_d(&beta, &zt, &sz, &[0.5, 0.2]).unwrap();
    // d beta(X1, X2) = -beta([X1, X2]) = -1
    assert!((db[0] + 1.0).abs() < 1e-13);
}

#[test]
fn example_one_form_is_closed() {
    // omega = x alpha ^ beta on {x d_x, x d_y}
    let zt = zero_tangent();
    let p = probes2();
    let s = fit_structure_functions(&zt, &p).unwrap();
    let w = EForm::from_ebivector(&EBivector::new(2, 2, |x| {
        let mut b = Bivec::zeros(2);
        b.set(0, 1, x[0]);
        b
    }));
    let r = is_closed(&w, &zt, &s, &p[..3]).unwrap();
    assert!(r.closed, "{r:?}");
}

fn heisenberg() -> AnchoredFrame {
    frame(vec![
        VectorField::coordinate(3, 0),
        VectorField::new(3, |x| vec![Jet::cst(0.0), Jet::cst(1.0), x[0]]),
        VectorField::coordinate(3, 2),
    ])
}

#[test]
fn generic_form_on_noncommuting_frame_is_not_closed() {
    let fr = heisenberg();
    let p = vec![vec![0.3, -0.2, 0.5], vec![1.0, 0.4, -0.1]];
    let s = fit_structure_functions(&fr, &p).unwrap();
    assert!((s.get(&p[0], 2, 0, 1).unwrap() - 1.0).abs() < 1e-14);
    let w = EForm::new(3, 3, 2, |x| vec![x[1] * 0.7 + 0.2, x[0] * x[2] - 1.3, x[0] * 0.4 + x[1] * x[1]]).unwrap();
    let r = is_closed(&w, &fr, &s, &p).unwrap();
    assert!(!r.closed && r.witness.is_some());
}

#[test]
fn d_squared_vanishes() {
    let fr = heisenberg();
    let p = vec![vec![0.3, -0.2, 0.5], vec![1.0, 0.4, -0.1], vec![-0.8, 0.9, 0.2]];
    let s = fit_structure_functions(&fr, &p).unwrap();
    let g = EForm::function(&ScalarField::new(3, |x| (x[0] * x[1]).sin() + x[2] * x[2] * x[0]), 3);
    let dd = algebroid_d_form(&algebroid_d_form(&g, &fr, &s).unwrap(), &fr, &s).unwrap();
    let th = EForm::new(3, 3, 1, |x| vec![x[1] * x[2], x[0].exp(), x[0] * x[1] - x[2]]).unwrap();
    let dd1 = algebroid_d_form(&algebroid_d_form(&th, &fr, &s).unwrap(), &fr, &s).unwrap();
    for q in &p {
        assert!(dd.at(q).unwrap().iter().all(|v| v.abs() < 1e-7));
        assert!(dd1.at(q).unwrap().iter().all(|v| v.abs() < 1e-7));
    }
    // the bracket term matters here: d theta(X1, X2) picks up -theta(X3)
    let full = algebroid_d(&th, &fr, &s, &p[0]).unwrap();
    let first = frame_exterior_derivative(&th, &fr).unwrap().at(&p[0]).unwrap();
    assert!((full[0] - first[0] + (p[0][0] * p[0][1] - p[0][2])).abs() < 1e-13);
}

#[test]
fn commuting_frames_need_no_bracket_term() {
    let fr = b_frame();
    let p = probes2();
    let s = fit_structure_functions(&fr, &p).unwrap();
    let th = EForm::new(2, 2, 1, |x| vec![x[0] * x[1], x[1].sin()]).unwrap();
    let a = algebroid_d_form(&th, &fr, &s).unwrap();
    let b = frame_exterior_derivative(&th, &fr).unwrap();
    for q in &p[..3] {
        let (u, v) = (a.at(q).unwrap(), b.at(q).unwrap());
        assert!(u.iter().zip(&v).all(|(x, y)| (x - y).abs() < 1e-13));
    }
}

#[test]
fn darboux_equivalence() {
    let p = probes2();
    let pair = |k| (EForm::dual(2, k, 0), EForm::dual(2, k, 1));
    let r = closedness_commutativity_check(&b_frame(), &[pair(2)], &p[..3]).unwrap();
    assert!(r.all_duals_closed && r.frame_commutes);
    let r = closedness_commutativity_check(&zero_tangent(), &[pair(2)], &p[..3]).unwrap();
    assert!(!r.all_duals_closed && !r.frame_commutes);
    let cst = frame((0..4).map(|i| VectorField::coordinate(4, i)).collect());
    let pairs = [(EForm::dual(4, 4, 0), EForm::dual(4, 4, 1)), (EForm::dual(4, 4, 2), EForm::dual(4, 4, 3))];
    let r = closedness_commutativity_check(&cst, &pairs, &[vec![0.1, 0.2, 0.3, 0.4]]).unwrap();
    assert!(r.all_duals_closed && r.frame_commutes);
}

#[test]
fn gram_schmidt_rejects_degenerate() {
    assert!(symplectic_gram_schmidt(&Mat::zeros(2, 2)).is_err());
    assert!(symplectic_gram_schmidt(&Mat::zeros(3, 3)).is_err());
}

proptest! {
    #[test]
    fn gram_schmidt_normalizes_random_forms(v in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let mut w = Mat::zeros(4, 4);
        let mut t = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                w[(i, j)] = v[t];
                w[(j, i)] = -v[t];
                t += 1;
            }
        }
        prop_assume!(w.clone().determinant().abs() > 1e-3);
        let b = symplectic_gram_schmidt(&w).unwrap();
        let m = b.transpose() * &w * &b;
        prop_assert!(linalg::max_abs(&(m - canonical_block(4))) < 1e-10);
        prop_assert!(b.determinant().abs() > 0.0);
    }
}
