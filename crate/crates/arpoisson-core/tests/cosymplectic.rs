use arpoisson_core::cosymplectic::*;
use arpoisson_core::linalg::{self, Mat};
use arpoisson_core::tensor::{jacobiator, pushforward_bivector, sharp, Bivec, BivectorField, VectorField};
use arpoisson_core::Jet;
use rand::{Rng, SeedableRng};

fn canonical() -> Mat {
    Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

fn torus() -> CosymplecticStructure {
    identity_mapping_torus(&canonical()).unwrap().0
}

/// A non-constant example on (q, z, w):
/// omega = (1 + z^2) dz ^ dw + dq ^ d(zw), alpha = dq + d(w sin z).
fn curved(scale: f64) -> CosymplecticStructure {
    let omega = BivectorField::new(3, move |x| {
        let mut b = Bivec::zeros(3);
        b.set(1, 2, (1.0 + x[1] * x[1]) * scale);
        b.set(0, 1, x[2] * scale);
        b.set(0, 2, x[1] * scale);
        b
    });
    let alpha = VectorField::new(3, |x| vec![Jet::cst(1.0), x[2] * x[1].cos(), x[1].sin()]);
    CosymplecticStructure::new(omega, alpha).unwrap()
}

fn probes3() -> Vec<Vec<f64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    (0..32).map(|_| (0..3).map(|_| rng.gen_range(-0.8..0.8)).collect()).collect()
}

#[test]
fn validation_examples() {
    let p = probes3();
    assert!(validate(&torus(), &p).unwrap());
    let bad = CosymplecticStructure::new(torus().omega, VectorField::coordinate(3, 1)).unwrap();
    assert!(!validate(&bad, &p).unwrap());
    assert!(CosymplecticStructure::new(BivectorField::zero(2), VectorField::coordinate(2, 0)).is_err());
    let c = curved(1.0);
    assert!(validate(&c, &p).unwrap());
    for q in &p {
        assert!(c.closedness(q).unwrap() < 1e-9);
    }
}

#[test]
fn reeb_field_examples() {
    let c = torus();
    let k = reeb_field(&c, &[0.3, 0.1, -0.2]).unwrap();
    assert_eq!(k.len(), 3);
    assert!((k[0] - 1.0).abs() < 1e-14 && k[1].abs() < 1e-14 && k[2].abs() < 1e-14);
    for q in probes3() {
        let k1 = reeb_field(&curved(1.0), &q).unwrap();
        let k2 = reeb_field(&curved(2.0), &q).unwrap();
        assert!(k1.iter().zip(&k2).all(|(a, b)| (a - b).abs() < 1e-10));
        // i_K omega = 0 and alpha(K) = 1
        let w = curved(1.0).omega.matrix(&q).unwrap();
        let a = curved(1.0).alpha.at(&q).unwrap();
        let kv = nalgebra::DVector::from_vec(k1.clone());
        assert!((w.transpose() * &kv).amax() < 1e-10);
        assert!((a.iter().zip(&k1).map(|(x, y)| x * y).sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn induced_poisson_properties() {
    let c = curved(1.0);
    let field = c.induced_poisson_field();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for q in probes3() {
        let pi = induced_poisson(&c, &q).unwrap();
        assert!(linalg::antisymmetry_defect(&pi) < 1e-12);
        assert_eq!(linalg::rank(&pi, 1e-10), 2);
        assert!(linalg::max_abs(&(field.matrix(&q).unwrap() - &pi)) < 1e-10);
        // alpha spans the kernel of pi^sharp; the Reeb field is transverse to the image
        let a = c.alpha.at(&q).unwrap();
        let av = nalgebra::DVector::from_vec(a.clone());
        assert!((&pi * &av).amax() < 1e-10);
        let k = reeb_field(&c, &q).unwrap();
        assert!((a.iter().zip(&k).map(|(x, y)| x * y).sum::<f64>() - 1.0).abs() < 1e-10);
        let w = c.omega.matrix(&q).unwrap();
        let theta: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = sharp(&field, &theta, &q).unwrap();
        assert!(a.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>().abs() < 1e-10);
        // omega(pi^sharp theta, u) = theta(u) for u in ker alpha
        let u = vec![a[1], -a[0], 0.0];
        let lhs: f64 = (0..3).map(|i| (0..3).map(|j| v[i] * w[(i, j)] * u[j]).sum::<f64>()).sum();
        let rhs: f64 = theta.iter().zip(&u).map(|(x, y)| x * y).sum();
        assert!((lhs - rhs).abs() < 1e-10);
        assert!(jacobiator(&field, &q).unwrap().max_abs() < 1e-9);
    }
}

#[test]
fn pair_chart_forms_and_symplectization() {
    let (c, s, t) = identity_mapping_torus(&canonical()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let probes: Vec<Vec<f64>> = (0..16).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let (wh, ah) = pair_chart_cosym_forms(&c, &s, &t, &probes).unwrap();
    for q in &probes {
        assert_eq!(ah.at(q).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let m = wh.matrix(q).unwrap();
        assert_eq!(m[(1, 2)], 1.0);
        assert_eq!(m[(3, 4)], -1.0);
        assert!(d_two_form_max(&wh, q).unwrap() < 1e-12);
        assert!(linalg::max_abs(&d_one_form(&ah, q).unwrap()) < 1e-12);
        // on the diagonal z' = z the target and source agree
        let diag = vec![q[0], q[1], q[2], q[1], q[2]];
        let _ = wh.matrix(&diag).unwrap();
    }
    let sp_probes: Vec<Vec<f64>> = probes.iter().map(|q| [vec![0.7], q.clone()].concat()).collect();
    let chart = symplectization_form(&wh, &ah, &sp_probes).unwrap();
    assert_eq!(chart.dim(), 6);
    let zero_p: Vec<Vec<f64>> = probes.iter().map(|q| [vec![0.0], q.clone()].concat()).collect();
    for q in sp_probes.iter().chain(&zero_p) {
        let pf = linalg::pfaffian(&chart.form.matrix(q).unwrap()).unwrap();
        assert!((pf.abs() - 1.0).abs() < 1e-12);
        assert!(d_two_form_max(&chart.form, q).unwrap() < 1e-12);
    }
    // the dual bivector pushes forward to +pi along t and -pi along s
    let pit = dual_bivector(&chart.form);
    let pi_m = c.induced_poisson_field();
    let (tl, sl) = (chart.lift(&t), chart.lift(&s));
    for q in &sp_probes {
        let a = pushforward_bivector(&tl, &pit, q).unwrap();
        let b = pushforward_bivector(&sl, &pit, q).unwrap();
        assert!(linalg::max_abs(&(a - pi_m.at_image(&tl, q).unwrap())) < 1e-12);
        assert!(linalg::max_abs(&(b + pi_m.at_image(&sl, q).unwrap())) < 1e-12);
    }
}

#[test]
fn mismatched_alpha_pullbacks_are_rejected() {
    let (c, s, _) = identity_mapping_torus(&canonical()).unwrap();
    // a "target" that shifts q by z' breaks s*alpha = t*alpha
    let bad_t = arpoisson_core::tensor::SmoothMap::new(5, 3, |x| vec![x[0] + x[1], x[1], x[2]]);
    assert!(pair_chart_cosym_forms(&c, &s, &bad_t, &[vec![0.1, 0.2, 0.3, 0.4, 0.5]]).is_err());
}
