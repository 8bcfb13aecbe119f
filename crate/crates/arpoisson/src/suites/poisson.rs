//! E-symplectic forms to Poisson structures and back, on the example frames.

use arpoisson_core::eform::{fit_structure_functions, is_closed, EForm};
use arpoisson_core::linalg::{self, Mat};
use arpoisson_core::probes::{ChartBox, Locus, ProbeSpec};
use arpoisson_core::realization::*;
use arpoisson_core::tensor::jacobiator;
use arpoisson_core::Jet;

use super::*;
use crate::report::{Outcome, Worst};

/// `-xy dx^dy - xz dx^dz + yw dy^dw + zw dz^dw`.
fn four_term(p: &[f64]) -> Mat {
    let (x, y, z, w) = (p[0], p[1], p[2], p[3]);
    let mut m = Mat::zeros(4, 4);
    for (i, j, v) in [(0, 1, -x * y), (0, 2, -x * z), (1, 3, y * w), (2, 3, z * w)] {
        m[(i, j)] = v;
        m[(j, i)] = -v;
    }
    m
}

pub fn run(ctx: &mut Ctx) {
    let n = ctx.cfg.probes;
    let plane = ctx.random(ChartBox::cube(2, 2.0), n, 1);
    let omega = EBivector::constant(2, &canonical2());

    ctx.rec.upper("b_plane.coefficients", 1e-12, || {
        let pi = e_symplectic_to_poisson(&b_frame(), &omega, &plane[..1])?;
        worst_over(&plane, |p| Ok(max_diff(&pi.matrix(p)?, &x_dx_dy().matrix(p)?)))
    });
    ctx.rec.upper("b_plane.jacobiator", 1e-8, || {
        let pi = e_symplectic_to_poisson(&b_frame(), &omega, &plane[..1])?;
        worst_over(&plane, |p| Ok(jacobiator(&pi, p)?.max_abs()))
    });

    // x d_x ^ d_y factored through the frame {x d_x, x d_y}
    let off_axis = ProbeSpec::new(ChartBox::cube(2, 1.5), ctx.seed(2))
        .avoid(Locus::Hyperplane { coord: 0, value: 0.0 })
        .random(n)
        .random_points();
    let factored = poisson_to_e_form(&x_dx_dy(), &zero_tangent(), &off_axis);
    ctx.rec.upper("zero_tangent.omega_pi", 1e-12, || {
        let (w, _, _) = factored.clone()?;
        worst_over(&off_axis, |p| {
            let m = w.matrix(p)?;
            Ok((m[(0, 1)] - p[0]).abs().max(m[(0, 0)].abs()).max(m[(1, 1)].abs()))
        })
    });
    ctx.rec.upper("zero_tangent.lambda", 1e-12, || {
        let (_, lam, _) = factored.clone()?;
        // lambda(dx) = Y', lambda(dy) = -X'
        let expect = Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        worst_over(&off_axis, |p| Ok(max_diff(&lam.matrix(p)?, &expect)))
    });
    ctx.rec.upper("zero_tangent.factor_residual", 1e-8, || {
        let (_, _, rep) = factored.clone()?;
        let mut w = Worst::default();
        w.update(rep.max_residual.max(rep.max_antisymmetry).max(rep.max_path_gap), &[]);
        Ok(Outcome::from(w).with_note(format!("{} checked, {} skipped", rep.checked, rep.skipped.len())))
    });
    ctx.rec.upper("zero_tangent.closed", 1e-8, || {
        let (w, _, _) = factored.clone()?;
        let s = fit_structure_functions(&zero_tangent(), &off_axis)?;
        let r = is_closed(&EForm::from_ebivector(&w), &zero_tangent(), &s, &off_axis)?;
        let mut out = Worst::default();
        out.update(r.max_norm, r.witness.as_deref().unwrap_or(&[]));
        Ok(out)
    });
    ctx.rec.upper("zero_tangent.round_trip", 1e-8, || {
        let (w, _, _) = factored.clone()?;
        let back = e_symplectic_to_poisson(&zero_tangent(), &w, &off_axis)?;
        worst_over(&off_axis, |p| Ok(max_diff(&back.matrix(p)?, &x_dx_dy().matrix(p)?)))
    });

    let space = ctx.random(ChartBox::cube(4, 1.5), 32.max(n / 2), 3);
    ctx.rec.upper("four_term.display", 1e-12, || {
        let pi = e_symplectic_to_poisson(&four_term_frame(), &EBivector::constant(4, &(-canonical2())), &[vec![0.0; 4]])?;
        worst_over(&space, |p| Ok(max_diff(&pi.matrix(p)?, &four_term(p))))
    });
    ctx.rec.upper("four_term.opposite_order", 1e-12, || {
        let pi = e_symplectic_to_poisson(&four_term_frame(), &EBivector::constant(4, &canonical2()), &[vec![0.0; 4]])?;
        worst_over(&space, |p| Ok(linalg::max_abs(&(pi.matrix(p)? + four_term(p)))))
    });

    let pair_probes = ctx.random(ChartBox::cube(4, 0.8), n, 4);
    let fit_probes = ctx.random(ChartBox::cube(2, 1.0), 8, 5);
    let cases: [(&str, fn() -> (AnchoredFrame, EBivector)); 2] = [
        ("pair_chart.b_frame", || (b_frame(), scalar_ebivector(|_| Jet::cst(1.0)))),
        ("pair_chart.translations", || (translations(2), scalar_ebivector(|x| x[0]))),
    ];
    for (name, make) in cases {
        let (fr, f) = make();
        let pc = pair_chart_poisson(&fr, &f, ChartBox::cube(2, 0.8), ChartBox::cube(2, 1.0), &fit_probes);
        ctx.rec.upper(&format!("{name}.pushforwards"), 1e-6, || {
            let pc = pc.clone()?;
            let mut w = Worst::default();
            for p in &pair_probes {
                let r = verify_multiplicativity_pushforwards(&pc.pi_hat, &pc.source(), &pc.target(), &pc.base_pi, std::slice::from_ref(p))?;
                w.update(r.max_defect(), p);
            }
            Ok(w)
        });
        ctx.rec.upper(&format!("{name}.jacobiator"), 1e-7, || {
            let pc = pc.clone()?;
            worst_over(&pair_probes[..8], |p| Ok(jacobiator(&pc.pi_hat, p)?.max_abs()))
        });
        ctx.rec.upper(&format!("{name}.zero_section"), 1e-12, || {
            let pc = pc.clone()?;
            worst_over(&fit_probes, |u| {
                let ib = identity_bisection_bivector(&fr, &f, u)?;
                let mut m = Mat::identity(4, 4);
                m.view_mut((0, 0), (2, 2)).copy_from(&f.matrix(u)?);
                Ok(max_diff(&(&m * ib * m.transpose()), &pc.pi_hat.matrix(&[0.0, 0.0, u[0], u[1]])?))
            })
        });
    }
    ctx.rec.flag("pair_chart.rejects_zero_tangent", || {
        let r = pair_chart_poisson(&zero_tangent(), &scalar_ebivector(|x| x[0]), ChartBox::cube(2, 0.5), ChartBox::cube(2, 1.0), &fit_probes[..1]);
        Ok((matches!(r, Err(arpoisson_core::Error::NonCommutingFrame(_))), None))
    });

    // identity bisection against the assembled groupoid bivector at a = b = 0
    let base = ctx.random(ChartBox::cube(2, 1.5), n / 2, 6);
    for m in [1u32, 2] {
        let dual = frame(vec![
            arpoisson_core::tensor::VectorField::coordinate(2, 1),
            arpoisson_core::tensor::VectorField::coordinate(2, 0),
        ]);
        let c = scalar_ebivector(move |x| -x[0].powi(m as i32));
        ctx.rec.upper(&format!("identity_bisection.m{m}"), 1e-9, || {
            let gp = assemble_groupoid_poisson(&FlowModel::ClosedForm(m), None)?;
            worst_over(&base, |u| Ok(max_diff(&identity_bisection_bivector(&dual, &c, u)?, &gp.block4(&[0.0, 0.0, u[0], u[1]])?)))
        });
        ctx.rec.flag(&format!("identity_bisection.m{m}.rank"), || {
            for u in &base {
                let r = linalg::rank(&identity_bisection_bivector(&dual, &c, u)?, 1e-10);
                if r != 4 {
                    return Ok((false, Some(format!("rank {r} at {u:?}"))));
                }
            }
            Ok((true, None))
        });
    }
}
