//! The algebroid differential on E-forms and the closed-duals criterion.

use arpoisson_core::eform::*;
use arpoisson_core::linalg::{self, Mat};
use arpoisson_core::probes::ChartBox;
use arpoisson_core::tensor::ScalarField;
use arpoisson_core::Jet;

use super::*;
use crate::report::Worst;

fn dual_pairs(base: usize, rank: usize) -> Vec<(EForm, EForm)> {
    (0..rank / 2).map(|i| (EForm::dual(base, rank, 2 * i), EForm::dual(base, rank, 2 * i + 1))).collect()
}

pub fn run(ctx: &mut Ctx) {
    let n = ctx.cfg.probes;
    // anchors of the singular frames are injective away from x = 0
    let off2 = ctx.random(ChartBox::new(vec![0.2, -1.5], vec![1.5, 1.5]), n / 4, 50);
    let off4 = ctx.random(ChartBox::new(vec![0.2, -1.0, -1.0, -1.0], vec![1.5, 1.0, 1.0, 1.0]), n / 4, 51);

    let fixtures: Vec<(&str, AnchoredFrame, &Vec<Vec<f64>>, Option<(bool, bool)>)> = vec![
        ("b_frame", b_frame(), &off2, Some((true, true))),
        ("zero_tangent", zero_tangent(), &off2, Some((false, false))),
        ("translations2", translations(2), &off2, None),
        ("translations4", translations(4), &off4, None),
        ("quadratic", quadratic(), &off2, None),
        ("quadratic_commuting", quadratic_commuting(), &off2, None),
    ];
    let mut outcomes = Vec::new();
    for (name, fr, pts, expect) in &fixtures {
        let r = closedness_commutativity_check(fr, &dual_pairs(fr.dim(), fr.rank()), pts);
        if let Some(e) = expect {
            let r = r.clone();
            ctx.rec.flag(&format!("darboux.{name}"), || {
                let r = r?;
                let got = (r.all_duals_closed, r.frame_commutes);
                Ok((got == *e, Some(format!("(closed duals, commuting) = {got:?}"))))
            });
        }
        outcomes.push((name.to_string(), r));
    }
    ctx.rec.flag("darboux.agreement", || {
        let mut notes = Vec::new();
        let mut ok = true;
        for (name, r) in outcomes {
            let r = r?;
            ok &= r.all_duals_closed == r.frame_commutes;
            notes.push(format!("{name}: {}/{}", r.all_duals_closed, r.frame_commutes));
        }
        Ok((ok, Some(notes.join(", "))))
    });

    for (name, fr, pts, _) in &fixtures {
        ctx.rec.upper(&format!("structure_functions.{name}"), 1e-7, || {
            let s = fit_structure_functions(fr, pts)?;
            let mut w = Worst::default();
            w.update(s.report.max_residual, &[]);
            Ok(w)
        });
    }

    let h3 = ctx.random(ChartBox::cube(3, 1.0), n / 4, 52);
    let forms3 = [
        ("function", EForm::function(&ScalarField::new(3, |x| (x[0] * x[1]).sin() + x[2] * x[2] * x[0]), 3)),
        ("one_form", EForm::new(3, 3, 1, |x| vec![x[1] * x[2], x[0].exp(), x[0] * x[1] - x[2]]).expect("degree 1")),
    ];
    for (name, form) in forms3 {
        ctx.rec.upper(&format!("d_squared.heisenberg.{name}"), 1e-7, || d_squared(&heisenberg(), &form, &h3));
    }
    let forms2 = [
        ("function", EForm::function(&ScalarField::new(2, |x| x[0] * x[1].cos() + x[0] * x[0]), 2)),
        ("one_form", EForm::new(2, 2, 1, |x| vec![x[0] * x[1], x[1].sin() + Jet::cst(0.5)]).expect("degree 1")),
    ];
    for (fname, fr) in [("b_frame", b_frame()), ("zero_tangent", zero_tangent())] {
        for (name, form) in &forms2 {
            ctx.rec.upper(&format!("d_squared.{fname}.{name}"), 1e-7, || d_squared(&fr, form, &off2));
        }
    }

    let mats = ctx.random(ChartBox::cube(6, 2.0), 16, 53);
    ctx.rec.upper("gram_schmidt.normalizes", 1e-10, || {
        let mut w = Worst::default();
        for v in &mats {
            let mut m = Mat::zeros(4, 4);
            let mut t = 0;
            for i in 0..4 {
                for j in (i + 1)..4 {
                    m[(i, j)] = v[t];
                    m[(j, i)] = -v[t];
                    t += 1;
                }
            }
            if m.clone().determinant().abs() < 1e-3 {
                continue;
            }
            let b = symplectic_gram_schmidt(&m)?;
            w.update(linalg::max_abs(&(b.transpose() * &m * &b - canonical_block(4))), v);
        }
        Ok(w)
    });
}

fn d_squared(fr: &AnchoredFrame, form: &EForm, pts: &[Vec<f64>]) -> arpoisson_core::Result<Worst> {
    let s = fit_structure_functions(fr, pts)?;
    let dd = algebroid_d_form(&algebroid_d_form(form, fr, &s)?, fr, &s)?;
    worst_over(pts, |p| Ok(dd.at(p)?.iter().fold(0.0f64, |m, v| m.max(v.abs()))))
}
