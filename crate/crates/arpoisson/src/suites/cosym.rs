//! Cosymplectic structures, their Reeb fields and the symplectization chart.

use arpoisson_core::cosymplectic::*;
use arpoisson_core::linalg;
use arpoisson_core::probes::ChartBox;
use arpoisson_core::tensor::{jacobiator, pushforward_bivector};

use super::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn run(ctx: &mut Ctx) {
    let n = ctx.cfg.probes;
    let pts = ctx.random(ChartBox::cube(3, 0.8), n, 40);
    let torus = identity_mapping_torus(&canonical2());

    ctx.flag_valid("validate.mapping_torus", &torus.as_ref().map(|t| t.0.clone()).map_err(Clone::clone), &pts);
    ctx.flag_valid("validate.curved", &Ok(curved_cosymplectic()), &pts);

    ctx.rec.upper("reeb.mapping_torus", 1e-10, || {
        let (c, _, _) = torus.clone()?;
        worst_over(&pts, |p| {
            let k = reeb_field(&c, p)?;
            Ok((k[0] - 1.0).abs().max(k[1].abs()).max(k[2].abs()))
        })
    });
    ctx.rec.upper("reeb.curved", 1e-10, || {
        let c = curved_cosymplectic();
        worst_over(&pts, |p| {
            let k = reeb_field(&c, p)?;
            let w = c.omega.matrix(p)?;
            let ik = (0..3).map(|j| (0..3).map(|i| k[i] * w[(i, j)]).sum::<f64>().abs()).fold(0.0, f64::max);
            Ok(ik.max((dot(&c.alpha.at(p)?, &k) - 1.0).abs()))
        })
    });
    for (name, c) in [("mapping_torus", torus.clone().map(|t| t.0)), ("curved", Ok(curved_cosymplectic()))] {
        ctx.rec.upper(&format!("induced.jacobiator.{name}"), 1e-9, || {
            let pi = c?.induced_poisson_field();
            worst_over(&pts, |p| Ok(jacobiator(&pi, p)?.max_abs()))
        });
    }

    let chart5 = ctx.random(ChartBox::cube(5, 1.0), n, 41);
    let forms = torus.clone().and_then(|(c, s, t)| Ok((pair_chart_cosym_forms(&c, &s, &t, &chart5)?, c, s, t)));
    ctx.rec.upper("pair_chart.closed", 1e-9, || {
        let ((wh, ah), ..) = forms.clone()?;
        worst_over(&chart5, |p| Ok(d_two_form_max(&wh, p)?.max(linalg::max_abs(&d_one_form(&ah, p)?))))
    });

    let ps = ctx.random(ChartBox::cube(1, 1.0), n, 42);
    let chart6: Vec<Vec<f64>> = chart5
        .iter()
        .zip(&ps)
        .flat_map(|(q, p)| [[p.clone(), q.clone()].concat(), [vec![0.0], q.clone()].concat()])
        .collect();
    let sympl = forms.clone().and_then(|((wh, ah), ..)| symplectization_form(&wh, &ah, &chart6));
    ctx.rec.upper("symplectization.closed", 1e-9, || {
        let ch = sympl.clone()?;
        worst_over(&chart6, |p| d_two_form_max(&ch.form, p))
    });
    ctx.rec.upper("symplectization.pfaffian", 1e-9, || {
        let ch = sympl.clone()?;
        worst_over(&chart6, |p| Ok((linalg::pfaffian(&ch.form.matrix(p)?)?.abs() - 1.0).abs()))
    });
    for (name, sign) in [("target", 1.0), ("source", -1.0)] {
        ctx.rec.upper(&format!("symplectization.{name}_pushforward"), 1e-9, || {
            let ch = sympl.clone()?;
            let (_, c, s, t) = forms.clone()?;
            let map = ch.lift(if sign > 0.0 { &t } else { &s });
            let pit = dual_bivector(&ch.form);
            let pim = c.induced_poisson_field();
            worst_over(&chart6, |p| {
                let pushed = pushforward_bivector(&map, &pit, p)?;
                Ok(linalg::max_abs(&(pushed - pim.at_image(&map, p)? * sign)))
            })
        });
    }
}

impl Ctx<'_> {
    fn flag_valid(&mut self, check: &str, c: &arpoisson_core::Result<CosymplecticStructure>, pts: &[Vec<f64>]) {
        self.rec.flag(check, || Ok((validate(c.as_ref().map_err(Clone::clone)?, pts)?, None)));
    }
}
