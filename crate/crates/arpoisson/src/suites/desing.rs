//! The desingularized family `x^{2k} + g_eps` and its convergence as `eps -> 0`.

use arpoisson_core::desing::*;
use arpoisson_core::flows::{alpha_of, solve_F};
use arpoisson_core::linalg;
use arpoisson_core::probes::ChartBox;
use arpoisson_core::realization::assemble_groupoid_poisson;
use arpoisson_core::tensor::jacobiator;

use super::*;
use crate::report::{Outcome, Table, Worst};

const CONVERGENCE_EPS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

pub fn run(ctx: &mut Ctx) {
    let n = ctx.cfg.probes;
    let k = ctx.cfg.k;
    let base = match build_h(k) {
        Ok(b) => b,
        Err(e) => {
            ctx.rec.flag("h.build", || Err(e));
            return;
        }
    };

    ctx.rec.upper("h.profile", 1e-12, || {
        let h = &base.h;
        let odd = 2.0 * k as f64 - 1.0;
        let mut w = Worst::default();
        for i in 0..=400 {
            let x = -3.0 + 6.0 * i as f64 / 400.0;
            w.update((h.h(x) + h.h(-x)).abs(), &[x]);
            if x.abs() <= 1.0 && h.h_prime(x) <= 0.0 {
                w.update(f64::INFINITY, &[x]);
            }
            if x.abs() > 1.0 {
                let tail = x.signum() * 2.0 - 1.0 / (odd * x.powf(odd));
                w.update((h.h(x) - tail).abs(), &[x]);
            }
        }
        w.update((h.h(1.0) - (2.0 - 1.0 / odd)).abs(), &[1.0]);
        Ok(w)
    });

    for &eps in &ctx.cfg.eps.clone() {
        let tag = format!("eps={eps}");
        let fam = match base.with_eps(eps) {
            Ok(f) => f,
            Err(e) => {
                ctx.rec.flag(&format!("family.{tag}"), || Err(e));
                continue;
            }
        };
        let e2 = eps * eps;
        let inside: Vec<f64> = (0..=200).map(|i| -e2 + 2.0 * e2 * i as f64 / 200.0).collect();
        ctx.rec.flag(&format!("g_eps.zero_outside.{tag}"), || {
            for i in 0..=200 {
                let x = e2 + (1.0 - e2) * i as f64 / 200.0;
                for y in [x, -x] {
                    if g_eps(&fam, y) != 0.0 {
                        return Ok((false, Some(format!("g_eps({y}) = {}", g_eps(&fam, y)))));
                    }
                }
            }
            Ok((true, None))
        });
        ctx.rec.upper(&format!("g_eps.at_zero.{tag}"), 1e-10, || {
            let mut w = Worst::default();
            w.update((g_eps(&fam, 0.0) - eps.powi(4 * k as i32) / fam.h.h_prime(0.0)).abs(), &[0.0]);
            Ok(w)
        });
        ctx.rec.flag(&format!("g_eps.nonnegative.{tag}"), || {
            let bad = inside.iter().find(|&&x| g_eps(&fam, x) < 0.0);
            Ok((bad.is_none(), bad.map(|x| format!("negative at x = {x}"))))
        });

        let ax = ctx.random(ChartBox::new(vec![-0.4, -0.3], vec![0.4, 0.3]), n, 30);
        let mut ax_pts = ax.clone();
        ax_pts.extend([vec![0.2, 0.0], vec![-0.3, 0.0], vec![0.25, 0.3 * e2], vec![0.35, -0.5 * e2]]);
        let gen = fam.generator();
        ctx.rec.upper(&format!("alpha_vs_flow.{tag}"), 1e-7, || {
            worst_over(&ax_pts, |p| Ok((desing_alpha(&fam, p[0], p[1])? - alpha_of(&gen, p[0], p[1], &[])?).abs()))
        });
        ctx.rec.upper(&format!("F_vs_flow.{tag}"), 1e-8, || {
            worst_over(&ax_pts, |p| Ok((desing_F(&fam, p[0], p[1])? - solve_F(&gen, p[0], p[1], &[])?).abs()))
        });

        let quad: Vec<Vec<f64>> = ctx
            .random(ChartBox::new(vec![-0.3, -1.0, -1.0, -1.0], vec![0.3, 1.0, 1.0, 1.0]), n / 2, 31)
            .into_iter()
            .chain([vec![0.0, 0.2, 0.1, -0.3], vec![0.01, 0.2, 0.1, -0.3], vec![0.0, 0.0, 0.0, 0.0]])
            .collect();
        ctx.rec.upper(&format!("jacobiator.{tag}"), 1e-9, || {
            let pi = fam.poisson(Some(&canonical2()));
            worst_over(&quad, |p| Ok(jacobiator(&pi, p)?.max_abs()))
        });

        let probes: Vec<Vec<f64>> = ctx
            .random(ChartBox::new(vec![-0.4, -1.0, -0.3, -1.0], vec![0.4, 1.0, 0.3, 1.0]), n, 32)
            .into_iter()
            .chain([
                vec![0.3, 0.7, 0.0, 0.1],
                vec![-0.4, -0.2, 0.0, 0.5],
                vec![-1e-5, 0.7, 0.0, 0.1],
                vec![0.2, 0.1, 0.2 * e2, 0.0],
            ])
            .collect();
        let gp = assemble_groupoid_poisson(&fam.flow_model(), None);
        ctx.rec.upper(&format!("pushforwards.{tag}"), 1e-6, || super::bm::pushforward_worst(&gp.clone()?, &probes));
        ctx.rec.upper(&format!("pfaffian.{tag}"), 1e-9, || {
            let gp = gp.clone()?;
            worst_over(&probes, |p| {
                let pf = linalg::pfaffian(&gp.block4(p)?)?;
                let al = desing_alpha(&fam, p[0], p[2])?;
                Ok(if pf > 0.0 { (pf - al).abs() } else { f64::INFINITY })
            })
        });
    }

    // sup |g_eps^(j)| on [-0.2, 0.2] decays like eps^(4k - 2j)
    let grid: Vec<f64> = (0..=4000).map(|i| -0.2 + 0.4 * i as f64 / 4000.0).collect();
    let report = convergence_report(k, &CONVERGENCE_EPS, &grid);
    let mut columns = vec!["eps".to_string()];
    columns.extend((0..2 * k).map(|j| format!("sup_g{j}")));
    let table = report.as_ref().ok().map(|r| Table {
        columns: columns.clone(),
        rows: r.eps.iter().zip(&r.sup).map(|(e, s)| [vec![*e], s.clone()].concat()).collect(),
    });
    for j in 0..2usize {
        let expect = 4.0 * k as f64 - 2.0 * j as f64;
        let tol = if j == 0 { 0.8 } else { 0.4 };
        let (rep, table) = (report.clone(), table.clone());
        ctx.rec.upper(&format!("convergence.order{j}"), tol, || {
            let r = rep?;
            let mut w = Worst::default();
            w.update((r.orders[j] - expect).abs(), &[]);
            let mut o = Outcome::from(w).with_note(format!("observed order {}", r.orders[j]));
            if j == 0 {
                o = o.with_table(table.expect("report succeeded"));
            }
            Ok(o)
        });
    }
    let rep = report.clone();
    ctx.rec.flag("convergence.strictly_decreasing", || Ok((rep?.strictly_decreasing(), None)));
    if let Some(t) = table {
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        ctx.csv(&format!("desing_convergence_k{k}"), &cols, t.rows);
    }
}
