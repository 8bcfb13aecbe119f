//! Groupoid bivectors of `f d_x ^ d_y` for monomial and sine generators.

use arpoisson_core::flows::*;
use arpoisson_core::linalg::{self, Mat};
use arpoisson_core::probes::{ChartBox, ProbeSpec};
use arpoisson_core::realization::*;
use arpoisson_core::tensor::jacobiator;
use arpoisson_core::tolerances::SEAM;
use arpoisson_core::Jet;

use super::*;
use crate::report::{Outcome, Table, Worst};

/// Chart probes `(a, b, x, y)` on which every sweep generator has a finite flow.
fn sweep_probes(ctx: &Ctx, n: usize, salt: u64) -> Vec<Vec<f64>> {
    let (am, xm) = (ctx.cfg.a_max, ctx.cfg.x_max);
    ProbeSpec::new(ChartBox::new(vec![-am, -1.0, -xm, -1.0], vec![am, 1.0, xm, 1.0]), ctx.seed(salt))
        .admissible(|p| 1.0 - 2.0 * p[0].abs() * p[2].abs().max(p[2] * p[2]) > 0.05)
        .random(n)
        .random_points()
}

/// Probes for `x^m` on the chart `1 - (m-1) a x^(m-1) > 0.05`.
fn monomial_probes(ctx: &Ctx, m: u32, n: usize, salt: u64) -> Vec<Vec<f64>> {
    let (am, xm) = (ctx.cfg.a_max, ctx.cfg.x_max);
    let p = (m - 1) as f64;
    ProbeSpec::new(ChartBox::new(vec![-am, -1.0, -xm, -1.0], vec![am, 1.0, xm, 1.0]), ctx.seed(salt))
        .admissible(move |q| 1.0 - p * q[0] * q[2].powi(m as i32 - 1) > 0.05)
        .random(n)
        .random_points()
}

fn sweep() -> Vec<GeneratorFunction> {
    vec![GeneratorFunction::monomial(1), GeneratorFunction::monomial(2), GeneratorFunction::monomial(3), GeneratorFunction::sine()]
}

fn pi0() -> Mat {
    let mut b = Mat::zeros(2, 2);
    b[(0, 1)] = 1.3;
    b[(1, 0)] = -1.3;
    b
}

/// Appends random `(p, q)` coordinates for a 2-dimensional block.
fn with_block(ctx: &Ctx, probes: &[Vec<f64>], salt: u64) -> Vec<Vec<f64>> {
    let extra = ctx.random(ChartBox::cube(4, 1.0), probes.len(), salt);
    probes.iter().zip(extra).map(|(p, e)| [p.clone(), e].concat()).collect()
}

const COEFFS: [(usize, usize); 4] = [(0, 3), (1, 2), (1, 3), (2, 3)];

fn coefficient_row(m: &Mat) -> [f64; 4] {
    COEFFS.map(|(i, j)| m[(i, j)])
}

pub fn run(ctx: &mut Ctx) {
    let n = ctx.cfg.probes;
    let m = ctx.cfg.m;

    ctx.rec.upper("b_case_oracle", 1e-9, || {
        let f = GeneratorFunction::monomial(1);
        let mut w = Worst::default();
        for i in 0..33 {
            for j in 0..33 {
                let (a, x) = (-2.0 + 4.0 * i as f64 / 32.0, -2.0 + 4.0 * j as f64 / 32.0);
                w.update((solve_F(&f, a, x, &[])? - x * a.exp()).abs(), &[a, x]);
            }
        }
        Ok(w)
    });

    // the m = 2 display: (1, 1 - ax, bx, -x^2)
    let quad = monomial_probes(ctx, 2, n, 20);
    for (label, model) in [("closed", FlowModel::ClosedForm(2)), ("ode", FlowModel::Ode(GeneratorFunction::monomial(2)))] {
        let tol = if label == "closed" { 1e-12 } else { 1e-8 };
        ctx.rec.upper(&format!("display_m2.{label}"), tol, || {
            let gp = assemble_groupoid_poisson(&model, None)?;
            let mut rows = Vec::new();
            let mut w = Worst::default();
            for p in &quad {
                let (a, b, x) = (p[0], p[1], p[2]);
                let mat = gp.pi_g.matrix(p)?;
                let got = coefficient_row(&mat);
                let expect = [1.0, 1.0 - a * x, b * x, -x * x];
                let d = got.iter().zip(expect).fold(mat[(0, 1)].abs().max(mat[(0, 2)].abs()), |acc, (g, e)| acc.max((g - e).abs()));
                w.update(d, p);
                rows.push([p.clone(), got.to_vec()].concat());
            }
            let table = Table { columns: coefficient_columns(), rows };
            Ok(Outcome::from(w).with_table(table))
        });
    }

    // closed forms against the ODE for the configured m
    let mp = monomial_probes(ctx, m, n, 21);
    ctx.rec.upper(&format!("closed_vs_ode.m{m}"), 1e-8, || {
        let closed = assemble_groupoid_poisson(&FlowModel::ClosedForm(m), None)?;
        let ode = assemble_groupoid_poisson(&FlowModel::Ode(GeneratorFunction::monomial(m)), None)?;
        let mut rows = Vec::new();
        let mut w = Worst::default();
        for p in &mp {
            let (c, o) = (closed.pi_g.matrix(p)?, ode.pi_g.matrix(p)?);
            w.update(max_diff(&c, &o), p);
            let (f, g, al) = closed_form_bm(m, p[0], p[2])?;
            rows.push(vec![p[0], p[2], f, g, al]);
        }
        Ok(Outcome::from(w).with_table(Table {
            columns: ["a", "x", "F", "G", "alpha"].map(String::from).to_vec(),
            rows,
        }))
    });
    if let Some(t) = ctx.rec.reports.last().and_then(|r| r.table.clone()) {
        ctx.csv(&format!("bm_closed_forms_m{m}"), &["a", "x", "F", "G", "alpha"], t.rows);
    }
    let coeff_rows = ctx.rec.reports.iter().find(|r| r.check == "display_m2.closed").and_then(|r| r.table.clone());
    if let Some(t) = coeff_rows {
        let cols: Vec<&str> = t.columns.iter().map(String::as_str).collect();
        ctx.csv("bm_coefficients_m2", &cols, t.rows);
    }

    let base = sweep_probes(ctx, n, 22);
    let blocked = with_block(ctx, &base, 23);
    let jac_n = (n / 4).max(8).min(base.len());
    for f in sweep() {
        for (suffix, pi0m, probes) in [("", None, &base), (".pi0", Some(pi0()), &blocked)] {
            let name = f.name();
            let model = FlowModel::Ode(f.clone());
            let gp = assemble_groupoid_poisson(&model, pi0m.as_ref());
            ctx.rec.upper(&format!("jacobi.{name}{suffix}"), 1e-7, || {
                let gp = gp.clone()?;
                worst_over(&probes[..jac_n], |p| Ok(jacobiator(&gp.pi_g, p)?.max_abs()))
            });
            ctx.rec.upper(&format!("pushforwards.{name}{suffix}"), 1e-6, || {
                let gp = gp.clone()?;
                pushforward_worst(&gp, probes)
            });
            ctx.rec.upper(&format!("pfaffian.{name}{suffix}"), 1e-9, || {
                let gp = gp.clone()?;
                let mut pts = probes.clone();
                // a = 0 and x = 0 lie on every chart
                let mut extra = probes[0].clone();
                extra[0] = 0.0;
                pts.push(extra.clone());
                extra[0] = 0.3;
                extra[2] = 0.0;
                pts.push(extra);
                worst_over(&pts, |p| {
                    let pf = linalg::pfaffian(&gp.block4(p)?)?;
                    let al = alpha_of(&f, p[0], p[2], &[])?;
                    Ok(if pf > 0.0 { (pf - al).abs() } else { f64::INFINITY })
                })
            });
        }
    }
    ctx.rec.upper(&format!("pushforwards.closed_m{m}"), 1e-6, || {
        let gp = assemble_groupoid_poisson(&FlowModel::ClosedForm(m), None)?;
        pushforward_worst(&gp, &mp)
    });

    // seam annulus: series and ODE branches agree
    let xs = ctx.random(ChartBox::cube(1, ctx.cfg.x_max), n, 24);
    for f in sweep() {
        ctx.rec.upper(&format!("seam.{}", f.name()), 1e-9, || {
            let mut w = Worst::default();
            for (i, x) in xs.iter().enumerate() {
                let r = 0.5 + 1.5 * (i as f64 + 0.5) / xs.len() as f64;
                let a = if i % 2 == 0 { r * SEAM } else { -r * SEAM };
                let (aj, xj) = (Jet::cst(a), Jet::cst(x[0]));
                let s = quantities_series(&f, aj, xj, &[]);
                let o = quantities_ode(&f, aj, xj, &[])?;
                let d = [(s.f_cap, o.f_cap), (s.g_cap, o.g_cap), (s.alpha, o.alpha), (s.kappa, o.kappa)]
                    .iter()
                    .fold(0.0f64, |acc, (u, v)| acc.max((u.value() - v.value()).abs()));
                w.update(d, &[a, x[0]]);
            }
            Ok(w)
        });
    }
    ctx.rec.upper("seam.exp_mean", 1e-9, || {
        let e = ExpMean;
        let mut w = Worst::default();
        for i in 0..=64 {
            let r = 0.5 + 1.5 * i as f64 / 64.0;
            for a in [r * SEAM, -r * SEAM] {
                w.update((e.value_direct(a) - e.value_series(a)).abs(), &[a]);
            }
        }
        Ok(w)
    });
    ctx.rec.flag("alpha_on_a0_is_one", || {
        for f in sweep() {
            for x in &xs {
                let q = quantities(&f, Jet::cst(0.0), Jet::cst(x[0]), &[])?;
                if alpha_of(&f, 0.0, x[0], &[])? != 1.0 || q.alpha.value() != 1.0 {
                    return Ok((false, Some(format!("{} at x = {}", f.name(), x[0]))));
                }
            }
        }
        for mm in 1..=3 {
            for x in &xs {
                if closed_form_bm(mm, 0.0, x[0])?.2 != 1.0 {
                    return Ok((false, Some(format!("closed form m = {mm} at x = {}", x[0]))));
                }
            }
        }
        Ok((true, None))
    });

    ctx.rec.lower("sign_flip.target_defect", 1e-2, || {
        let gp = assemble_with_alpha_sign(&FlowModel::ClosedForm(1), None, -1.0)?;
        let r = verify_multiplicativity_pushforwards(&gp.pi_g, &gp.source, &gp.target, &gp.base_pi, &base)?;
        let mut w = Worst::default();
        w.update(r.target_defect, r.target_witness.as_deref().unwrap_or(&[]));
        Ok(w)
    });
}

fn coefficient_columns() -> Vec<String> {
    ["a", "b", "x", "y", "pi_a_y", "pi_b_x", "pi_b_y", "pi_x_y"].map(String::from).to_vec()
}

pub(crate) fn pushforward_worst(gp: &GroupoidPoisson, probes: &[Vec<f64>]) -> arpoisson_core::Result<Worst> {
    let r = verify_multiplicativity_pushforwards(&gp.pi_g, &gp.source, &gp.target, &gp.base_pi, probes)?;
    let mut w = Worst::default();
    let wit = if r.source_defect >= r.target_defect { &r.source_witness } else { &r.target_witness };
    w.update(r.max_defect(), wit.as_deref().unwrap_or(&[]));
    Ok(w)
}
