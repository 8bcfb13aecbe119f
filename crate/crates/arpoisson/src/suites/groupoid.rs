//! Chart groupoids of anchored frames: axioms, commutativity, worked targets.

use arpoisson_core::groupoid::{verify_commutative_frame, Arrow, AxiomReport, ChartGroupoid};
use arpoisson_core::probes::{ChartBox, Locus, ProbeSpec};

use super::*;
use crate::report::Worst;

fn chart(f: AnchoredFrame, r: f64) -> arpoisson_core::Result<ChartGroupoid> {
    ChartGroupoid::new(f, ChartBox::cube(2, r), ChartBox::cube(2, 3.0))
}

fn axiom_worst(r: &AxiomReport, probes: &[Vec<f64>], value: f64) -> Worst {
    let mut w = Worst::default();
    w.update(value, probes.get(r.witness).map(Vec::as_slice).unwrap_or(&[]));
    w
}

pub fn run(ctx: &mut Ctx) {
    let n = ctx.cfg.probes;
    for (name, f) in [("translations", translations(2)), ("b_frame", b_frame())] {
        let salt = ctx.seed(10);
        ctx.rec.upper(&format!("axioms.{name}"), 1e-7, || {
            let g = chart(f, 1.5)?;
            let probes = g.axiom_probes(salt, n);
            let r = g.verify_axioms(&probes)?;
            Ok(axiom_worst(&r, &probes, r.max_defect()))
        });
    }
    let salt = ctx.seed(11);
    ctx.rec.lower("axioms.zero_tangent.target_of_composition", 1e-3, || {
        let g = chart(zero_tangent(), 1.5)?;
        let probes = g.axiom_probes(salt, n);
        let r = g.verify_axioms(&probes)?;
        Ok(axiom_worst(&r, &probes, r.target_of_composition))
    });

    let plane = ctx.random(ChartBox::cube(2, 1.5), n, 12);
    for (name, f, expect) in [
        ("translations", translations(2), true),
        ("b_frame", b_frame(), true),
        ("quadratic_commuting", quadratic_commuting(), true),
        ("zero_tangent", zero_tangent(), false),
        ("quadratic", quadratic(), false),
    ] {
        ctx.rec.flag(&format!("commuting.{name}"), || {
            let (ok, m) = verify_commutative_frame(&f, &plane)?;
            Ok((ok == expect, Some(format!("commutes: {ok}, max bracket {m:e}"))))
        });
    }

    ctx.rec.upper("target.b_frame_composition", 1e-9, || {
        let g = chart(b_frame(), 3.0)?;
        let e = std::f64::consts::E;
        let h = Arrow::new(vec![1.0, 0.0], vec![2.0, 0.0]);
        let gg = Arrow::new(vec![1.0, 1.0], vec![2.0 * e, 0.0]);
        let c = g.compose(&gg, &h)?;
        let t = g.target(&c)?;
        let mut w = Worst::default();
        let d = (c.v[0] - 2.0).abs() + (c.v[1] - 1.0).abs() + (t[0] - 2.0 * e * e).abs() + (t[1] - 1.0).abs();
        w.update(d, &c.coords());
        Ok(w)
    });
    let quad_probes = ProbeSpec::new(ChartBox::new(vec![-0.4, -0.4, -1.0, -1.0], vec![0.4, 0.4, 1.0, 1.0]), ctx.seed(13))
        .admissible(|p| 1.0 - p[0] * p[2] > 0.05)
        .random(n)
        .random_points();
    ctx.rec.upper("target.quadratic", 1e-9, || {
        let g = chart(quadratic(), 0.4)?;
        worst_over(&quad_probes, |p| {
            let (a, b, x, y) = (p[0], p[1], p[2], p[3]);
            let t = g.target(&Arrow::new(vec![a, b], vec![x, y]))?;
            let d = 1.0 - a * x;
            Ok((t[0] - x / d).abs().max((t[1] - (-b * x * x / d + y)).abs()))
        })
    });

    let off = ProbeSpec::new(ChartBox::new(vec![-1.0, -1.0, 0.2, -1.0], vec![1.0, 1.0, 2.0, 1.0]), ctx.seed(14))
        .avoid(Locus::Hyperplane { coord: 2, value: 0.0 })
        .random(n.min(40))
        .random_points();
    ctx.rec.flag("pair_map.separates_off_axis", || {
        let g = chart(b_frame(), 1.0)?;
        let arrows: Vec<Arrow> = off.iter().map(|p| Arrow::new(p[..2].to_vec(), p[2..].to_vec())).collect();
        let s = g.pair_separation(&arrows)?;
        Ok((s > 0.0, Some(format!("min separation {s:e}"))))
    });
    ctx.rec.flag("pair_map.collapses_on_axis", || {
        let g = chart(b_frame(), 1.0)?;
        let arrows = [Arrow::new(vec![0.1, 0.0], vec![0.0, 0.0]), Arrow::new(vec![0.5, 0.0], vec![0.0, 0.0])];
        Ok((g.pair_separation(&arrows)? == 0.0, None))
    });
}
