//! Plot-ready grids: `alpha(a, x)`, groupoid bivector coefficients, `g_eps`.

use arpoisson_core::desing::{build_h, g_eps};
use arpoisson_core::flows::{alpha_of, closed_form_bm, GeneratorFunction};
use arpoisson_core::realization::{assemble_groupoid_poisson, FlowModel};

use crate::config::{GeneratorKind, Quantity, RunConfig};

pub struct Grid {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

/// `n` evenly spaced nodes on `[-r, r]`; a single node sits at 0.
pub fn linspace(r: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| -r + 2.0 * r * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Monomials use the closed forms, the sine generator the flow ODE.
fn alpha_at(cfg: &RunConfig, a: f64, x: f64) -> f64 {
    let r = match cfg.generator {
        GeneratorKind::Monomial => closed_form_bm(cfg.m, a, x).map(|q| q.2),
        GeneratorKind::Sine => alpha_of(&GeneratorFunction::sine(), a, x, &[]),
    };
    r.unwrap_or(f64::NAN)
}

/// Points where a quantity cannot be evaluated (outside the flow chart) are `NaN`.
pub fn compute(cfg: &RunConfig) -> arpoisson_core::Result<Grid> {
    let a_nodes = linspace(cfg.a_max, cfg.nodes);
    let x_nodes = linspace(cfg.x_max, cfg.nodes);
    match cfg.quantity {
        Quantity::Alpha => {
            let mut rows = Vec::new();
            for &a in &a_nodes {
                for &x in &x_nodes {
                    rows.push(vec![a, x, alpha_at(cfg, a, x)]);
                }
            }
            Ok(Grid { name: "alpha", columns: vec!["a", "x", "alpha"], rows })
        }
        Quantity::Pi => {
            let model = match cfg.generator {
                GeneratorKind::Monomial => FlowModel::ClosedForm(cfg.m),
                GeneratorKind::Sine => FlowModel::Ode(GeneratorFunction::sine()),
            };
            let gp = assemble_groupoid_poisson(&model, None)?;
            let mut rows = Vec::new();
            for &a in &a_nodes {
                for &x in &x_nodes {
                    let p = [a, 1.0, x, 0.0];
                    let c = match gp.pi_g.matrix(&p) {
                        Ok(m) => [m[(0, 3)], m[(1, 2)], m[(1, 3)], m[(2, 3)]],
                        Err(_) => [f64::NAN; 4],
                    };
                    rows.push([p.to_vec(), c.to_vec()].concat());
                }
            }
            Ok(Grid { name: "pi", columns: vec!["a", "b", "x", "y", "pi_a_y", "pi_b_x", "pi_b_y", "pi_x_y"], rows })
        }
        Quantity::GEps => {
            let base = build_h(cfg.k)?;
            let mut rows = Vec::new();
            for &e in &cfg.eps {
                let fam = base.with_eps(e)?;
                for &x in &x_nodes {
                    rows.push(vec![e, x, g_eps(&fam, x)]);
                }
            }
            Ok(Grid { name: "g_eps", columns: vec!["eps", "x", "g_eps"], rows })
        }
    }
}
