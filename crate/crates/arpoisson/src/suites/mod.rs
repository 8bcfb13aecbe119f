//! Verification suites. Each one records its checks on a shared [`Ctx`].

use arpoisson_core::cosymplectic::CosymplecticStructure;
use arpoisson_core::groupoid::AnchoredFrame;
use arpoisson_core::linalg::Mat;
use arpoisson_core::probes::{ChartBox, ProbeSpec};
use arpoisson_core::realization::EBivector;
use arpoisson_core::tensor::{Bivec, BivectorField, VectorField};
use arpoisson_core::Jet;

use crate::config::{RunConfig, Suite};
use crate::report::{Recorder, Worst};

mod bm;
mod cosym;
mod desing;
mod eform;
mod groupoid;
mod poisson;

/// A CSV grid produced by a suite, written next to the report.
#[derive(Clone, Debug)]
pub struct CsvTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub rec: Recorder,
    pub csvs: Vec<CsvTable>,
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Ctx { cfg, rec: Recorder::new(cfg.tol_scale), csvs: Vec::new() }
    }

    /// A probe seed derived from the run seed, distinct per call site.
    pub fn seed(&self, salt: u64) -> u64 {
        self.cfg.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(salt)
    }

    pub fn random(&self, chart: ChartBox, n: usize, salt: u64) -> Vec<Vec<f64>> {
        ProbeSpec::new(chart, self.seed(salt)).random(n).random_points()
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<f64>>) {
        self.csvs.push(CsvTable { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows });
    }
}

pub fn run(cfg: &RunConfig) -> Ctx<'_> {
    let mut ctx = Ctx::new(cfg);
    for s in cfg.suite.members() {
        ctx.rec.set_suite(s.name());
        match s {
            Suite::Poisson => poisson::run(&mut ctx),
            Suite::Groupoid => groupoid::run(&mut ctx),
            Suite::Bm => bm::run(&mut ctx),
            Suite::Desing => desing::run(&mut ctx),
            Suite::Cosymplectic => cosym::run(&mut ctx),
            Suite::Eform => eform::run(&mut ctx),
            Suite::All => unreachable!("members() expands all"),
        }
    }
    ctx
}

pub(crate) fn max_diff(a: &Mat, b: &Mat) -> f64 {
    arpoisson_core::linalg::max_abs(&(a - b))
}

pub(crate) fn worst_over<F>(points: &[Vec<f64>], mut f: F) -> arpoisson_core::Result<Worst>
where
    F: FnMut(&[f64]) -> arpoisson_core::Result<f64>,
{
    let mut w = Worst::default();
    for p in points {
        w.update(f(p)?, p);
    }
    Ok(w)
}

pub(crate) fn frame(fields: Vec<VectorField>) -> AnchoredFrame {
    AnchoredFrame::new(fields).expect("fixture frames are well formed")
}

pub fn canonical2() -> Mat {
    Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

pub fn translations(n: usize) -> AnchoredFrame {
    frame((0..n).map(|i| VectorField::coordinate(n, i)).collect())
}

/// `{x d_x, d_y}`: fields tangent to `x = 0`.
pub fn b_frame() -> AnchoredFrame {
    frame(vec![VectorField::new(2, |x| vec![x[0], Jet::cst(0.0)]), VectorField::coordinate(2, 1)])
}

/// `{x d_x, x d_y}`: vanishes on `x = 0` and does not commute.
pub fn zero_tangent() -> AnchoredFrame {
    frame(vec![
        VectorField::new(2, |x| vec![x[0], Jet::cst(0.0)]),
        VectorField::new(2, |x| vec![Jet::cst(0.0), x[0]]),
    ])
}

/// `{x^2 d_x, -x^2 d_y}`, the groupoid frame of `f = x^2`; not commuting.
pub fn quadratic() -> AnchoredFrame {
    frame(vec![
        VectorField::new(2, |x| vec![x[0] * x[0], Jet::cst(0.0)]),
        VectorField::new(2, |x| vec![Jet::cst(0.0), -(x[0] * x[0])]),
    ])
}

/// `{x^2 d_x, d_y}`, commuting.
pub fn quadratic_commuting() -> AnchoredFrame {
    frame(vec![VectorField::new(2, |x| vec![x[0] * x[0], Jet::cst(0.0)]), VectorField::coordinate(2, 1)])
}

/// `{x d_x + w d_w, y d_y + z d_z}` on `(x, y, z, w)`.
pub fn four_term_frame() -> AnchoredFrame {
    frame(vec![
        VectorField::new(4, |x| vec![x[0], Jet::cst(0.0), Jet::cst(0.0), x[3]]),
        VectorField::new(4, |x| vec![Jet::cst(0.0), x[1], x[2], Jet::cst(0.0)]),
    ])
}

/// `{d_x, d_y + x d_z, d_z}`: involutive with a nonzero structure function.
pub fn heisenberg() -> AnchoredFrame {
    frame(vec![
        VectorField::coordinate(3, 0),
        VectorField::new(3, |x| vec![Jet::cst(0.0), Jet::cst(1.0), x[0]]),
        VectorField::coordinate(3, 2),
    ])
}

pub fn x_dx_dy() -> BivectorField {
    BivectorField::new(2, |x| {
        let mut b = Bivec::zeros(2);
        b.set(0, 1, x[0]);
        b
    })
}

pub fn scalar_ebivector(c: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> EBivector {
    EBivector::new(2, 2, move |x| {
        let mut b = Bivec::zeros(2);
        b.set(0, 1, c(x));
        b
    })
}

/// `omega = (1 + z^2) dz ^ dw + dq ^ d(zw)`, `alpha = dq + d(w sin z)` on `(q, z, w)`.
pub fn curved_cosymplectic() -> CosymplecticStructure {
    let omega = BivectorField::new(3, |x| {
        let mut b = Bivec::zeros(3);
        b.set(1, 2, 1.0 + x[1] * x[1]);
        b.set(0, 1, x[2]);
        b.set(0, 2, x[1]);
        b
    });
    let alpha = VectorField::new(3, |x| vec![Jet::cst(1.0), x[2] * x[1].cos(), x[1].sin()]);
    CosymplecticStructure::new(omega, alpha).expect("fixture is cosymplectic")
}
