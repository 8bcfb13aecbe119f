//! Local groupoid of a commutative frame: arrows `(v, u)` in `R^k x U`,
//! source `u`, target the time-one flow of `sum v_i X_i`, composition by
//! adding the `v` parts.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flows::{time1_flow, time1_flow_jet};
use crate::linalg::{self, Mat};
use crate::probes::{ChartBox, ProbeSpec};
use crate::tensor::{lie_bracket, SmoothMap, VectorField};
use crate::tolerances::{COMMUTING, COMPOSABLE};

#[derive(Clone)]
pub struct AnchoredFrame {
    dim: usize,
    fields: Vec<VectorField>,
}

impl AnchoredFrame {
    pub fn new(fields: Vec<VectorField>) -> Result<Self> {
        let dim = fields.first().map(VectorField::dim).ok_or_else(|| Error::InvalidArgument("empty frame".into()))?;
        if let Some(f) = fields.iter().find(|f| f.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
        }
        Ok(AnchoredFrame { dim, fields })
    }

    /// Base chart dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators.
    pub fn rank(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    /// `n x k` matrix whose columns are the anchored generators at `p`.
    pub fn anchor_matrix(&self, p: &[f64]) -> Result<Mat> {
        let mut m = Mat::zeros(self.dim, self.rank());
        for (c, f) in self.fields.iter().enumerate() {
            for (r, x) in f.at(p)?.into_iter().enumerate() {
                m[(r, c)] = x;
            }
        }
        Ok(m)
    }

    pub fn independent_at(&self, p: &[f64]) -> Result<bool> {
        Ok(linalg::rank(&self.anchor_matrix(p)?, 1e-10) == self.rank())
    }

    pub fn bracket(&self, i: usize, j: usize, p: &[f64]) -> Result<Vec<f64>> {
        lie_bracket(&self.fields[i], &self.fields[j], p)
    }

    /// Largest bracket norm over all pairs at `p`.
    pub fn max_bracket(&self, p: &[f64]) -> Result<f64> {
        let mut m = 0.0f64;
        for i in 0..self.rank() {
            for j in (i + 1)..self.rank() {
                m = m.max(norm(&self.bracket(i, j, p)?));
            }
        }
        Ok(m)
    }
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Checks `[X_i, X_j] = 0` at every probe. Returns the verdict and the
/// largest bracket norm seen.
pub fn verify_commutative_frame(frame: &AnchoredFrame, probes: &[Vec<f64>]) -> Result<(bool, f64)> {
    let mut m = 0.0f64;
    for p in probes {
        m = m.max(frame.max_bracket(p)?);
    }
    Ok((m < COMMUTING, m))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arrow {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
}

impl Arrow {
    pub fn new(v: Vec<f64>, u: Vec<f64>) -> Self {
        Arrow { v, u }
    }

    /// Flattened `(v, u)` coordinates.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = self.v.clone();
        c.extend_from_slice(&self.u);
        c
    }
}

#[derive(Clone)]
pub struct ChartGroupoid {
    frame: AnchoredFrame,
    arrows: ChartBox,
    base: ChartBox,
}

#[derive(Clone, Debug, Default)]
pub struct AxiomReport {
    pub target_of_composition: f64,
    pub source_of_composition: f64,
    pub associativity: f64,
    pub inverse: f64,
    /// Probe index of the worst target-of-composition defect.
    pub witness: usize,
    pub probes: usize,
}

impl AxiomReport {
    pub fn max_defect(&self) -> f64 {
        self.target_of_composition
            .max(self.source_of_composition)
            .max(self.associativity)
            .max(self.inverse)
    }
}

impl ChartGroupoid {
    /// `arrows` bounds the `v` part, `base` the chart `U'`.
    pub fn new(frame: AnchoredFrame, arrows: ChartBox, base: ChartBox) -> Result<Self> {
        if arrows.dim() != frame.rank() {
            return Err(Error::DimensionMismatch { expected: frame.rank(), found: arrows.dim() });
        }
        if base.dim() != frame.dim() {
            return Err(Error::DimensionMismatch { expected: frame.dim(), found: base.dim() });
        }
        if !arrows.contains(&alloc::vec![0.0; frame.rank()]) {
            return Err(Error::InvalidArgument("arrow box must contain the zero section".into()));
        }
        Ok(ChartGroupoid { frame, arrows, base })
    }

    pub fn frame(&self) -> &AnchoredFrame {
        &self.frame
    }

    pub fn arrow_box(&self) -> &ChartBox {
        &self.arrows
    }

    pub fn base_box(&self) -> &ChartBox {
        &self.base
    }

    pub fn identity(&self, u: &[f64]) -> Arrow {
        Arrow::new(alloc::vec![0.0; self.frame.rank()], u.to_vec())
    }

    pub fn source(&self, g: &Arrow) -> Vec<f64> {
        g.u.clone()
    }

    pub fn target(&self, g: &Arrow) -> Result<Vec<f64>> {
        time1_flow(self.frame.fields(), &g.v, &g.u)
    }

    pub fn compose(&self, g: &Arrow, h: &Arrow) -> Result<Arrow> {
        let gap = dist(&self.source(g), &self.target(h)?);
        if gap >= COMPOSABLE {
            return Err(Error::NotComposable(gap));
        }
        let v: Vec<f64> = g.v.iter().zip(&h.v).map(|(a, b)| a + b).collect();
        if !self.arrows.contains(&v) {
            return Err(Error::OutOfChart("composite leaves the arrow box".into()));
        }
        Ok(Arrow::new(v, h.u.clone()))
    }

    pub fn inverse(&self, g: &Arrow) -> Result<Arrow> {
        Ok(Arrow::new(g.v.iter().map(|x| -x).collect(), self.target(g)?))
    }

    /// Source as a map on the flattened chart `R^k x U`.
    pub fn source_map(&self) -> SmoothMap {
        let k = self.frame.rank();
        let n = self.frame.dim();
        SmoothMap::projection(k + n, (k..k + n).collect())
    }

    /// Target as a map on the flattened chart `R^k x U`.
    pub fn target_map(&self) -> SmoothMap {
        let k = self.frame.rank();
        let n = self.frame.dim();
        let fields = self.frame.fields().to_vec();
        SmoothMap::new(k + n, n, move |z| {
            time1_flow_jet(&fields, &z[..k], &z[k..]).unwrap_or_else(|_| alloc::vec![crate::Jet::cst(f64::NAN); n])
        })
    }

    /// Probe points for [`Self::verify_axioms`]: triples of arrow parts and a
    /// base point, with each arrow part drawn from a third of the box so that
    /// sums stay inside it.
    pub fn axiom_probes(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for _ in 0..3 {
            lo.extend(self.arrows.lo.iter().map(|x| x / 3.0));
            hi.extend(self.arrows.hi.iter().map(|x| x / 3.0));
        }
        lo.extend_from_slice(&self.base.lo);
        hi.extend_from_slice(&self.base.hi);
        ProbeSpec::new(ChartBox::new(lo, hi), seed).random(count).random_points()
    }

    /// Groupoid axiom defects. Each probe `(v1, v2, v3, u)` builds
    /// `k = (v3, u)`, `h = (v2, t(k))`, `g = (v1, t(h))`.
    pub fn verify_axioms(&self, probes: &[Vec<f64>]) -> Result<AxiomReport> {
        let k = self.frame.rank();
        let mut r = AxiomReport { probes: probes.len(), ..Default::default() };
        for (idx, p) in probes.iter().enumerate() {
            if p.len() != 3 * k + self.frame.dim() {
                return Err(Error::DimensionMismatch { expected: 3 * k + self.frame.dim(), found: p.len() });
            }
            let (v1, v2, v3, u) = (&p[..k], &p[k..2 * k], &p[2 * k..3 * k], &p[3 * k..]);
            let ka = Arrow::new(v3.to_vec(), u.to_vec());
            let tk = self.target(&ka)?;
            let h = Arrow::new(v2.to_vec(), tk);
            let th = self.target(&h)?;
            let g = Arrow::new(v1.to_vec(), th.clone());
            let tg = self.target(&g)?;
            let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<f64>>();

            let gh = Arrow::new(add(v1, v2), h.u.clone());
            let d = dist(&self.target(&gh)?, &tg);
            if d > r.target_of_composition {
                r.target_of_composition = d;
                r.witness = idx;
            }
            r.source_of_composition = r.source_of_composition.max(dist(&gh.u, &h.u));

            let hk = Arrow::new(add(v2, v3), u.to_vec());
            let gap = dist(&self.target(&hk)?, &th);
            let ghk = Arrow::new(add(&add(v1, v2), v3), u.to_vec());
            let g_hk = Arrow::new(add(v1, &add(v2, v3)), u.to_vec());
            let assoc = dist(&self.target(&ghk)?, &tg).max(dist(&ghk.v, &g_hk.v)).max(gap);
            r.associativity = r.associativity.max(assoc);

            let inv = self.inverse(&h)?;
            let back = dist(&self.target(&inv)?, &h.u);
            let unit = dist(&add(&inv.v, &h.v), &alloc::vec![0.0; k]);
            r.inverse = r.inverse.max(back).max(unit);
        }
        Ok(r)
    }

    /// Smallest distance between `(t(g), s(g))` images of distinct probe
    /// arrows; positive means the anchor map is injective on the cloud.
    pub fn pair_separation(&self, arrows: &[Arrow]) -> Result<f64> {
        let imgs: Vec<Vec<f64>> = arrows
            .iter()
            .map(|g| {
                let mut t = self.target(g)?;
                t.extend_from_slice(&g.u);
                Ok(t)
            })
            .collect::<Result<_>>()?;
        let mut m = f64::INFINITY;
        for i in 0..imgs.len() {
            for j in (i + 1)..imgs.len() {
                m = m.min(dist(&imgs[i], &imgs[j]));
            }
        }
        Ok(m)
    }
}
