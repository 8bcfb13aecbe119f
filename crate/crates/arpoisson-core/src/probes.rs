//! Deterministic probe sets: a fixed grid plus seeded random points inside a
//! coordinate box, skipping a thin tube around declared singular loci.

use alloc::boxed::Box;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tolerances::{PROBE_RANDOM, PROBE_TUBE};

#[derive(Clone, Debug, PartialEq)]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        ChartBox { lo, hi }
    }

    pub fn cube(dim: usize, r: f64) -> Self {
        ChartBox::new(alloc::vec![-r; dim], alloc::vec![r; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.lo).zip(&self.hi).all(|((x, l), h)| x >= l && x <= h)
    }
}

/// Singular locus declared by a chart.
#[derive(Clone, Debug, PartialEq)]
pub enum Locus {
    /// The hyperplane `x_coord = value`.
    Hyperplane { coord: usize, value: f64 },
}

impl Locus {
    pub fn distance(&self, p: &[f64]) -> f64 {
        match self {
            Locus::Hyperplane { coord, value } => libm::fabs(p[*coord] - value),
        }
    }
}

pub struct ProbeSpec<'a> {
    pub chart: ChartBox,
    pub loci: Vec<Locus>,
    pub admissible: Option<Box<dyn Fn(&[f64]) -> bool + 'a>>,
    pub grid_per_axis: usize,
    pub random: usize,
    pub seed: u64,
    pub tube: f64,
}

impl<'a> ProbeSpec<'a> {
    pub fn new(chart: ChartBox, seed: u64) -> Self {
        let d = chart.dim().max(1) as f64;
        let per = (libm::floor(libm::pow(256.0, 1.0 / d)) as usize).clamp(2, 33);
        ProbeSpec { chart, loci: Vec::new(), admissible: None, grid_per_axis: per, random: PROBE_RANDOM, seed, tube: PROBE_TUBE }
    }

    pub fn avoid(mut self, l: Locus) -> Self {
        self.loci.push(l);
        self
    }

    pub fn admissible(mut self, f: impl Fn(&[f64]) -> bool + 'a) -> Self {
        self.admissible = Some(Box::new(f));
        self
    }

    pub fn grid(mut self, per_axis: usize) -> Self {
        self.grid_per_axis = per_axis;
        self
    }

    pub fn random(mut self, n: usize) -> Self {
        self.random = n;
        self
    }

    fn accepts(&self, p: &[f64]) -> bool {
        self.loci.iter().all(|l| l.distance(p) > self.tube)
            && self.admissible.as_ref().map_or(true, |f| f(p))
    }

    pub fn grid_points(&self) -> Vec<Vec<f64>> {
        let d = self.chart.dim();
        let per = self.grid_per_axis;
        if per == 0 || d == 0 {
            return Vec::new();
        }
        let total = per.pow(d as u32);
        let mut out = Vec::new();
        for mut idx in 0..total {
            let mut p = Vec::with_capacity(d);
            for k in 0..d {
                let i = idx % per;
                idx /= per;
                let t = if per == 1 { 0.5 } else { i as f64 / (per - 1) as f64 };
                p.push(self.chart.lo[k] + t * (self.chart.hi[k] - self.chart.lo[k]));
            }
            if self.accepts(&p) {
                out.push(p);
            }
        }
        out
    }

    pub fn random_points(&self) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let d = self.chart.dim();
        let mut out = Vec::with_capacity(self.random);
        let mut attempts = 0usize;
        while out.len() < self.random && attempts < 10_000 * self.random.max(1) {
            attempts += 1;
            let p: Vec<f64> = (0..d)
                .map(|k| {
                    let (l, h) = (self.chart.lo[k], self.chart.hi[k]);
                    if h > l {
                        rng.gen_range(l..h)
                    } else {
                        l
                    }
                })
                .collect();
            if self.accepts(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Grid points followed by random points.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut g = self.grid_points();
        g.extend(self.random_points());
        g
    }
}
