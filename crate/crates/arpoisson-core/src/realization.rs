//! Passing between E-symplectic forms and almost regular Poisson structures,
//! and the Poisson bivectors on local groupoid charts.
//!
//! Conventions: an E-2-form `omega = sum_{i<j} c_ij e_i* ^ e_j*` is stored by
//! its coefficients, its matrix is `W_ij = omega(e_i, e_j)`, and the dual
//! E-bivector is `P = -W^{-1}`. The Poisson structure on the base is then
//! `rho P rho^T`. The sharp map is `theta -> pi(theta, .)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flows::{closed_form_bm_jet, quantities, FlowQuantities, GeneratorFunction};
use crate::groupoid::{verify_commutative_frame, AnchoredFrame, ChartGroupoid};
use crate::jet::Jet;
use crate::linalg::{self, jet_inverse, jet_matmul, jet_transpose, Mat};
use crate::probes::ChartBox;
use crate::tensor::{pushforward_bivector, Bivec, BivectorField, SmoothMap};
use crate::tolerances::{FACTOR_RESIDUAL, SVD_CUTOFF};

/// An almost injective algebroid on a chart is described by its anchored frame.
pub type AiAlgebroidChart = AnchoredFrame;

type BivecFn = dyn Fn(&[Jet]) -> Bivec + Send + Sync;

/// Antisymmetric `k x k` array of coefficients on an `n`-dimensional chart.
#[derive(Clone)]
pub struct EBivector {
    base_dim: usize,
    rank: usize,
    f: Arc<BivecFn>,
}

impl EBivector {
    pub fn new(base_dim: usize, rank: usize, f: impl Fn(&[Jet]) -> Bivec + Send + Sync + 'static) -> Self {
        EBivector { base_dim, rank, f: Arc::new(f) }
    }

    pub fn constant(base_dim: usize, m: &Mat) -> Self {
        let k = m.nrows();
        let m = m.clone();
        EBivector::new(base_dim, k, move |_| {
            let mut b = Bivec::zeros(k);
            for i in 0..k {
                for j in (i + 1)..k {
                    b.set(i, j, Jet::cst(m[(i, j)]));
                }
            }
            b
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Bivec {
        (self.f)(x)
    }

    pub fn matrix(&self, p: &[f64]) -> Result<Mat> {
        crate::tensor::check_point(self.base_dim, p)?;
        Ok((self.f)(&Jet::point(p)).values())
    }
}

fn anchor_jets(frame: &AnchoredFrame, x: &[Jet]) -> Vec<Jet> {
    // row-major n x k
    let n = frame.dim();
    let k = frame.rank();
    let mut m = vec![Jet::cst(0.0); n * k];
    for (c, f) in frame.fields().iter().enumerate() {
        for (r, v) in f.eval_jet(x).into_iter().enumerate() {
            m[r * k + c] = v;
        }
    }
    m
}

fn bivec_to_rows(b: &Bivec) -> Vec<Jet> {
    let k = b.dim();
    let mut m = vec![Jet::cst(0.0); k * k];
    for i in 0..k {
        for j in 0..k {
            m[i * k + j] = b.get(i, j);
        }
    }
    m
}

fn nan_bivec(n: usize) -> Bivec {
    let mut b = Bivec::zeros(n);
    for i in 0..n {
        for j in (i + 1)..n {
            b.set(i, j, Jet::cst(f64::NAN));
        }
    }
    b
}

/// `rho P rho^T` for an E-bivector `P` given by its coefficients.
pub fn anchor_pushforward(frame: &AnchoredFrame, p_coeffs: &EBivector) -> Result<BivectorField> {
    if p_coeffs.rank() != frame.rank() || p_coeffs.base_dim() != frame.dim() {
        return Err(Error::DimensionMismatch { expected: frame.rank(), found: p_coeffs.rank() });
    }
    let frame = frame.clone();
    let pc = p_coeffs.clone();
    let n = frame.dim();
    let k = frame.rank();
    Ok(BivectorField::new(n, move |x| {
        let rho = anchor_jets(&frame, x);
        let p = bivec_to_rows(&pc.eval_jet(x));
        let rp = jet_matmul(&rho, &p, n, k, k);
        let pi = jet_matmul(&rp, &jet_transpose(&rho, n, k), n, k, n);
        let mut b = Bivec::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                b.set(i, j, pi[i * n + j]);
            }
        }
        b
    }))
}

/// The E-bivector `-W^{-1}` dual to an E-2-form.
pub fn dual_ebivector(omega: &EBivector) -> EBivector {
    let om = omega.clone();
    let k = omega.rank();
    EBivector::new(omega.base_dim(), k, move |x| {
        let w = bivec_to_rows(&om.eval_jet(x));
        match jet_inverse(&w, k) {
            Some(inv) => {
                let mut b = Bivec::zeros(k);
                for i in 0..k {
                    for j in (i + 1)..k {
                        b.set(i, j, -inv[i * k + j]);
                    }
                }
                b
            }
            None => nan_bivec(k),
        }
    })
}

/// Poisson structure `rho pi_omega^sharp rho^*` induced by an E-symplectic
/// form. Nondegeneracy of `omega` is checked at `probes`.
pub fn e_symplectic_to_poisson(a: &AiAlgebroidChart, omega: &EBivector, probes: &[Vec<f64>]) -> Result<BivectorField> {
    for p in probes {
        let det = omega.matrix(p)?.determinant();
        if libm::fabs(det) < 1e-12 {
            return Err(Error::Degenerate(alloc::format!("det omega = {det:e} at {p:?}")));
        }
    }
    anchor_pushforward(a, &dual_ebivector(omega))
}

/// Row-major `k x n` field of the factorization `lambda: T*M -> A`.
#[derive(Clone)]
pub struct AnchorFactorization {
    base_dim: usize,
    rank: usize,
    f: Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>,
}

impl AnchorFactorization {
    pub fn eval_jet(&self, x: &[Jet]) -> Vec<Jet> {
        (self.f)(x)
    }

    /// `lambda` at `p` as a `k x n` matrix; column `j` is `lambda(dx_j)`.
    pub fn matrix(&self, p: &[f64]) -> Result<Mat> {
        crate::tensor::check_point(self.base_dim, p)?;
        let v = (self.f)(&Jet::point(p));
        Ok(Mat::from_fn(self.rank, self.base_dim, |i, j| v[i * self.base_dim + j].value()))
    }
}

/// Pointwise factorization by minimum-norm least squares.
#[derive(Clone, Debug)]
pub struct FactorAt {
    pub lambda: Mat,
    pub w: Mat,
    /// Max-norm residual of `rho lambda = pi^sharp`.
    pub residual: f64,
    pub anchor_rank: usize,
}

pub fn factor_at(pi: &BivectorField, a: &AiAlgebroidChart, p: &[f64]) -> Result<FactorAt> {
    let rho = a.anchor_matrix(p)?;
    let sharp = pi.matrix(p)?.transpose();
    let (lambda, anchor_rank, residual) = linalg::lstsq_min_norm(&rho, &sharp, SVD_CUTOFF);
    // W lambda = rho^T  <=>  lambda^T W^T = rho
    let (wt, _, _) = linalg::lstsq_min_norm(&lambda.transpose(), &rho, SVD_CUTOFF);
    Ok(FactorAt { lambda, w: wt.transpose(), residual, anchor_rank })
}

#[derive(Clone, Debug, Default)]
pub struct FactorReport {
    pub checked: usize,
    /// Probe indices where the anchor had rank below `k`.
    pub skipped: Vec<usize>,
    pub max_residual: f64,
    pub max_antisymmetry: f64,
    /// Largest gap between the least-squares and the jet (normal-equation) paths.
    pub max_path_gap: f64,
}

/// The E-2-form `omega_pi` and the factorization `lambda` of an almost
/// regular Poisson structure through an anchor. The returned fields use the
/// normal equations, valid where the anchor is injective; at `probes` they
/// are cross-checked against the SVD solve.
pub fn poisson_to_e_form(
    pi: &BivectorField,
    a: &AiAlgebroidChart,
    probes: &[Vec<f64>],
) -> Result<(EBivector, AnchorFactorization, FactorReport)> {
    let n = a.dim();
    let k = a.rank();
    if pi.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pi.dim() });
    }
    let (fa, pa) = (a.clone(), pi.clone());
    let lambda_fn = move |x: &[Jet]| -> Vec<Jet> {
        let rho = anchor_jets(&fa, x);
        let b = pa.eval_jet(x);
        // sharp matrix: transpose of pi
        let mut sharp = vec![Jet::cst(0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                sharp[i * n + j] = b.get(j, i);
            }
        }
        let rt = jet_transpose(&rho, n, k);
        match jet_inverse(&jet_matmul(&rt, &rho, k, n, k), k) {
            Some(g) => jet_matmul(&jet_matmul(&g, &rt, k, k, n), &sharp, k, n, n),
            None => vec![Jet::cst(f64::NAN); k * n],
        }
    };
    let lambda_fn = Arc::new(lambda_fn);
    let lf = lambda_fn.clone();
    let fa2 = a.clone();
    let omega = EBivector::new(n, k, move |x| {
        let lam = lf(x);
        let rho = anchor_jets(&fa2, x);
        let lt = jet_transpose(&lam, k, n);
        match jet_inverse(&jet_matmul(&lam, &lt, k, n, k), k) {
            Some(g) => {
                let w = jet_matmul(&jet_matmul(&jet_transpose(&rho, n, k), &lt, k, n, k), &g, k, k, k);
                let mut b = Bivec::zeros(k);
                for i in 0..k {
                    for j in (i + 1)..k {
                        b.set(i, j, (w[i * k + j] - w[j * k + i]) * 0.5);
                    }
                }
                b
            }
            None => nan_bivec(k),
        }
    });
    let factor = AnchorFactorization { base_dim: n, rank: k, f: lambda_fn };

    let mut rep = FactorReport::default();
    for (idx, p) in probes.iter().enumerate() {
        let fa = factor_at(pi, a, p)?;
        if fa.anchor_rank < k {
            rep.skipped.push(idx);
            continue;
        }
        rep.checked += 1;
        rep.max_residual = rep.max_residual.max(fa.residual);
        rep.max_antisymmetry = rep.max_antisymmetry.max(linalg::antisymmetry_defect(&fa.w));
        let gap_w = linalg::max_abs(&(&fa.w - omega.matrix(p)?));
        let gap_l = linalg::max_abs(&(&fa.lambda - factor.matrix(p)?));
        rep.max_path_gap = rep.max_path_gap.max(gap_w).max(gap_l);
    }
    if rep.max_residual > FACTOR_RESIDUAL {
        return Err(Error::FactorizationResidual(rep.max_residual));
    }
    Ok((omega, factor, rep))
}

/// Poisson bivector on the chart groupoid of a commutative frame
/// `rho(alpha_1..alpha_k)` with coefficients `c_ij` (`omega_pi = sum_{i<j}
/// c_ij alpha_i ^ alpha_j`), on the flattened chart `(z, u)`.
#[derive(Clone)]
pub struct PairChart {
    pub groupoid: ChartGroupoid,
    pub pi_hat: BivectorField,
    /// `sum_{i<j} c_ij rho(alpha_i) ^ rho(alpha_j)` on the base.
    pub base_pi: BivectorField,
}

impl PairChart {
    pub fn source(&self) -> SmoothMap {
        self.groupoid.source_map()
    }

    pub fn target(&self) -> SmoothMap {
        self.groupoid.target_map()
    }
}

pub fn pair_chart_poisson(
    frame: &AnchoredFrame,
    f: &EBivector,
    arrows: ChartBox,
    base: ChartBox,
    probes: &[Vec<f64>],
) -> Result<PairChart> {
    let (ok, br) = verify_commutative_frame(frame, probes)?;
    if !ok {
        return Err(Error::NonCommutingFrame(br));
    }
    let k = frame.rank();
    let n = frame.dim();
    let groupoid = ChartGroupoid::new(frame.clone(), arrows, base)?;
    let base_pi = anchor_pushforward(frame, f)?;
    let t = groupoid.target_map();
    let (fr, fc) = (frame.clone(), f.clone());
    let pi_hat = BivectorField::new(k + n, move |z| {
        let u = &z[k..];
        let tu = t.eval_jet(z);
        let cs = fc.eval_jet(u);
        let ct = fc.eval_jet(&tu);
        let rho: Vec<Vec<Jet>> = fr.fields().iter().map(|x| x.eval_jet(u)).collect();
        let lift = |i: usize| {
            let mut v = vec![Jet::cst(0.0); k + n];
            for (r, c) in rho[i].iter().enumerate() {
                v[k + r] = *c;
            }
            v
        };
        let dz = |i: usize| {
            let mut v = vec![Jet::cst(0.0); k + n];
            v[i] = Jet::cst(1.0);
            v
        };
        let mut b = Bivec::zeros(k + n);
        for i in 0..k {
            for j in (i + 1)..k {
                let c = cs.get(i, j);
                b.add(i, j, ct.get(i, j) - c);
                let (ri, rj) = (lift(i), lift(j));
                b.add_wedge(&dz(i), &rj, c);
                b.add_wedge(&ri, &dz(j), c);
                b.add_wedge(&ri, &rj, -c);
            }
        }
        b
    });
    Ok(PairChart { groupoid, pi_hat, base_pi })
}

/// Bivector at the identity bisection in the splitting `A + TM`:
/// `sum_j X_j ^ rho(alpha_j) - sum_{i<j} c_ij rho(alpha_i) ^ rho(alpha_j)`,
/// with the `A` directions first.
pub fn identity_bisection_bivector(frame: &AnchoredFrame, f: &EBivector, p: &[f64]) -> Result<Mat> {
    let k = frame.rank();
    let n = frame.dim();
    let rho = frame.anchor_matrix(p)?;
    let c = f.matrix(p)?;
    let mut m = Mat::zeros(k + n, k + n);
    for j in 0..k {
        for r in 0..n {
            m[(j, k + r)] += rho[(r, j)];
            m[(k + r, j)] -= rho[(r, j)];
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            for r in 0..n {
                for s in 0..n {
                    let w = rho[(r, i)] * rho[(s, j)] - rho[(s, i)] * rho[(r, j)];
                    m[(k + r, k + s)] -= c[(i, j)] * w;
                }
            }
        }
    }
    Ok(m)
}

type QuantFn = dyn Fn(Jet, Jet, &[Jet]) -> Result<FlowQuantities> + Send + Sync;

/// How `F`, `G`, `alpha` are produced for a generator.
#[derive(Clone)]
pub enum FlowModel {
    /// Integrate the flow ODE (series branch near `a = 0`).
    Ode(GeneratorFunction),
    /// Closed forms for `f = x^m`.
    ClosedForm(u32),
    /// Any other evaluator, paired with the generator it realizes.
    Custom(GeneratorFunction, Arc<QuantFn>),
}

impl FlowModel {
    pub fn generator(&self) -> GeneratorFunction {
        match self {
            FlowModel::Ode(g) | FlowModel::Custom(g, _) => g.clone(),
            FlowModel::ClosedForm(m) => GeneratorFunction::monomial(*m),
        }
    }

    pub fn quantities(&self, a: Jet, x: Jet, v: &[Jet]) -> Result<FlowQuantities> {
        match self {
            FlowModel::Ode(g) => quantities(g, a, x, v),
            FlowModel::ClosedForm(m) => closed_form_bm_jet(*m, a, x),
            FlowModel::Custom(_, q) => q(a, x, v),
        }
    }
}

fn nan_quantities() -> FlowQuantities {
    let n = Jet::cst(f64::NAN);
    FlowQuantities { f_cap: n, g_cap: n, alpha: n, kappa: n }
}

/// The assembled groupoid bivector with its source and target maps.
///
/// Chart coordinates are `(a, b, x, y, p, q, v)` with `p, q` in the
/// `pi_0` block and `v` the Casimir parameters; base coordinates are
/// `(x, y, q, v)`.
#[derive(Clone)]
pub struct GroupoidPoisson {
    pub pi_g: BivectorField,
    pub source: SmoothMap,
    pub target: SmoothMap,
    pub base_pi: BivectorField,
    pub block: usize,
    pub casimirs: usize,
}

impl GroupoidPoisson {
    pub fn dim(&self) -> usize {
        self.pi_g.dim()
    }

    /// The `(a, b, x, y)` block of `pi_g` at `p`.
    pub fn block4(&self, p: &[f64]) -> Result<Mat> {
        Ok(self.pi_g.matrix(p)?.view((0, 0), (4, 4)).into_owned())
    }
}

pub fn assemble_groupoid_poisson(model: &FlowModel, pi0: Option<&Mat>) -> Result<GroupoidPoisson> {
    assemble_with_alpha_sign(model, pi0, 1.0)
}

/// As [`assemble_groupoid_poisson`] with `sign * alpha` on `d_b ^ d_x`; the
/// sign-flipped candidate serves as a negative control for the verifier.
pub fn assemble_with_alpha_sign(model: &FlowModel, pi0: Option<&Mat>, sign: f64) -> Result<GroupoidPoisson> {
    let gen = model.generator();
    let j = gen.casimirs();
    let m2 = pi0.map_or(0, |m| m.nrows());
    if let Some(m) = pi0 {
        if m.ncols() != m2 || m2 % 2 != 0 {
            return Err(Error::InvalidArgument("pi_0 block must be square of even size".into()));
        }
        let d = linalg::antisymmetry_defect(m);
        if d > crate::tolerances::ANTISYMMETRY {
            return Err(Error::NotAntisymmetric(d));
        }
    }
    let p0 = pi0.cloned().unwrap_or_else(|| Mat::zeros(0, 0));
    let dim = 4 + 2 * m2 + j;
    if dim > crate::jet::MAX_DIM {
        return Err(Error::InvalidArgument(alloc::format!("chart dimension {dim} exceeds jet capacity")));
    }
    let (ps, qs, vs) = (4, 4 + m2, 4 + 2 * m2);

    let (md, gd, p0c) = (model.clone(), gen.clone(), p0.clone());
    let pi_g = BivectorField::new(dim, move |z| {
        let v = &z[vs..];
        let q = md.quantities(z[0], z[2], v).unwrap_or_else(|_| nan_quantities());
        let mut b = Bivec::zeros(dim);
        b.set(0, 3, Jet::cst(1.0));
        b.set(1, 2, q.alpha * sign);
        b.set(1, 3, z[1] * q.kappa);
        b.set(2, 3, -gd.f_jet(z[2], v));
        for r in 0..m2 {
            for c in (r + 1)..m2 {
                b.set(ps + r, ps + c, Jet::cst(p0c[(r, c)]));
                b.set(qs + r, qs + c, Jet::cst(-p0c[(r, c)]));
            }
        }
        b
    });

    let mut keep = vec![2, 3];
    keep.extend(qs..qs + m2);
    keep.extend(vs..vs + j);
    let source = SmoothMap::projection(dim, keep);

    let md = model.clone();
    let bdim = 2 + m2 + j;
    let target = SmoothMap::new(dim, bdim, move |z| {
        let v = &z[vs..];
        let q = md.quantities(z[0], z[2], v).unwrap_or_else(|_| nan_quantities());
        let mut out = vec![q.f_cap, z[1] * q.g_cap + z[3]];
        out.extend_from_slice(&z[ps..ps + m2]);
        out.extend_from_slice(v);
        out
    });

    let (gb, p0b) = (gen, p0);
    let base_pi = BivectorField::new(bdim, move |w| {
        let mut b = Bivec::zeros(bdim);
        b.set(0, 1, gb.f_jet(w[0], &w[2 + m2..]));
        for r in 0..m2 {
            for c in (r + 1)..m2 {
                b.set(2 + r, 2 + c, Jet::cst(p0b[(r, c)]));
            }
        }
        b
    });
    Ok(GroupoidPoisson { pi_g, source, target, base_pi, block: m2, casimirs: j })
}

#[derive(Clone, Debug, Default)]
pub struct MultiplicativityReport {
    /// `max |s_* pi_G + pi o s|`.
    pub source_defect: f64,
    /// `max |t_* pi_G - pi o t|`.
    pub target_defect: f64,
    pub source_witness: Option<Vec<f64>>,
    pub target_witness: Option<Vec<f64>>,
}

impl MultiplicativityReport {
    pub fn max_defect(&self) -> f64 {
        self.source_defect.max(self.target_defect)
    }
}

fn defect_or_inf(m: &Mat) -> f64 {
    if m.iter().any(|x| !x.is_finite()) {
        f64::INFINITY
    } else {
        linalg::max_abs(m)
    }
}

pub fn verify_multiplicativity_pushforwards(
    pi_g: &BivectorField,
    s: &SmoothMap,
    t: &SmoothMap,
    pi: &BivectorField,
    probes: &[Vec<f64>],
) -> Result<MultiplicativityReport> {
    let mut r = MultiplicativityReport::default();
    for p in probes {
        let sp = pushforward_bivector(s, pi_g, p)?;
        let ds = defect_or_inf(&(sp + pi.at_image(s, p)?));
        if ds > r.source_defect || r.source_witness.is_none() {
            r.source_defect = r.source_defect.max(ds);
            if ds >= r.source_defect {
                r.source_witness = Some(p.clone());
            }
        }
        let tp = pushforward_bivector(t, pi_g, p)?;
        let timg = t.apply(p)?;
        let dt = if timg.iter().all(|x| x.is_finite()) {
            defect_or_inf(&(tp - pi.matrix(&timg)?))
        } else {
            f64::INFINITY
        };
        if dt > r.target_defect || r.target_witness.is_none() {
            r.target_defect = r.target_defect.max(dt);
            if dt >= r.target_defect {
                r.target_witness = Some(p.clone());
            }
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::VectorField;

    fn frame(fields: Vec<VectorField>) -> AnchoredFrame {
        AnchoredFrame::new(fields).unwrap()
    }

    fn canonical2() -> Mat {
        Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
    }

    #[test]
    fn example_one_first_direction() {
        let a = frame(vec![
            VectorField::new(2, |x| vec![x[0], Jet::cst(0.0)]),
            VectorField::coordinate(2, 1),
        ]);
        let omega = EBivector::constant(2, &canonical2());
        let pi = e_symplectic_to_poisson(&a, &omega, &[vec![0.5, 0.1]]).unwrap();
        let m = pi.matrix(&[1.7, -0.3]).unwrap();
        assert!((m[(0, 1)] - 1.7).abs() < 1e-14);
    }

    #[test]
    fn example_one_second_direction() {
        let pi = BivectorField::new(2, |x| {
            let mut b = Bivec::zeros(2);
            b.set(0, 1, x[0]);
            b
        });
        let a = frame(vec![
            VectorField::new(2, |x| vec![x[0], Jet::cst(0.0)]),
            VectorField::new(2, |x| vec![Jet::cst(0.0), x[0]]),
        ]);
        let p = [0.8, 0.4];
        let fa = factor_at(&pi, &a, &p).unwrap();
        // lambda(dx) = Y', lambda(dy) = -X'
        assert!((fa.lambda[(0, 0)]).abs() < 1e-12 && (fa.lambda[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((fa.lambda[(0, 1)] + 1.0).abs() < 1e-12 && (fa.lambda[(1, 1)]).abs() < 1e-12);
        assert!((fa.w[(0, 1)] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn sign_flip_breaks_target_relation() {
        let model = FlowModel::ClosedForm(2);
        let good = assemble_groupoid_poisson(&model, None).unwrap();
        let bad = assemble_with_alpha_sign(&model, None, -1.0).unwrap();
        let probes = vec![vec![0.3, 0.7, 0.9, -0.2]];
        let g = verify_multiplicativity_pushforwards(&good.pi_g, &good.source, &good.target, &good.base_pi, &probes).unwrap();
        let b = verify_multiplicativity_pushforwards(&bad.pi_g, &bad.source, &bad.target, &bad.base_pi, &probes).unwrap();
        assert!(g.max_defect() < 1e-12, "{g:?}");
        assert!(b.target_defect > 1e-2);
    }
}
