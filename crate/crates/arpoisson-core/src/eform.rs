//! E-forms on an anchored frame and the algebroid differential.
//!
//! Coefficients are indexed by increasing multi-indices in the dual frame.
//! Lazily composed forms (such as `d omega`) are exact in value and gradient.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::groupoid::{verify_commutative_frame, AnchoredFrame};
use crate::jet::{with_local_seed, Jet};
use crate::linalg::{self, jet_inverse, jet_matmul, jet_transpose, Mat};
use crate::realization::EBivector;
use crate::tensor::{ScalarField, VectorField};
use crate::tolerances::{CLOSED, STRUCTURE_RESIDUAL, SVD_CUTOFF};

/// Increasing multi-indices of length `p` in `0..k`, in lexicographic order.
pub fn multi_indices(k: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, p: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i + 1, k, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, p, &mut Vec::new(), &mut out);
    out
}

/// Sorts `idx`, returning the permutation sign, or `None` on a repeat.
fn sort_signed(idx: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

type CoeffFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

#[derive(Clone)]
pub struct EForm {
    base_dim: usize,
    rank: usize,
    degree: usize,
    indices: Vec<Vec<usize>>,
    f: Arc<CoeffFn>,
}

impl EForm {
    /// Degrees above `rank` are allowed and have no components.
    pub fn new(
        base_dim: usize,
        rank: usize,
        degree: usize,
        f: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    ) -> Result<Self> {
        Ok(EForm { base_dim, rank, degree, indices: multi_indices(rank, degree), f: Arc::new(f) })
    }

    pub fn function(g: &ScalarField, rank: usize) -> Self {
        let g = g.clone();
        EForm::new(g.dim(), rank, 0, move |x| vec![g.eval_jet(x)]).expect("degree 0")
    }

    pub fn constant(base_dim: usize, rank: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let len = multi_indices(rank, degree).len();
        if coeffs.len() != len {
            return Err(Error::DimensionMismatch { expected: len, found: coeffs.len() });
        }
        EForm::new(base_dim, rank, degree, move |_| coeffs.iter().map(|c| Jet::cst(*c)).collect())
    }

    /// The dual coframe element `X_i^*`.
    pub fn dual(base_dim: usize, rank: usize, i: usize) -> Self {
        let mut c = vec![0.0; rank];
        c[i] = 1.0;
        EForm::constant(base_dim, rank, 1, c).expect("length matches")
    }

    pub fn from_ebivector(w: &EBivector) -> Self {
        let w = w.clone();
        let k = w.rank();
        let idx = multi_indices(k, 2);
        EForm::new(w.base_dim(), k, 2, move |x| {
            let b = w.eval_jet(x);
            idx.iter().map(|ij| b.get(ij[0], ij[1])).collect()
        })
        .expect("rank at least two")
    }

    /// `a ^ b` for one-forms.
    pub fn wedge1(a: &EForm, b: &EForm) -> Result<Self> {
        if a.degree != 1 || b.degree != 1 || a.rank != b.rank {
            return Err(Error::InvalidArgument("wedge1 takes two one-forms of equal rank".into()));
        }
        let (a, b) = (a.clone(), b.clone());
        let idx = multi_indices(a.rank, 2);
        EForm::new(a.base_dim, a.rank, 2, move |x| {
            let (u, v) = (a.eval_jet(x), b.eval_jet(x));
            idx.iter().map(|ij| u[ij[0]] * v[ij[1]] - u[ij[1]] * v[ij[0]]).collect()
        })
    }

    /// `sum_i a_i ^ b_i`.
    pub fn split_sum(pairs: &[(EForm, EForm)]) -> Result<Self> {
        let parts: Vec<EForm> = pairs.iter().map(|(a, b)| EForm::wedge1(a, b)).collect::<Result<_>>()?;
        let first = parts.first().ok_or_else(|| Error::InvalidArgument("empty split form".into()))?;
        let (n, k) = (first.base_dim, first.rank);
        EForm::new(n, k, 2, move |x| {
            let mut acc = parts[0].eval_jet(x);
            for p in &parts[1..] {
                for (s, t) in acc.iter_mut().zip(p.eval_jet(x)) {
                    *s += t;
                }
            }
            acc
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Vec<Jet> {
        (self.f)(x)
    }

    pub fn at(&self, p: &[f64]) -> Result<Vec<f64>> {
        crate::tensor::check_point(self.base_dim, p)?;
        Ok((self.f)(&Jet::seed(p)).iter().map(Jet::value).collect())
    }

    /// `omega(X_{idx})` for any index tuple.
    fn on(&self, coeffs: &[Jet], idx: &[usize]) -> Jet {
        match sort_signed(idx) {
            None => Jet::cst(0.0),
            Some((s, sign)) => {
                let pos = self.indices.binary_search(&s).expect("valid multi-index");
                coeffs[pos] * sign
            }
        }
    }

    /// Values of the alternating multilinear form as a `k x k` matrix
    /// (degree 2 only).
    pub fn matrix(&self, p: &[f64]) -> Result<Mat> {
        if self.degree != 2 {
            return Err(Error::InvalidArgument("matrix view needs a 2-form".into()));
        }
        let c = self.at(p)?;
        let mut m = Mat::zeros(self.rank, self.rank);
        for (v, ij) in c.iter().zip(&self.indices) {
            m[(ij[0], ij[1])] = *v;
            m[(ij[1], ij[0])] = -*v;
        }
        Ok(m)
    }
}

/// Fitted `c^l_{ij}` with `[rho X_i, rho X_j] = sum_l c^l_{ij} rho X_l`.
#[derive(Clone)]
pub struct StructureFunctions {
    frame: AnchoredFrame,
    pub report: FitReport,
}

#[derive(Clone, Debug, Default)]
pub struct FitReport {
    pub checked: usize,
    pub skipped: Vec<usize>,
    pub max_residual: f64,
}

fn anchor_rows(frame: &AnchoredFrame, x: &[Jet]) -> Vec<Vec<Jet>> {
    frame.fields().iter().map(|f| f.eval_jet(x)).collect()
}

fn bracket_jet(xv: &[Jet], yv: &[Jet]) -> Vec<Jet> {
    let n = xv.len();
    (0..n)
        .map(|r| {
            let mut acc = Jet::cst(0.0);
            for s in 0..n {
                acc += xv[s] * yv[r].partial(s) - yv[s] * xv[r].partial(s);
            }
            acc
        })
        .collect()
}

impl StructureFunctions {
    pub fn rank(&self) -> usize {
        self.frame.rank()
    }

    /// `c[(i * k + j) * k + l] = c^l_{ij}`, exact in value and gradient.
    pub fn eval_jet(&self, x: &[Jet]) -> Vec<Jet> {
        with_local_seed(x, |x| self.eval_local(x))
    }

    fn eval_local(&self, x: &[Jet]) -> Vec<Jet> {
        let k = self.frame.rank();
        let n = self.frame.dim();
        let rows = anchor_rows(&self.frame, x);
        let mut rho = vec![Jet::cst(0.0); n * k];
        for (c, col) in rows.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                rho[r * k + c] = *v;
            }
        }
        let rt = jet_transpose(&rho, n, k);
        let pinv = jet_inverse(&jet_matmul(&rt, &rho, k, n, k), k).map(|g| jet_matmul(&g, &rt, k, k, n));
        let mut out = vec![Jet::cst(0.0); k * k * k];
        for i in 0..k {
            for j in (i + 1)..k {
                let b = bracket_jet(&rows[i], &rows[j]);
                let c = match &pinv {
                    Some(pi) => jet_matmul(pi, &b, k, n, 1),
                    None => vec![Jet::cst(f64::NAN); k],
                };
                for l in 0..k {
                    out[(i * k + j) * k + l] = c[l];
                    out[(j * k + i) * k + l] = -c[l];
                }
            }
        }
        out
    }

    pub fn at(&self, p: &[f64]) -> Result<Vec<f64>> {
        crate::tensor::check_point(self.frame.dim(), p)?;
        Ok(self.eval_jet(&Jet::seed(p)).iter().map(Jet::value).collect())
    }

    pub fn get(&self, p: &[f64], l: usize, i: usize, j: usize) -> Result<f64> {
        let k = self.frame.rank();
        Ok(self.at(p)?[(i * k + j) * k + l])
    }
}

pub fn fit_structure_functions(frame: &AnchoredFrame, probes: &[Vec<f64>]) -> Result<StructureFunctions> {
    let k = frame.rank();
    let mut report = FitReport::default();
    for (idx, p) in probes.iter().enumerate() {
        let rho = frame.anchor_matrix(p)?;
        if linalg::rank(&rho, SVD_CUTOFF) < k {
            report.skipped.push(idx);
            continue;
        }
        report.checked += 1;
        for i in 0..k {
            for j in (i + 1)..k {
                let b = frame.bracket(i, j, p)?;
                let b = Mat::from_column_slice(b.len(), 1, &b);
                let (_, _, res) = linalg::lstsq_min_norm(&rho, &b, SVD_CUTOFF);
                report.max_residual = report.max_residual.max(res);
            }
        }
    }
    if report.max_residual > STRUCTURE_RESIDUAL {
        return Err(Error::FactorizationResidual(report.max_residual));
    }
    Ok(StructureFunctions { frame: frame.clone(), report })
}

fn d_form(omega: &EForm, frame: &AnchoredFrame, structure: Option<&StructureFunctions>) -> Result<EForm> {
    let k = frame.rank();
    let n = frame.dim();
    if omega.rank() != k || omega.base_dim() != n {
        return Err(Error::DimensionMismatch { expected: k, found: omega.rank() });
    }
    // a form of top degree has a differential with no components
    let p = omega.degree();
    let (om, fr, st) = (omega.clone(), frame.clone(), structure.cloned());
    let out_idx = multi_indices(k, p + 1);
    EForm::new(n, k, p + 1, move |x| with_local_seed(x, |x| {
        let w = om.eval_jet(x);
        let rho = anchor_rows(&fr, x);
        let c = st.as_ref().map(|s| s.eval_jet(x));
        let along = |i: usize, a: Jet| {
            let mut acc = Jet::cst(0.0);
            for (r, v) in rho[i].iter().enumerate() {
                acc += *v * a.partial(r);
            }
            acc
        };
        out_idx
            .iter()
            .map(|idx| {
                let mut acc = Jet::cst(0.0);
                for t in 0..=p {
                    let rest: Vec<usize> = idx.iter().enumerate().filter(|(q, _)| *q != t).map(|(_, v)| *v).collect();
                    let term = along(idx[t], om.on(&w, &rest));
                    acc += if t % 2 == 0 { term } else { -term };
                }
                if let Some(c) = &c {
                    for s in 0..=p {
                        for t in (s + 1)..=p {
                            let rest: Vec<usize> =
                                idx.iter().enumerate().filter(|(q, _)| *q != s && *q != t).map(|(_, v)| *v).collect();
                            let mut inner = Jet::cst(0.0);
                            for l in 0..k {
                                let coef = c[(idx[s] * k + idx[t]) * k + l];
                                if coef.value() == 0.0 && coef.dim() == 0 {
                                    continue;
                                }
                                let mut args = vec![l];
                                args.extend_from_slice(&rest);
                                inner += coef * om.on(&w, &args);
                            }
                            acc += if (s + t) % 2 == 0 { inner } else { -inner };
                        }
                    }
                }
                acc
            })
            .collect()
    }))
}

/// The algebroid differential as a lazily evaluated form.
pub fn algebroid_d_form(omega: &EForm, frame: &AnchoredFrame, structure: &StructureFunctions) -> Result<EForm> {
    d_form(omega, frame, Some(structure))
}

/// First sum of the Cartan formula only; equals the algebroid differential
/// on commuting frames.
pub fn frame_exterior_derivative(omega: &EForm, frame: &AnchoredFrame) -> Result<EForm> {
    d_form(omega, frame, None)
}

/// `(d omega)` at `p`, by increasing multi-index.
pub fn algebroid_d(omega: &EForm, frame: &AnchoredFrame, structure: &StructureFunctions, p: &[f64]) -> Result<Vec<f64>> {
    algebroid_d_form(omega, frame, structure)?.at(p)
}

#[derive(Clone, Debug)]
pub struct ClosedReport {
    pub closed: bool,
    pub max_norm: f64,
    pub witness: Option<Vec<f64>>,
}

pub fn is_closed(
    omega: &EForm,
    frame: &AnchoredFrame,
    structure: &StructureFunctions,
    probes: &[Vec<f64>],
) -> Result<ClosedReport> {
    let d = algebroid_d_form(omega, frame, structure)?;
    let mut rep = ClosedReport { closed: true, max_norm: 0.0, witness: None };
    for p in probes {
        let v = d.at(p)?;
        let m = v.iter().fold(0.0f64, |a, x| if x.is_finite() { a.max(libm::fabs(*x)) } else { f64::INFINITY });
        if m > rep.max_norm {
            rep.max_norm = m;
            if m > CLOSED {
                rep.witness = Some(p.clone());
            }
        }
    }
    rep.closed = rep.max_norm <= CLOSED;
    Ok(rep)
}

/// Basis change `B` with `B^T W B` block diagonal in `[[0, 1], [-1, 0]]`;
/// columns come in pairs `(u_1, w_1, u_2, w_2, ...)`.
pub fn symplectic_gram_schmidt(w: &Mat) -> Result<Mat> {
    let k = w.nrows();
    if w.ncols() != k {
        return Err(Error::DimensionMismatch { expected: k, found: w.ncols() });
    }
    let d = linalg::antisymmetry_defect(w);
    if d > crate::tolerances::ANTISYMMETRY * linalg::max_abs(w).max(1.0) {
        return Err(Error::NotAntisymmetric(d));
    }
    let det = w.clone().determinant();
    if k % 2 == 1 || libm::fabs(det) <= 1e-12 {
        return Err(Error::Degenerate(alloc::format!("det W = {det:e}")));
    }
    let form = |a: &Mat, b: &Mat| (a.transpose() * w * b)[(0, 0)];
    let mut rest: Vec<Mat> = (0..k).map(|i| Mat::from_fn(k, 1, |r, _| if r == i { 1.0 } else { 0.0 })).collect();
    let mut cols: Vec<Mat> = Vec::with_capacity(k);
    while !rest.is_empty() {
        let u = rest.remove(0);
        let (best, val) = rest
            .iter()
            .enumerate()
            .map(|(i, v)| (i, form(&u, v)))
            .fold((usize::MAX, 0.0f64), |acc, (i, v)| if libm::fabs(v) > libm::fabs(acc.1) { (i, v) } else { acc });
        if best == usize::MAX || libm::fabs(val) <= 1e-14 {
            return Err(Error::Degenerate("no symplectic partner".into()));
        }
        let wv = rest.remove(best) / val;
        for v in rest.iter_mut() {
            let (a, b) = (form(v, &wv), form(v, &u));
            *v = &*v - &u * a + &wv * b;
        }
        cols.push(u);
        cols.push(wv);
    }
    Ok(Mat::from_fn(k, k, |r, c| cols[c][(r, 0)]))
}

/// The canonical block form `diag([[0, 1], [-1, 0]], ...)`.
pub fn canonical_block(k: usize) -> Mat {
    let mut j = Mat::zeros(k, k);
    for i in (0..k.saturating_sub(1)).step_by(2) {
        j[(i, i + 1)] = 1.0;
        j[(i + 1, i)] = -1.0;
    }
    j
}

#[derive(Clone, Debug)]
pub struct DarbouxCheck {
    pub all_duals_closed: bool,
    pub frame_commutes: bool,
    pub max_d: f64,
    pub max_bracket: f64,
    pub witness: Option<Vec<f64>>,
}

/// Closedness of the one-forms `alpha_i, beta_i` of a split form against
/// commutativity of their dual sections, computed independently.
pub fn closedness_commutativity_check(
    frame: &AnchoredFrame,
    pairs: &[(EForm, EForm)],
    probes: &[Vec<f64>],
) -> Result<DarbouxCheck> {
    let k = frame.rank();
    let n = frame.dim();
    if 2 * pairs.len() != k {
        return Err(Error::DimensionMismatch { expected: k, found: 2 * pairs.len() });
    }
    let st = fit_structure_functions(frame, probes)?;
    let forms: Vec<EForm> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let mut max_d = 0.0f64;
    let mut witness = None;
    for f in &forms {
        let r = is_closed(f, frame, &st, probes)?;
        if r.max_norm > max_d {
            max_d = r.max_norm;
            witness = r.witness.clone().or(witness);
        }
    }
    // dual sections Y_j = sum_i (Theta^{-1})_{ij} X_i, anchored
    let mut duals = Vec::with_capacity(k);
    for j in 0..k {
        let (fs, fr) = (forms.clone(), frame.clone());
        duals.push(VectorField::new(n, move |x| {
            let mut theta = vec![Jet::cst(0.0); k * k];
            for (r, f) in fs.iter().enumerate() {
                for (c, v) in f.eval_jet(x).into_iter().enumerate() {
                    theta[r * k + c] = v;
                }
            }
            let inv = jet_inverse(&theta, k).unwrap_or_else(|| vec![Jet::cst(f64::NAN); k * k]);
            let mut out = vec![Jet::cst(0.0); n];
            for (i, f) in fr.fields().iter().enumerate() {
                for (r, v) in f.eval_jet(x).into_iter().enumerate() {
                    out[r] += inv[i * k + j] * v;
                }
            }
            out
        }));
    }
    let dual_frame = AnchoredFrame::new(duals)?;
    let (commutes, max_bracket) = verify_commutative_frame(&dual_frame, probes)?;
    let all_duals_closed = max_d <= CLOSED;
    Ok(DarbouxCheck { all_duals_closed, frame_commutes: commutes, max_d, max_bracket, witness })
}
