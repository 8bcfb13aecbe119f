//! Cosymplectic structures, their Reeb fields and induced Poisson
//! structures, and the forms on the pair-type groupoid chart.
//!
//! Forms are stored by coefficients: a 2-form as the antisymmetric matrix
//! `omega_ij = omega(d_i, d_j)` (held in a [`BivectorField`]), a 1-form as its
//! component vector (held in a [`VectorField`]). The dual bivector of a
//! nondegenerate form is fixed by `omega(pi^sharp theta, u) = theta(u)`,
//! which makes it the plain matrix inverse.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jet::{with_local_seed, Jet};
use crate::linalg::{self, jet_inverse, Mat};
use crate::tensor::{check_point, Bivec, BivectorField, SmoothMap, VectorField};
use crate::tolerances::{CLOSED, SVD_CUTOFF};

const VOLUME: f64 = 1e-10;
const REEB_RESIDUAL: f64 = 1e-10;
const ALPHA_MATCH: f64 = 1e-9;

#[derive(Clone)]
pub struct CosymplecticStructure {
    pub omega: BivectorField,
    pub alpha: VectorField,
}

/// Runs a bivector-valued closure through [`with_local_seed`].
fn local_bivec(n: usize, x: &[Jet], f: impl FnOnce(&[Jet]) -> Bivec) -> Bivec {
    let flat = with_local_seed(x, |l| {
        let b = f(l);
        let mut v = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                v.push(b.get(i, j));
            }
        }
        v
    });
    let mut b = Bivec::zeros(n);
    let mut it = flat.into_iter();
    for i in 0..n {
        for j in (i + 1)..n {
            b.set(i, j, it.next().unwrap_or(Jet::cst(f64::NAN)));
        }
    }
    b
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `(d alpha)_{ij}` at `p`.
pub fn d_one_form(alpha: &VectorField, p: &[f64]) -> Result<Mat> {
    let j = alpha.jacobian(p)?;
    Ok(j.transpose() - j)
}

/// `max |(d omega)_{ijk}|` over `i < j < k` at `p`.
pub fn d_two_form_max(omega: &BivectorField, p: &[f64]) -> Result<f64> {
    check_point(omega.dim(), p)?;
    let n = omega.dim();
    let b = omega.eval_jet(&Jet::seed(p));
    let mut m = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let v = b.get(j, k).d(i) + b.get(k, i).d(j) + b.get(i, j).d(k);
                m = m.max(libm::fabs(v));
            }
        }
    }
    Ok(m)
}

/// Pulls a 2-form back along `phi`.
pub fn pullback_two_form(omega: &BivectorField, phi: &SmoothMap) -> Result<BivectorField> {
    if omega.dim() != phi.codomain_dim() {
        return Err(Error::DimensionMismatch { expected: phi.codomain_dim(), found: omega.dim() });
    }
    let (om, ph) = (omega.clone(), phi.clone());
    let n = phi.domain_dim();
    let m = phi.codomain_dim();
    Ok(BivectorField::new(n, move |x| local_bivec(n, x, |x| {
        let y = ph.eval_jet(x);
        let w = om.eval_jet(&y);
        let jac: Vec<Vec<Jet>> = y.iter().map(|yr| (0..n).map(|s| yr.partial(s)).collect()).collect();
        let mut b = Bivec::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let mut acc = Jet::cst(0.0);
                for r in 0..m {
                    for s in 0..m {
                        if r != s {
                            acc += jac[r][i] * w.get(r, s) * jac[s][j];
                        }
                    }
                }
                b.set(i, j, acc);
            }
        }
        b
    })))
}

pub fn pullback_one_form(alpha: &VectorField, phi: &SmoothMap) -> Result<VectorField> {
    if alpha.dim() != phi.codomain_dim() {
        return Err(Error::DimensionMismatch { expected: phi.codomain_dim(), found: alpha.dim() });
    }
    let (al, ph) = (alpha.clone(), phi.clone());
    let n = phi.domain_dim();
    Ok(VectorField::new(n, move |x| {
        with_local_seed(x, |x| {
            let y = ph.eval_jet(x);
            let a = al.eval_jet(&y);
            (0..n)
                .map(|i| {
                    let mut acc = Jet::cst(0.0);
                    for (r, yr) in y.iter().enumerate() {
                        acc += a[r] * yr.partial(i);
                    }
                    acc
                })
                .collect()
        })
    }))
}

/// The dual bivector `omega^{-1}` of a nondegenerate 2-form.
pub fn dual_bivector(omega: &BivectorField) -> BivectorField {
    let om = omega.clone();
    let n = omega.dim();
    BivectorField::new(n, move |x| {
        let w = om.eval_jet(x);
        let mut m = vec![Jet::cst(0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = w.get(i, j);
            }
        }
        let inv = jet_inverse(&m, n).unwrap_or_else(|| vec![Jet::cst(f64::NAN); n * n]);
        let mut b = Bivec::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                b.set(i, j, (inv[i * n + j] - inv[j * n + i]) * 0.5);
            }
        }
        b
    })
}

impl CosymplecticStructure {
    pub fn new(omega: BivectorField, alpha: VectorField) -> Result<Self> {
        if omega.dim() != alpha.dim() {
            return Err(Error::DimensionMismatch { expected: omega.dim(), found: alpha.dim() });
        }
        if omega.dim() % 2 == 0 {
            return Err(Error::InvalidArgument("cosymplectic manifolds have odd dimension".into()));
        }
        Ok(CosymplecticStructure { omega, alpha })
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    /// Coefficient of `omega^n ^ alpha` on `dx_0 ^ ... ^ dx_{2n}`.
    pub fn volume(&self, p: &[f64]) -> Result<f64> {
        let w = self.omega.matrix(p)?;
        let a = self.alpha.at(p)?;
        let d = self.dim();
        let mut acc = 0.0;
        for (i, ai) in a.iter().enumerate() {
            if *ai == 0.0 {
                continue;
            }
            let keep: Vec<usize> = (0..d).filter(|r| *r != i).collect();
            let sub = Mat::from_fn(d - 1, d - 1, |r, c| w[(keep[r], keep[c])]);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * ai * linalg::pfaffian(&sub)?;
        }
        Ok(fact((d - 1) / 2) * acc)
    }

    /// Closedness of both forms at `p` (max coordinate exterior derivative).
    pub fn closedness(&self, p: &[f64]) -> Result<f64> {
        Ok(d_two_form_max(&self.omega, p)?.max(linalg::max_abs(&d_one_form(&self.alpha, p)?)))
    }

    /// `[[omega, alpha], [-alpha^T, 0]]` as jets, row-major.
    fn bordered(&self, x: &[Jet]) -> Vec<Jet> {
        let d = self.dim();
        let n = d + 1;
        let w = self.omega.eval_jet(x);
        let a = self.alpha.eval_jet(x);
        let mut m = vec![Jet::cst(0.0); n * n];
        for i in 0..d {
            for j in 0..d {
                m[i * n + j] = w.get(i, j);
            }
            m[i * n + d] = a[i];
            m[d * n + i] = -a[i];
        }
        m
    }

    /// The induced Poisson structure as a field, from the upper-left block of
    /// the inverse bordered matrix; agrees with [`induced_poisson`].
    pub fn induced_poisson_field(&self) -> BivectorField {
        let me = self.clone();
        let d = self.dim();
        BivectorField::new(d, move |x| {
            let n = d + 1;
            let inv = jet_inverse(&me.bordered(x), n).unwrap_or_else(|| vec![Jet::cst(f64::NAN); n * n]);
            let mut b = Bivec::zeros(d);
            for i in 0..d {
                for j in (i + 1)..d {
                    b.set(i, j, inv[i * n + j]);
                }
            }
            b
        })
    }
}

/// True iff `omega^n ^ alpha` exceeds the volume threshold at every probe.
pub fn validate(c: &CosymplecticStructure, probes: &[Vec<f64>]) -> Result<bool> {
    for p in probes {
        if libm::fabs(c.volume(p)?) <= VOLUME {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `K` with `i_K omega = 0`, `alpha(K) = 1`.
pub fn reeb_field(c: &CosymplecticStructure, p: &[f64]) -> Result<Vec<f64>> {
    let d = c.dim();
    let w = c.omega.matrix(p)?;
    let a = c.alpha.at(p)?;
    let mut sys = Mat::zeros(d + 1, d);
    let mut rhs = Mat::zeros(d + 1, 1);
    for j in 0..d {
        for i in 0..d {
            sys[(j, i)] = w[(i, j)];
        }
        sys[(d, j)] = a[j];
    }
    rhs[(d, 0)] = 1.0;
    let (k, rank, res) = linalg::lstsq_min_norm(&sys, &rhs, SVD_CUTOFF);
    if rank < d || res > REEB_RESIDUAL {
        return Err(Error::Degenerate(alloc::format!("Reeb system rank {rank}, residual {res:e}")));
    }
    Ok(k.column(0).iter().copied().collect())
}

/// `Pi = B (B^T omega B)^{-1} B^T` for a basis `B` of `ker alpha`.
pub fn induced_poisson(c: &CosymplecticStructure, p: &[f64]) -> Result<Mat> {
    let d = c.dim();
    let a = c.alpha.at(p)?;
    let row = Mat::from_row_slice(1, d, &a);
    let svd = row.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Degenerate("svd".into()))?;
    if svd.singular_values[0] <= VOLUME {
        return Err(Error::Degenerate("alpha vanishes".into()));
    }
    // full right-singular basis: complete the first row to an orthonormal basis
    let a_unit = vt.row(0).transpose();
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    for e in 0..d {
        let mut v = nalgebra::DVector::from_fn(d, |r, _| if r == e { 1.0 } else { 0.0 });
        v -= &a_unit * a_unit.dot(&v);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        let nv = v.norm();
        if nv > 1e-8 && basis.len() < d - 1 {
            basis.push(v / nv);
        }
    }
    let b = Mat::from_fn(d, d - 1, |r, c| basis[c][r]);
    let wb = b.transpose() * c.omega.matrix(p)? * &b;
    let inv = wb.try_inverse().ok_or_else(|| Error::Degenerate("omega restricted to ker alpha".into()))?;
    Ok(&b * inv * b.transpose())
}

/// `omega_hat = t^* omega - s^* omega` and `alpha_hat = s^* alpha`, with the
/// check `s^* alpha = t^* alpha` at `probes`.
pub fn pair_chart_cosym_forms(
    c: &CosymplecticStructure,
    source: &SmoothMap,
    target: &SmoothMap,
    probes: &[Vec<f64>],
) -> Result<(BivectorField, VectorField)> {
    let ts = pullback_two_form(&c.omega, target)?;
    let ss = pullback_two_form(&c.omega, source)?;
    let n = source.domain_dim();
    let omega_hat = BivectorField::new(n, move |x| {
        let (a, b) = (ts.eval_jet(x), ss.eval_jet(x));
        let mut out = Bivec::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                out.set(i, j, a.get(i, j) - b.get(i, j));
            }
        }
        out
    });
    let alpha_hat = pullback_one_form(&c.alpha, source)?;
    let alpha_t = pullback_one_form(&c.alpha, target)?;
    for p in probes {
        let (u, v) = (alpha_hat.at(p)?, alpha_t.at(p)?);
        let gap = u.iter().zip(&v).fold(0.0f64, |m, (x, y)| m.max(libm::fabs(x - y)));
        if gap > ALPHA_MATCH {
            return Err(Error::InvalidArgument(alloc::format!("s*alpha and t*alpha differ by {gap:e} at {p:?}")));
        }
    }
    Ok((omega_hat, alpha_hat))
}

/// `omega~ = d(p alpha_hat) + omega_hat` on `(p, chart)`.
#[derive(Clone)]
pub struct SymplectizationChart {
    pub form: BivectorField,
    pub max_closedness: f64,
    pub min_abs_pfaffian: f64,
}

impl SymplectizationChart {
    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// A map on the base chart lifted to the symplectization (ignores `p`).
    pub fn lift(&self, phi: &SmoothMap) -> SmoothMap {
        let ph = phi.clone();
        SmoothMap::new(self.dim(), phi.codomain_dim(), move |x| ph.eval_jet(&x[1..]))
    }
}

pub fn symplectization_form(
    omega_hat: &BivectorField,
    alpha_hat: &VectorField,
    probes: &[Vec<f64>],
) -> Result<SymplectizationChart> {
    let m = omega_hat.dim();
    if alpha_hat.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, found: alpha_hat.dim() });
    }
    let (om, al) = (omega_hat.clone(), alpha_hat.clone());
    let n = m + 1;
    let form = BivectorField::new(n, move |x| local_bivec(n, x, |x| {
        let y = &x[1..];
        let w = om.eval_jet(y);
        let a = al.eval_jet(y);
        let mut b = Bivec::zeros(n);
        for j in 0..m {
            b.set(0, j + 1, a[j]);
        }
        for i in 0..m {
            for j in (i + 1)..m {
                // partial derivatives in the chart, which sits at offset 1
                let da = a[j].partial(i + 1) - a[i].partial(j + 1);
                b.set(i + 1, j + 1, w.get(i, j) + x[0] * da);
            }
        }
        b
    }));
    let mut max_closedness = 0.0f64;
    let mut min_abs_pfaffian = f64::INFINITY;
    for p in probes {
        let c = d_two_form_max(&form, p)?;
        let pf = libm::fabs(linalg::pfaffian(&form.matrix(p)?)?);
        max_closedness = max_closedness.max(c);
        min_abs_pfaffian = min_abs_pfaffian.min(pf);
        if c > CLOSED || pf <= VOLUME {
            return Err(Error::Degenerate(alloc::format!("symplectization fails at {p:?}: |d| = {c:e}, |Pf| = {pf:e}")));
        }
    }
    Ok(SymplectizationChart { form, max_closedness, min_abs_pfaffian })
}

/// The mapping torus of the identity on `(R^{2m}, omega_0)`: coordinates
/// `(q, z)` on `M`, `(q, z', z)` on the pair chart with target `(q, z')`
/// and source `(q, z)`.
pub fn identity_mapping_torus(omega0: &Mat) -> Result<(CosymplecticStructure, SmoothMap, SmoothMap)> {
    let m2 = omega0.nrows();
    if omega0.ncols() != m2 || m2 % 2 != 0 {
        return Err(Error::InvalidArgument("omega_0 must be square of even size".into()));
    }
    let d = m2 + 1;
    let mut full = Mat::zeros(d, d);
    full.view_mut((1, 1), (m2, m2)).copy_from(omega0);
    let omega = BivectorField::constant(&full);
    let alpha = VectorField::new(d, move |_| {
        let mut v = vec![Jet::cst(0.0); d];
        v[0] = Jet::cst(1.0);
        v
    });
    let c = CosymplecticStructure::new(omega, alpha)?;
    let n = 1 + 2 * m2;
    let mut tk = vec![0];
    tk.extend(1..=m2);
    let mut sk = vec![0];
    sk.extend((m2 + 1)..n);
    Ok((c, SmoothMap::projection(n, sk), SmoothMap::projection(n, tk)))
}
