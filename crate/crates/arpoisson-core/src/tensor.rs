//! Fields on coordinate charts, the Schouten jacobiator, pushforwards and
//! musical maps.
//!
//! Every field is a closure over [`Jet`] coordinates, so values, gradients
//! and Hessians come out of one forward evaluation. Finite differences only
//! appear in the cross-checks.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::jet::Jet;
use crate::linalg::{self, Mat};

/// Checks that `p` is a finite point of a `dim`-dimensional chart.
pub fn check_point(dim: usize, p: &[f64]) -> Result<()> {
    check_dim(dim, p.len())?;
    if dim == 0 {
        return Err(Error::InvalidArgument("zero-dimensional chart".into()));
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

type ScalarFn = dyn Fn(&[Jet]) -> Jet + Send + Sync;
type VecFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;
type BivecFn = dyn Fn(&[Jet]) -> Bivec + Send + Sync;

#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    f: Arc<ScalarFn>,
}

impl ScalarField {
    pub fn new(dim: usize, f: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> Self {
        ScalarField { dim, f: Arc::new(f) }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarField::new(dim, move |_| Jet::cst(c))
    }

    pub fn coordinate(dim: usize, i: usize) -> Self {
        ScalarField::new(dim, move |x| x[i])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Jet {
        (self.f)(x)
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        check_point(self.dim, p)?;
        Ok((self.f)(&Jet::point(p)).value())
    }

    /// Value, gradient and row-major Hessian at `p`.
    pub fn evaluate(&self, p: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        check_point(self.dim, p)?;
        let j = (self.f)(&Jet::seed(p));
        Ok((j.value(), j.gradient(self.dim), j.hessian(self.dim)))
    }

    /// Largest relative disagreement between the jet derivatives and central
    /// finite differences with step `h`.
    pub fn fd_defect(&self, p: &[f64], h: f64) -> Result<f64> {
        let (_, g, hs) = self.evaluate(p)?;
        let n = self.dim;
        let mut worst = 0.0f64;
        let mut q = p.to_vec();
        for i in 0..n {
            q[i] = p[i] + h;
            let (fp, gp, _) = self.evaluate(&q)?;
            q[i] = p[i] - h;
            let (fm, gm, _) = self.evaluate(&q)?;
            q[i] = p[i];
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max(rel_gap(fd, g[i]));
            for j in 0..n {
                let fdh = (gp[j] - gm[j]) / (2.0 * h);
                worst = worst.max(rel_gap(fdh, hs[i * n + j]));
            }
        }
        Ok(worst)
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    libm::fabs(a - b) / (1.0 + libm::fabs(a).max(libm::fabs(b)))
}

/// A tangent vector field on an `n`-dimensional chart.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    f: Arc<VecFn>,
}

impl VectorField {
    pub fn new(dim: usize, f: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        VectorField { dim, f: Arc::new(f) }
    }

    pub fn from_components(comps: Vec<ScalarField>) -> Result<Self> {
        let dim = comps.len();
        if let Some(c) = comps.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
        }
        Ok(VectorField::new(dim, move |x| comps.iter().map(|c| c.eval_jet(x)).collect()))
    }

    /// Constant coordinate vector field `d/dx_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        VectorField::new(dim, move |_| {
            let mut v = vec![Jet::cst(0.0); dim];
            v[i] = Jet::cst(1.0);
            v
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Vec<Jet> {
        (self.f)(x)
    }

    pub fn at(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_point(self.dim, p)?;
        Ok((self.f)(&Jet::point(p)).iter().map(Jet::value).collect())
    }

    /// Matrix `J[(i, j)] = d_j X^i`.
    pub fn jacobian(&self, p: &[f64]) -> Result<Mat> {
        check_point(self.dim, p)?;
        let v = (self.f)(&Jet::seed(p));
        Ok(Mat::from_fn(self.dim, self.dim, |i, j| v[i].d(j)))
    }

    /// Scales the field by a scalar function.
    pub fn scaled(&self, s: ScalarField) -> VectorField {
        let me = self.clone();
        VectorField::new(self.dim, move |x| {
            let c = s.eval_jet(x);
            me.eval_jet(x).into_iter().map(|v| v * c).collect()
        })
    }
}

/// `[X, Y]^l = X^m d_m Y^l - Y^m d_m X^l` at `p`.
pub fn lie_bracket(x: &VectorField, y: &VectorField, p: &[f64]) -> Result<Vec<f64>> {
    check_dim(x.dim(), y.dim())?;
    let xv = x.at(p)?;
    let yv = y.at(p)?;
    let jx = x.jacobian(p)?;
    let jy = y.jacobian(p)?;
    let n = x.dim();
    Ok((0..n)
        .map(|l| (0..n).map(|m| xv[m] * jy[(l, m)] - yv[m] * jx[(l, m)]).sum())
        .collect())
}

/// Smooth map between charts.
#[derive(Clone)]
pub struct SmoothMap {
    dom: usize,
    cod: usize,
    f: Arc<VecFn>,
}

impl SmoothMap {
    pub fn new(dom: usize, cod: usize, f: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        SmoothMap { dom, cod, f: Arc::new(f) }
    }

    pub fn identity(n: usize) -> Self {
        SmoothMap::new(n, n, |x| x.to_vec())
    }

    /// Projection onto the listed coordinates.
    pub fn projection(dom: usize, keep: Vec<usize>) -> Self {
        let cod = keep.len();
        SmoothMap::new(dom, cod, move |x| keep.iter().map(|&i| x[i]).collect())
    }

    pub fn domain_dim(&self) -> usize {
        self.dom
    }

    pub fn codomain_dim(&self) -> usize {
        self.cod
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Vec<Jet> {
        (self.f)(x)
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_point(self.dom, p)?;
        let out: Vec<f64> = (self.f)(&Jet::point(p)).iter().map(Jet::value).collect();
        check_dim(self.cod, out.len())?;
        Ok(out)
    }

    /// Image point and Jacobian (`cod x dom`).
    pub fn jacobian(&self, p: &[f64]) -> Result<(Vec<f64>, Mat)> {
        check_point(self.dom, p)?;
        let v = (self.f)(&Jet::seed(p));
        check_dim(self.cod, v.len())?;
        let j = Mat::from_fn(self.cod, self.dom, |i, k| v[i].d(k));
        Ok((v.iter().map(Jet::value).collect(), j))
    }

    /// `self` after `inner`.
    pub fn after(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        check_dim(self.dom, inner.cod)?;
        let outer = self.clone();
        let inner = inner.clone();
        Ok(SmoothMap::new(inner.dom, outer.cod, move |x| outer.eval_jet(&inner.eval_jet(x))))
    }
}

/// Upper-triangle storage of an antisymmetric array of jets.
#[derive(Clone, Debug)]
pub struct Bivec {
    n: usize,
    data: Vec<Jet>,
}

impl Bivec {
    pub fn zeros(n: usize) -> Self {
        Bivec { n, data: vec![Jet::cst(0.0); n * n.saturating_sub(1) / 2] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // row-major strict upper triangle
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> Jet {
        use core::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => Jet::cst(0.0),
            Less => self.data[self.idx(i, j)],
            Greater => -self.data[self.idx(j, i)],
        }
    }

    /// Sets the coefficient of `d_i ^ d_j` (and implicitly `d_j ^ d_i`).
    pub fn set(&mut self, i: usize, j: usize, v: Jet) {
        assert!(i != j, "diagonal of a bivector is identically zero");
        if i < j {
            let k = self.idx(i, j);
            self.data[k] = v;
        } else {
            let k = self.idx(j, i);
            self.data[k] = -v;
        }
    }

    /// Adds `v d_i ^ d_j`.
    pub fn add(&mut self, i: usize, j: usize, v: Jet) {
        if i == j {
            return;
        }
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    /// Adds `v (a ^ b)` for two vectors of jets.
    pub fn add_wedge(&mut self, a: &[Jet], b: &[Jet], v: Jet) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let c = a[i] * b[j] - a[j] * b[i];
                if c.value() != 0.0 || c.dim() > 0 {
                    let k = self.idx(i, j);
                    self.data[k] += c * v;
                }
            }
        }
    }

    pub fn values(&self) -> Mat {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j).value())
    }
}

#[derive(Clone)]
pub struct BivectorField {
    dim: usize,
    f: Arc<BivecFn>,
}

impl BivectorField {
    pub fn new(dim: usize, f: impl Fn(&[Jet]) -> Bivec + Send + Sync + 'static) -> Self {
        BivectorField { dim, f: Arc::new(f) }
    }

    pub fn zero(dim: usize) -> Self {
        BivectorField::new(dim, move |_| Bivec::zeros(dim))
    }

    /// Constant bivector from an antisymmetric matrix.
    pub fn constant(m: &Mat) -> Self {
        let n = m.nrows();
        let m = m.clone();
        BivectorField::new(n, move |_| {
            let mut b = Bivec::zeros(n);
            for i in 0..n {
                for j in (i + 1)..n {
                    b.set(i, j, Jet::cst(m[(i, j)]));
                }
            }
            b
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_jet(&self, x: &[Jet]) -> Bivec {
        (self.f)(x)
    }

    pub fn matrix(&self, p: &[f64]) -> Result<Mat> {
        check_point(self.dim, p)?;
        let b = (self.f)(&Jet::point(p));
        check_dim(self.dim, b.dim())?;
        Ok(b.values())
    }

    pub fn scaled(&self, c: f64) -> BivectorField {
        let me = self.clone();
        let n = self.dim;
        BivectorField::new(n, move |x| {
            let mut b = me.eval_jet(x);
            for v in b.data.iter_mut() {
                *v *= c;
            }
            b
        })
    }

    /// Pullback of the coefficients along `phi`: the field `p -> pi(phi(p))`
    /// as a matrix on the codomain chart (no tangent map applied).
    pub fn at_image(&self, phi: &SmoothMap, p: &[f64]) -> Result<Mat> {
        let q = phi.apply(p)?;
        self.matrix(&q)
    }
}

/// Fully antisymmetric rank-3 array.
#[derive(Clone, Debug)]
pub struct Trivector {
    n: usize,
    data: Vec<f64>,
}

impl Trivector {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
    }

    /// Largest violation of antisymmetry under transpositions.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut d = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = self.get(i, j, k);
                    d = d.max(libm::fabs(v + self.get(j, i, k)));
                    d = d.max(libm::fabs(v + self.get(i, k, j)));
                    d = d.max(libm::fabs(v + self.get(k, j, i)));
                }
            }
        }
        d
    }
}

/// `J^{ijk} = sum_l (pi^{il} d_l pi^{jk} + pi^{jl} d_l pi^{ki} + pi^{kl} d_l pi^{ij})`.
pub fn jacobiator(pi: &BivectorField, p: &[f64]) -> Result<Trivector> {
    let n = pi.dim();
    check_point(n, p)?;
    let b = pi.eval_jet(&Jet::seed(p));
    check_dim(n, b.dim())?;
    let val = |i: usize, j: usize| b.get(i, j).value();
    let der = |i: usize, j: usize, l: usize| b.get(i, j).d(l);
    let mut data = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += val(i, l) * der(j, k, l) + val(j, l) * der(k, i, l) + val(k, l) * der(i, j, l);
                }
                data[(i * n + j) * n + k] = s;
            }
        }
    }
    Ok(Trivector { n, data })
}

/// `(phi_* pi)^{ab} = J^a_i J^b_j pi^{ij}` evaluated at `phi(p)`.
pub fn pushforward_bivector(phi: &SmoothMap, pi: &BivectorField, p: &[f64]) -> Result<Mat> {
    check_dim(phi.domain_dim(), pi.dim())?;
    let (_, j) = phi.jacobian(p)?;
    let m = pi.matrix(p)?;
    Ok(&j * m * j.transpose())
}

/// Pfaffian of a 4x4 antisymmetric matrix,
/// `pi12 pi34 - pi13 pi24 + pi14 pi23`.
pub fn pfaffian4(m: &Mat) -> Result<f64> {
    if m.nrows() != 4 || m.ncols() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: m.nrows() });
    }
    let d = linalg::antisymmetry_defect(m);
    if d > crate::tolerances::ANTISYMMETRY * linalg::max_abs(m).max(1.0) {
        return Err(Error::NotAntisymmetric(d));
    }
    Ok(m[(0, 1)] * m[(2, 3)] - m[(0, 2)] * m[(1, 3)] + m[(0, 3)] * m[(1, 2)])
}

/// Musical map `pi^sharp(theta) = pi(theta, .)`, i.e. `v^j = theta_i pi^{ij}`.
pub fn sharp(pi: &BivectorField, theta: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    let n = pi.dim();
    check_dim(n, theta.len())?;
    let m = pi.matrix(p)?;
    Ok((0..n).map(|j| (0..n).map(|i| theta[i] * m[(i, j)]).sum()).collect())
}

/// Matrix of `pi^sharp` acting on column covectors (the transpose of `pi`).
pub fn sharp_matrix(pi_matrix: &Mat) -> Mat {
    pi_matrix.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_dx_dy() -> BivectorField {
        BivectorField::new(2, |x| {
            let mut b = Bivec::zeros(2);
            b.set(0, 1, x[0]);
            b
        })
    }

    #[test]
    fn bivec_storage_is_antisymmetric() {
        let mut b = Bivec::zeros(4);
        b.set(2, 1, Jet::cst(3.0));
        assert_eq!(b.get(1, 2).value(), -3.0);
        assert_eq!(b.get(2, 1).value(), 3.0);
        assert_eq!(b.get(3, 3).value(), 0.0);
    }

    #[test]
    fn jacobiator_hand_example() {
        // pi^{12} = 1, pi^{23} = y on R^3
        let pi = BivectorField::new(3, |x| {
            let mut b = Bivec::zeros(3);
            b.set(0, 1, Jet::cst(1.0));
            b.set(1, 2, x[1]);
            b
        });
        let j = jacobiator(&pi, &[0.3, -0.7, 1.9]).unwrap();
        assert!((j.get(0, 1, 2) - 1.0).abs() < 1e-15);
        assert!((j.get(1, 0, 2) + 1.0).abs() < 1e-15);
        assert!(j.antisymmetry_defect() < 1e-15);
    }

    #[test]
    fn sharp_matches_worked_example() {
        let v = sharp(&x_dx_dy(), &[1.0, 0.0], &[2.5, 1.0]).unwrap();
        assert_eq!(v, vec![0.0, 2.5]);
        let c = BivectorField::constant(&Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        assert_eq!(sharp(&c, &[0.0, 1.0], &[0.0, 0.0]).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn pushforward_scaling() {
        let phi = SmoothMap::new(2, 2, |x| vec![x[0] * 2.0, x[1]]);
        let c = BivectorField::constant(&Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let m = pushforward_bivector(&phi, &c, &[0.4, 0.2]).unwrap();
        assert_eq!(m[(0, 1)], 2.0);
    }

    #[test]
    fn pfaffian4_canonical() {
        // d_a ^ d_y + d_b ^ d_x in ordering (a, b, x, y)
        let mut m = Mat::zeros(4, 4);
        m[(0, 3)] = 1.0;
        m[(3, 0)] = -1.0;
        m[(1, 2)] = 1.0;
        m[(2, 1)] = -1.0;
        assert_eq!(pfaffian4(&m).unwrap(), 1.0);
        assert_eq!(pfaffian4(&Mat::zeros(4, 4)).unwrap(), 0.0);
        m[(0, 1)] = 1.0;
        assert!(pfaffian4(&m).is_err());
    }
}
