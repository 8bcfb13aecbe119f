//! Second-order forward-mode jets.
//!
//! A [`Jet`] carries a value together with its gradient and Hessian with
//! respect to up to [`MAX_DIM`] seed variables. Constants have `n = 0`;
//! binary operations take the larger of the two dimensions.

use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Largest number of seed variables a jet can track.
pub const MAX_DIM: usize = 10;
const HESS_LEN: usize = MAX_DIM * (MAX_DIM + 1) / 2;

#[inline]
fn hidx(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

#[derive(Clone, Copy, Debug)]
pub struct Jet {
    n: usize,
    v: f64,
    g: [f64; MAX_DIM],
    h: [f64; HESS_LEN],
}

impl Default for Jet {
    fn default() -> Self {
        Jet::cst(0.0)
    }
}

impl From<f64> for Jet {
    fn from(c: f64) -> Self {
        Jet::cst(c)
    }
}

impl Jet {
    pub const fn cst(v: f64) -> Self {
        Jet { n: 0, v, g: [0.0; MAX_DIM], h: [0.0; HESS_LEN] }
    }

    /// Seed variable `i` of an `n`-dimensional chart at value `v`.
    pub fn var(v: f64, i: usize, n: usize) -> Self {
        assert!(n <= MAX_DIM && i < n, "jet dimension {n} exceeds MAX_DIM or bad index {i}");
        let mut j = Jet { n, ..Jet::cst(v) };
        j.g[i] = 1.0;
        j
    }

    /// Seeds every coordinate of `p`.
    pub fn seed(p: &[f64]) -> alloc::vec::Vec<Jet> {
        p.iter().enumerate().map(|(i, &x)| Jet::var(x, i, p.len())).collect()
    }

    /// Seeds `p` when it fits in a jet, so that closures which differentiate
    /// their inputs (pullbacks, exterior derivatives) see a chart point;
    /// larger points are passed as constants.
    pub fn point(p: &[f64]) -> alloc::vec::Vec<Jet> {
        if p.len() <= MAX_DIM {
            Jet::seed(p)
        } else {
            Jet::consts(p)
        }
    }

    pub fn consts(p: &[f64]) -> alloc::vec::Vec<Jet> {
        p.iter().map(|&x| Jet::cst(x)).collect()
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self, i: usize) -> f64 {
        if i < MAX_DIM {
            self.g[i]
        } else {
            0.0
        }
    }

    #[inline]
    pub fn dd(&self, i: usize, j: usize) -> f64 {
        if i < MAX_DIM && j < MAX_DIM {
            self.h[hidx(i, j)]
        } else {
            0.0
        }
    }

    pub fn gradient(&self, n: usize) -> alloc::vec::Vec<f64> {
        (0..n).map(|i| self.d(i)).collect()
    }

    /// Dense symmetric Hessian, row-major `n*n`.
    pub fn hessian(&self, n: usize) -> alloc::vec::Vec<f64> {
        let mut out = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.dd(i, j);
            }
        }
        out
    }

    /// `d/dx_i` of this jet, correct to first order only (its Hessian is
    /// dropped, since third derivatives are not tracked).
    pub fn partial(&self, i: usize) -> Jet {
        let n = self.n;
        let mut r = Jet { n, ..Jet::cst(self.d(i)) };
        for j in 0..n {
            r.g[j] = self.dd(i, j);
        }
        r
    }

    /// Reinterprets a jet in local variables `u` as a jet in the variables of
    /// `inner`, where `u_r = inner[r]` (second-order chain rule).
    pub fn compose(&self, inner: &[Jet]) -> Jet {
        let n = inner.iter().map(|j| j.n).max().unwrap_or(0);
        let m = self.n.min(inner.len());
        let mut r = Jet { n, ..Jet::cst(self.v) };
        for j in 0..n {
            r.g[j] = (0..m).map(|a| self.g[a] * inner[a].d(j)).sum();
        }
        for k in 0..n {
            for j in 0..=k {
                let mut acc = 0.0;
                for a in 0..m {
                    acc += self.g[a] * inner[a].dd(j, k);
                    for b in 0..m {
                        acc += self.h[hidx(a, b)] * inner[a].d(j) * inner[b].d(k);
                    }
                }
                r.h[hidx(j, k)] = acc;
            }
        }
        r
    }

    /// Applies a scalar function given its value and first two derivatives.
    #[inline]
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Jet {
        let n = self.n;
        let mut r = Jet { n, ..Jet::cst(f0) };
        for i in 0..n {
            r.g[i] = f1 * self.g[i];
        }
        for j in 0..n {
            for i in 0..=j {
                let k = hidx(i, j);
                r.h[k] = f1 * self.h[k] + f2 * self.g[i] * self.g[j];
            }
        }
        r
    }

    pub fn recip(self) -> Jet {
        let v = self.v;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn exp(self) -> Jet {
        let e = libm::exp(self.v);
        self.chain(e, e, e)
    }

    pub fn exp_m1(self) -> Jet {
        let e = libm::exp(self.v);
        self.chain(libm::expm1(self.v), e, e)
    }

    pub fn ln(self) -> Jet {
        let v = self.v;
        self.chain(libm::log(v), 1.0 / v, -1.0 / (v * v))
    }

    pub fn ln_1p(self) -> Jet {
        let w = 1.0 + self.v;
        self.chain(libm::log1p(self.v), 1.0 / w, -1.0 / (w * w))
    }

    pub fn sin(self) -> Jet {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = (libm::sin(self.v), libm::cos(self.v));
        self.chain(c, -s, -c)
    }

    pub fn sqrt(self) -> Jet {
        let s = libm::sqrt(self.v);
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    /// Real power with a constant exponent (base must be positive unless `p` is integral).
    pub fn powf(self, p: f64) -> Jet {
        let v = self.v;
        self.chain(libm::pow(v, p), p * libm::pow(v, p - 1.0), p * (p - 1.0) * libm::pow(v, p - 2.0))
    }

    pub fn powi(self, m: i32) -> Jet {
        match m {
            0 => Jet::cst(1.0),
            1 => self,
            2 => self * self,
            _ => {
                let v = self.v;
                let mf = m as f64;
                self.chain(
                    libm::pow(v, mf),
                    mf * libm::pow(v, mf - 1.0),
                    mf * (mf - 1.0) * libm::pow(v, mf - 2.0),
                )
            }
        }
    }

    pub fn abs_value(&self) -> f64 {
        libm::fabs(self.v)
    }
}

/// Evaluates a polynomial `c[0] + c[1] t + ...` at a jet by Horner's rule.
pub fn poly_eval(c: &[f64], t: Jet) -> Jet {
    let mut acc = Jet::cst(0.0);
    for &ci in c.iter().rev() {
        acc = acc * t + ci;
    }
    acc
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        let n = self.n.max(o.n);
        let mut r = Jet { n, ..Jet::cst(self.v + o.v) };
        for i in 0..n {
            r.g[i] = self.g[i] + o.g[i];
        }
        for k in 0..n * (n + 1) / 2 {
            r.h[k] = self.h[k] + o.h[k];
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        let n = self.n;
        let mut r = Jet { n, ..Jet::cst(-self.v) };
        for i in 0..n {
            r.g[i] = -self.g[i];
        }
        for k in 0..n * (n + 1) / 2 {
            r.h[k] = -self.h[k];
        }
        r
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        let n = self.n.max(o.n);
        let mut r = Jet { n, ..Jet::cst(self.v * o.v) };
        for i in 0..n {
            r.g[i] = self.v * o.g[i] + o.v * self.g[i];
        }
        for j in 0..n {
            for i in 0..=j {
                let k = hidx(i, j);
                r.h[k] = self.v * o.h[k]
                    + o.v * self.h[k]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        r
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, o: Jet) -> Jet {
        if o.n == 0 {
            return self * (1.0 / o.v);
        }
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, c: f64) -> Jet {
        self.v += c;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, c: f64) -> Jet {
        self.v -= c;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(mut self, c: f64) -> Jet {
        let n = self.n;
        self.v *= c;
        for i in 0..n {
            self.g[i] *= c;
        }
        for k in 0..n * (n + 1) / 2 {
            self.h[k] *= c;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, c: f64) -> Jet {
        self * (1.0 / c)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn add(self, j: Jet) -> Jet {
        j + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn sub(self, j: Jet) -> Jet {
        (-j) + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn div(self, j: Jet) -> Jet {
        j.recip() * self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = *self + o;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        *self = *self - o;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, c: f64) {
        *self = *self * c;
    }
}

/// Evaluates `f` at a fresh seed of the values of `x` and composes the
/// result back onto `x`. Closures that differentiate their inputs with
/// [`Jet::partial`] stay correct when called on arbitrary jets this way.
pub fn with_local_seed<F>(x: &[Jet], f: F) -> alloc::vec::Vec<Jet>
where
    F: FnOnce(&[Jet]) -> alloc::vec::Vec<Jet>,
{
    let p: alloc::vec::Vec<f64> = x.iter().map(Jet::value).collect();
    if p.len() > MAX_DIM {
        return f(&Jet::consts(&p));
    }
    let local = Jet::seed(&p);
    let identity = x.iter().enumerate().all(|(i, j)| {
        j.n == x.len() && (0..j.n).all(|k| j.g[k] == if k == i { 1.0 } else { 0.0 }) && j.h.iter().all(|h| *h == 0.0)
    });
    let out = f(&local);
    if identity {
        out
    } else {
        out.iter().map(|o| o.compose(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_second_order() {
        let x = Jet::var(1.5, 0, 2);
        let y = Jet::var(-0.5, 1, 2);
        let f = x * x * y;
        assert_eq!(f.value(), 1.5 * 1.5 * -0.5);
        assert!((f.d(0) - 2.0 * 1.5 * -0.5).abs() < 1e-15);
        assert!((f.d(1) - 2.25).abs() < 1e-15);
        assert!((f.dd(0, 0) - 2.0 * -0.5).abs() < 1e-15);
        assert!((f.dd(0, 1) - 3.0).abs() < 1e-15);
        assert_eq!(f.dd(1, 1), 0.0);
    }

    #[test]
    fn transcendental_derivatives() {
        let x = Jet::var(0.7, 0, 1);
        let f = x.sin() * x.exp() / (x + 2.0).ln();
        let h = 1e-5;
        let e = |t: f64| libm::sin(t) * libm::exp(t) / libm::log(t + 2.0);
        let fd1 = (e(0.7 + h) - e(0.7 - h)) / (2.0 * h);
        let fd2 = (e(0.7 + h) - 2.0 * e(0.7) + e(0.7 - h)) / (h * h);
        assert!((f.d(0) - fd1).abs() < 1e-8);
        assert!((f.dd(0, 0) - fd2).abs() < 1e-4);
    }
}
