//! Desingularization of `b^{2k}` structures.
//!
//! `h'` on `[-1, 1]` is `P(x^2)` for a polynomial `P` that agrees with
//! `u^{-k}` to order `2k + 1` at `u = 1`, so `h` joins the tails
//! `-1/((2k-1) x^{2k-1}) +- 2` smoothly. `P` is `T - (1-u)^{2k+2} Q` with `T`
//! the Taylor polynomial of `u^{-k}` at 1 and `Q` chosen by a small
//! constrained least-squares problem so that `h(1)` comes out right. The
//! degree of `Q` is raised until `P > 0` and `P u^k <= 1` (so `g_eps >= 0`).

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::flows::{closed_form_bm, closed_form_bm_jet, quantities_series, FlowQuantities, Generator, GeneratorFunction};
use crate::jet::{poly_eval, Jet};
use crate::linalg::Mat;
use crate::realization::FlowModel;
use crate::tensor::{Bivec, BivectorField};
use crate::tolerances::SEAM;

const MAX_Q_DEGREE: usize = 12;
const CHECK_SAMPLES: usize = 4000;

fn binom(n: u64, r: u64) -> f64 {
    let mut acc = 1.0;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &mut Vec<f64>, b: &[f64], s: f64) {
    if a.len() < b.len() {
        a.resize(b.len(), 0.0);
    }
    for (i, y) in b.iter().enumerate() {
        a[i] += s * y;
    }
}

fn poly_pow(a: &[f64], n: usize) -> Vec<f64> {
    (0..n).fold(vec![1.0], |acc, _| poly_mul(&acc, a))
}

fn poly_val(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, x| acc * t + x)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(i, x)| x * i as f64).collect()
}

/// The fixed profile `h` for a given `k`.
#[derive(Clone, Debug)]
pub struct HProfile {
    pub k: u32,
    /// `P` in powers of `u = x^2`.
    pub p: Vec<f64>,
    /// `P` in powers of `w = 1 - u`.
    pub p_w: Vec<f64>,
    /// `h` on `[1/2, 1]` in powers of `1 - x`.
    edge: Vec<f64>,
    /// Degree of the correction polynomial `Q`.
    pub q_degree: usize,
    /// `Q(s) = P(s^2)` and its first three derivatives, in powers of `s`.
    q_s: [Vec<f64>; 4],
}

impl HProfile {
    fn build(k: u32) -> Result<Self> {
        let kk = k as usize;
        let one_minus_u = [1.0, -1.0];
        let mut t = vec![0.0];
        for j in 0..=(2 * kk + 1) {
            poly_add(&mut t, &poly_pow(&one_minus_u, j), binom((kk + j - 1) as u64, j as u64));
        }
        let damp = poly_pow(&one_minus_u, 2 * kk + 2);
        let t_w: Vec<f64> = (0..=(2 * kk + 1)).map(|j| binom((kk + j - 1) as u64, j as u64)).collect();
        let mut w_damp = vec![0.0; 2 * kk + 3];
        w_damp[2 * kk + 2] = 1.0;
        let target = 2.0 - 1.0 / (2.0 * k as f64 - 1.0);
        for d in 0..=MAX_Q_DEGREE {
            let basis: Vec<Vec<f64>> = (0..=d)
                .map(|i| {
                    let mut ui = vec![0.0; i + 1];
                    ui[i] = -1.0;
                    poly_mul(&damp, &ui)
                })
                .collect();
            let len = basis.iter().map(Vec::len).max().unwrap().max(t.len());
            let pad = |v: &[f64]| {
                let mut w = v.to_vec();
                w.resize(len, 0.0);
                w
            };
            let gram = Mat::from_fn(len, len, |a, b| 1.0 / (2.0 * (a + b) as f64 + 1.0));
            let b_mat = Mat::from_fn(len, d + 1, |r, c| pad(&basis[c])[r]);
            let t_vec = Mat::from_column_slice(len, 1, &pad(&t));
            let mom = Mat::from_fn(len, 1, |a, _| 1.0 / (2.0 * a as f64 + 1.0));
            let h = b_mat.transpose() * &gram * &b_mat;
            let g = b_mat.transpose() * &gram * &t_vec;
            let a = b_mat.transpose() * &mom;
            let rhs_c = target - (mom.transpose() * &t_vec)[(0, 0)];
            let mut kkt = Mat::zeros(d + 2, d + 2);
            let mut rhs = Mat::zeros(d + 2, 1);
            for r in 0..=d {
                for c in 0..=d {
                    kkt[(r, c)] = 2.0 * h[(r, c)];
                }
                kkt[(r, d + 1)] = a[(r, 0)];
                kkt[(d + 1, r)] = a[(r, 0)];
                rhs[(r, 0)] = -2.0 * g[(r, 0)];
            }
            rhs[(d + 1, 0)] = rhs_c;
            let sol = match kkt.lu().solve(&rhs) {
                Some(s) => s,
                None => continue,
            };
            let mut p = t.clone();
            for (i, bi) in basis.iter().enumerate() {
                poly_add(&mut p, bi, sol[(i, 0)]);
            }
            // the same polynomial in w = 1 - u, which evaluates stably near u = 1
            let mut q_w = vec![0.0];
            for i in 0..=d {
                poly_add(&mut q_w, &poly_pow(&one_minus_u, i), -sol[(i, 0)]);
            }
            let mut p_w = t_w.clone();
            poly_add(&mut p_w, &poly_mul(&w_damp, &q_w), 1.0);
            let ok = (0..=CHECK_SAMPLES).all(|i| {
                let u = i as f64 / CHECK_SAMPLES as f64;
                let pv = poly_val(&p_w, 1.0 - u);
                pv > 0.0 && pv * libm::pow(u, k as f64) <= 1.0 + 1e-14
            });
            if ok {
                let mut q0 = vec![0.0; 2 * p.len() - 1];
                for (j, c) in p.iter().enumerate() {
                    q0[2 * j] = *c;
                }
                let q1 = poly_deriv(&q0);
                let q2 = poly_deriv(&q1);
                let q3 = poly_deriv(&q2);
                // h near x = 1 in powers of y = 1 - x, using w = y (2 - y)
                let mut c = vec![0.0];
                for (j, pj) in p_w.iter().enumerate() {
                    poly_add(&mut c, &poly_pow(&[0.0, 2.0, -1.0], j), *pj);
                }
                let mut edge = vec![0.0; c.len() + 1];
                edge[0] = target;
                for (m, cm) in c.iter().enumerate() {
                    edge[m + 1] = -cm / (m + 1) as f64;
                }
                return Ok(HProfile { k, p, p_w, edge, q_degree: d, q_s: [q0, q1, q2, q3] });
            }
        }
        Err(Error::Degenerate(alloc::format!("no positive blend found for k = {k}")))
    }

    fn tail_const(&self) -> f64 {
        2.0
    }

    fn odd(&self) -> f64 {
        2.0 * self.k as f64 - 1.0
    }

    /// `h` on the unit interval: `sum p_j x^{2j+1} / (2j+1)`.
    fn inner_jet(&self, x: Jet) -> Jet {
        let v = x.value();
        if v >= 0.5 {
            return poly_eval(&self.edge, 1.0 - x);
        }
        if v <= -0.5 {
            return -poly_eval(&self.edge, 1.0 + x);
        }
        let mut c = vec![0.0; 2 * self.p.len()];
        for (j, pj) in self.p.iter().enumerate() {
            c[2 * j + 1] = pj / (2 * j + 1) as f64;
        }
        poly_eval(&c, x)
    }

    pub fn h_jet(&self, x: Jet) -> Jet {
        let v = x.value();
        if libm::fabs(v) <= 1.0 {
            self.inner_jet(x)
        } else {
            let s = if v > 0.0 { 1.0 } else { -1.0 };
            -(x.powi(2 * self.k as i32 - 1) * self.odd()).recip() + s * self.tail_const()
        }
    }

    pub fn h(&self, x: f64) -> f64 {
        self.h_jet(Jet::cst(x)).value()
    }

    pub fn h_prime(&self, x: f64) -> f64 {
        if libm::fabs(x) <= 1.0 {
            poly_val(&self.p_w, 1.0 - x * x)
        } else {
            libm::pow(x, -2.0 * self.k as f64)
        }
    }

    /// `R = 1 / Q` and its first three derivatives at `s`.
    fn r_derivs(&self, s: Jet) -> [Jet; 4] {
        let q: [Jet; 4] = core::array::from_fn(|i| poly_eval(&self.q_s[i], s));
        let inv = q[0].recip();
        let inv2 = inv * inv;
        [
            inv,
            -q[1] * inv2,
            (q[1] * q[1] * 2.0 - q[0] * q[2]) * inv2 * inv,
            (q[1] * q[1] * q[1] * -6.0 + q[0] * q[1] * q[2] * 6.0 - q[0] * q[0] * q[3]) * inv2 * inv2,
        ]
    }

    /// Taylor coefficients of `R` at `s` up to order `n`.
    fn r_taylor(&self, s: f64, n: usize) -> Vec<f64> {
        let q = &self.q_s[0];
        let c: Vec<f64> = (0..=n)
            .map(|j| {
                q.iter()
                    .enumerate()
                    .skip(j)
                    .map(|(m, qm)| qm * binom(m as u64, j as u64) * libm::pow(s, (m - j) as f64))
                    .sum()
            })
            .collect();
        let mut r = vec![0.0; n + 1];
        r[0] = 1.0 / c[0];
        for j in 1..=n {
            let acc: f64 = (1..=j).map(|i| c[i] * r[j - i]).sum();
            r[j] = -acc / c[0];
        }
        r
    }
}

/// `(k, h, eps)`; `eps = 0` is the undeformed `b^{2k}` structure.
#[derive(Clone, Debug)]
pub struct DesingFamily {
    pub k: u32,
    pub h: Arc<HProfile>,
    pub eps: f64,
}

pub fn build_h(k: u32) -> Result<DesingFamily> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    Ok(DesingFamily { k, h: Arc::new(HProfile::build(k)?), eps: 0.0 })
}

impl DesingFamily {
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && libm::fabs(eps) < 1.0) {
            return Err(Error::InvalidArgument(alloc::format!("eps = {eps} outside (-1, 1)")));
        }
        Ok(DesingFamily { eps, ..self.clone() })
    }

    fn e2(&self) -> f64 {
        self.eps * self.eps
    }

    /// `eps^{-(4k-2)}`.
    fn scale(&self) -> f64 {
        libm::pow(self.e2(), -(2.0 * self.k as f64 - 1.0))
    }

    fn require_eps(&self) -> Result<()> {
        if self.eps == 0.0 {
            Err(Error::InvalidArgument("eps = 0 has no rescaled h".into()))
        } else {
            Ok(())
        }
    }

    pub fn h_eps_jet(&self, x: Jet) -> Result<Jet> {
        self.require_eps()?;
        let v = x.value();
        let k = self.k as i32;
        if libm::fabs(v) >= self.e2() {
            let s = if v > 0.0 { 1.0 } else { -1.0 };
            Ok(-(x.powi(2 * k - 1) * (2.0 * k as f64 - 1.0)).recip() + s * 2.0 * self.scale())
        } else {
            Ok(self.h.inner_jet(x / self.e2()) * self.scale())
        }
    }

    pub fn h_eps_prime_jet(&self, x: Jet) -> Result<Jet> {
        Ok(self.f_eps_derivs(x)[0].recip())
    }

    /// `x^{2k} + g_eps` and its first three derivatives.
    pub fn f_eps_derivs(&self, x: Jet) -> [Jet; 4] {
        let m = 2 * self.k as i32;
        let mf = m as f64;
        if self.eps == 0.0 || libm::fabs(x.value()) >= self.e2() {
            let pw = |c: f64, e: i32| if e < 0 { Jet::cst(0.0) } else { x.powi(e) * c };
            return [pw(1.0, m), pw(mf, m - 1), pw(mf * (mf - 1.0), m - 2), pw(mf * (mf - 1.0) * (mf - 2.0), m - 3)];
        }
        let e2 = self.e2();
        let r = self.h.r_derivs(x / e2);
        let base = libm::pow(e2, mf);
        core::array::from_fn(|j| r[j] * (base / libm::pow(e2, j as f64)))
    }

    pub fn generator(&self) -> GeneratorFunction {
        let zeros = if self.eps == 0.0 { vec![0.0] } else { vec![] };
        GeneratorFunction::new(DesingGenerator(self.clone()), zeros)
    }

    /// `pi_eps = (x^{2k} + g_eps) d_x ^ d_y (+) pi_beta` on `(x, y, q)`.
    pub fn poisson(&self, pi_beta: Option<&Mat>) -> BivectorField {
        let pb = pi_beta.cloned().unwrap_or_else(|| Mat::zeros(0, 0));
        let n = 2 + pb.nrows();
        let me = self.clone();
        BivectorField::new(n, move |z| {
            let mut b = Bivec::zeros(n);
            b.set(0, 1, me.f_eps_derivs(z[0])[0]);
            for r in 0..pb.nrows() {
                for c in (r + 1)..pb.nrows() {
                    b.set(2 + r, 2 + c, Jet::cst(pb[(r, c)]));
                }
            }
            b
        })
    }

    /// Flow model for the groupoid assembly: closed forms at `eps = 0`,
    /// inversion of `h_eps` otherwise.
    pub fn flow_model(&self) -> FlowModel {
        if self.eps == 0.0 {
            return FlowModel::ClosedForm(2 * self.k);
        }
        let me = self.clone();
        FlowModel::Custom(self.generator(), Arc::new(move |a, x, _v| me.quantities(a, x)))
    }

    /// `F, G, alpha, kappa` from `F = h_eps^{-1}(a + h_eps(x))`.
    pub fn quantities(&self, a: Jet, x: Jet) -> Result<FlowQuantities> {
        if self.eps == 0.0 {
            return closed_form_bm_jet(2 * self.k, a, x);
        }
        if libm::fabs(a.value()) < SEAM {
            return Ok(quantities_series(&self.generator(), a, x, &[]));
        }
        let f_cap = self.h_eps_inverse_jet(a + self.h_eps_jet(x)?)?;
        let g_cap = (x - f_cap) / a;
        let f0 = self.f_eps_derivs(x)[0];
        let alpha = -(f0 / g_cap);
        Ok(FlowQuantities { f_cap, g_cap, alpha, kappa: (1.0 - alpha) / a })
    }

    pub fn h_eps_inverse_jet(&self, y: Jet) -> Result<Jet> {
        let r = h_eps_inverse(self, y.value())?;
        let mut z = Jet::cst(r);
        for _ in 0..2 {
            z = z - (self.h_eps_jet(z)? - y) * self.f_eps_derivs(z)[0];
        }
        Ok(z)
    }
}

struct DesingGenerator(DesingFamily);

impl Generator for DesingGenerator {
    fn derivs(&self, x: Jet, _v: &[Jet]) -> [Jet; 4] {
        self.0.f_eps_derivs(x)
    }
    fn name(&self) -> alloc::string::String {
        alloc::format!("x^{} + g_eps (eps = {})", 2 * self.0.k, self.0.eps)
    }
}

pub fn h_eps(family: &DesingFamily, x: f64) -> Result<f64> {
    Ok(family.h_eps_jet(Jet::cst(x))?.value())
}

pub fn h_eps_prime(family: &DesingFamily, x: f64) -> Result<f64> {
    family.require_eps()?;
    if libm::fabs(x) >= family.e2() {
        return Ok(libm::pow(x, -2.0 * family.k as f64));
    }
    Ok(family.h.h_prime(x / family.e2()) * family.scale() / family.e2())
}

/// `g_eps = 1/h_eps' - x^{2k}`; identically zero for `eps = 0`.
pub fn g_eps(family: &DesingFamily, x: f64) -> f64 {
    if family.eps == 0.0 || libm::fabs(x) >= family.e2() {
        return 0.0;
    }
    let e2 = family.e2();
    let s = x / e2;
    let m = 2.0 * family.k as f64;
    libm::pow(e2, m) * (family.h.r_derivs(Jet::cst(s))[0].value() - libm::pow(s, m))
}

/// Closed-form inverse on the tails, `None` inside `(-eps^2, eps^2)`.
pub fn h_eps_inverse_tail(family: &DesingFamily, y: f64) -> Option<f64> {
    let odd = 2.0 * family.k as f64 - 1.0;
    let c = 2.0 * family.scale();
    let edge = h_eps(family, family.e2()).ok()?;
    let x = if y >= edge && y < c {
        libm::pow(1.0 / (odd * (c - y)), 1.0 / odd)
    } else if y <= -edge && y > -c {
        -libm::pow(1.0 / (odd * (c + y)), 1.0 / odd)
    } else {
        return None;
    };
    Some(x)
}

/// Bisection then Newton polish.
pub fn h_eps_inverse(family: &DesingFamily, y: f64) -> Result<f64> {
    family.require_eps()?;
    let c = 2.0 * family.scale();
    if !(y.is_finite() && libm::fabs(y) < c) {
        return Err(Error::OutOfChart(alloc::format!("{y} outside the range of h_eps")));
    }
    let h = |x: f64| h_eps(family, x).unwrap_or(f64::NAN);
    let (mut lo, mut hi) = (-family.e2(), family.e2());
    let mut tries = 0;
    while h(lo) > y || h(hi) < y {
        lo *= 2.0;
        hi *= 2.0;
        tries += 1;
        if tries > 1100 {
            return Err(Error::OutOfChart(alloc::format!("no bracket for {y}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = h_eps_prime(family, x)?;
        let nx = x - (h(x) - y) / d;
        if nx.is_finite() {
            x = nx;
        }
    }
    Ok(x)
}

#[allow(non_snake_case)]
pub fn desing_F(family: &DesingFamily, a: f64, x: f64) -> Result<f64> {
    if family.eps == 0.0 {
        return Ok(closed_form_bm(2 * family.k, a, x)?.0);
    }
    if a == 0.0 {
        return Ok(x);
    }
    h_eps_inverse(family, a + h_eps(family, x)?)
}

/// The branch formula for `alpha(a, x, eps)`. At `x = 0` with `eps != 0` the
/// quotient branch is used, since `g_eps(0) > 0` makes it differ from 1.
pub fn desing_alpha(family: &DesingFamily, a: f64, x: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(1.0);
    }
    if family.eps == 0.0 {
        if x == 0.0 {
            return Ok(1.0);
        }
        return Ok(closed_form_bm(2 * family.k, a, x)?.2);
    }
    Ok(family.quantities(Jet::cst(a), Jet::cst(x))?.alpha.value())
}

#[derive(Clone, Debug, Default)]
pub struct DesingReport {
    pub k: u32,
    pub eps: Vec<f64>,
    /// `sup[i][j] = sup_grid |g_{eps_i}^{(j)}|` for `j = 0..2k-1`.
    pub sup: Vec<Vec<f64>>,
    /// Log-log slope between consecutive `eps`, per derivative order.
    pub pairwise_orders: Vec<Vec<f64>>,
    /// Least-squares log-log slope over all `eps`, per derivative order.
    pub orders: Vec<f64>,
}

impl DesingReport {
    pub fn strictly_decreasing(&self) -> bool {
        (0..self.orders.len()).all(|j| self.sup.windows(2).all(|w| w[1][j] < w[0][j]))
    }
}

/// `j`-th derivative of `g_eps` at `x`, from Taylor arithmetic on the blend.
pub fn g_eps_derivative(family: &DesingFamily, j: usize, x: f64) -> f64 {
    if family.eps == 0.0 || libm::fabs(x) >= family.e2() {
        return 0.0;
    }
    let e2 = family.e2();
    let s = x / e2;
    let m = 2 * family.k as usize;
    let r = family.h.r_taylor(s, j);
    let fact: f64 = (1..=j).map(|i| i as f64).product();
    let mono = if j > m { 0.0 } else { binom(m as u64, j as u64) * fact * libm::pow(s, (m - j) as f64) };
    libm::pow(e2, m as f64 - j as f64) * (r[j] * fact - mono)
}

pub fn convergence_report(k: u32, eps_list: &[f64], grid: &[f64]) -> Result<DesingReport> {
    if eps_list.windows(2).any(|w| libm::fabs(w[1]) >= libm::fabs(w[0])) {
        return Err(Error::InvalidArgument("eps list must be decreasing".into()));
    }
    let base = build_h(k)?;
    let orders_n = 2 * k as usize;
    let mut sup = Vec::new();
    for &e in eps_list {
        let fam = base.with_eps(e)?;
        let row: Vec<f64> = (0..orders_n)
            .map(|j| grid.iter().fold(0.0f64, |m, &x| m.max(libm::fabs(g_eps_derivative(&fam, j, x)))))
            .collect();
        sup.push(row);
    }
    let le: Vec<f64> = eps_list.iter().map(|e| libm::log(libm::fabs(*e))).collect();
    let pairwise_orders = (1..eps_list.len())
        .map(|i| {
            (0..orders_n)
                .map(|j| libm::log(sup[i - 1][j] / sup[i][j]) / (le[i - 1] - le[i]))
                .collect()
        })
        .collect();
    let n = le.len() as f64;
    let mx = le.iter().sum::<f64>() / n;
    let orders = (0..orders_n)
        .map(|j| {
            let ly: Vec<f64> = sup.iter().map(|r| libm::log(r[j])).collect();
            let my = ly.iter().sum::<f64>() / n;
            let num: f64 = le.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
            let den: f64 = le.iter().map(|x| (x - mx) * (x - mx)).sum();
            num / den
        })
        .collect();
    Ok(DesingReport { k, eps: eps_list.to_vec(), sup, pairwise_orders, orders })
}
