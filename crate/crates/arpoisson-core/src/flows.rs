//! Flow maps of `f(x, v) d/dx` and the derived functions `F`, `G`, `alpha`.
//!
//! The ODE path integrates, in rescaled time `tau = s / a`, the triple
//!
//! ```text
//! F' = a f(F),   L' = f_x(F) (1 + a L),   M' = L,   (F, L, M)(0) = (x, 0, 0)
//! ```
//!
//! so that `d_x F = 1 + a L` and `int_0^1 d_x F(a tau, x) dtau = 1 + a M`.
//! Then `G = -f(x) (1 + a M)`, `alpha = 1 / (1 + a M)` and
//! `(1 - alpha) / a = M / (1 + a M)` with no division by `a` or by `f`.
//! Below [`SEAM`] the same quantities come from a four-term Taylor series.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jet::{poly_eval, Jet};
use crate::ode::{integrate, Tolerances};
use crate::tensor::{ScalarField, VectorField};
use crate::tolerances::SEAM;

/// `f` and its first three derivatives in `x`, as jets.
pub trait Generator: Send + Sync {
    fn derivs(&self, x: Jet, v: &[Jet]) -> [Jet; 4];
    /// Number of Casimir parameters `v`.
    fn casimirs(&self) -> usize {
        0
    }
    fn name(&self) -> String;
}

#[derive(Clone)]
pub struct GeneratorFunction {
    inner: Arc<dyn Generator>,
    zeros: Vec<f64>,
}

struct Monomial(u32);

fn mono(x: Jet, c: f64, e: i64) -> Jet {
    if c == 0.0 || e < 0 {
        Jet::cst(0.0)
    } else {
        x.powi(e as i32) * c
    }
}

impl Generator for Monomial {
    fn derivs(&self, x: Jet, _v: &[Jet]) -> [Jet; 4] {
        let m = self.0 as i64;
        let mf = m as f64;
        [
            mono(x, 1.0, m),
            mono(x, mf, m - 1),
            mono(x, mf * (mf - 1.0), m - 2),
            mono(x, mf * (mf - 1.0) * (mf - 2.0), m - 3),
        ]
    }
    fn name(&self) -> String {
        alloc::format!("x^{}", self.0)
    }
}

struct Sine;

impl Generator for Sine {
    fn derivs(&self, x: Jet, _v: &[Jet]) -> [Jet; 4] {
        let (s, c) = (x.sin(), x.cos());
        [s, c, -s, -c]
    }
    fn name(&self) -> String {
        "sin x".into()
    }
}

impl GeneratorFunction {
    pub fn new(g: impl Generator + 'static, zeros: Vec<f64>) -> Self {
        GeneratorFunction { inner: Arc::new(g), zeros }
    }

    /// `f(x) = x^m`.
    pub fn monomial(m: u32) -> Self {
        GeneratorFunction::new(Monomial(m), vec![0.0])
    }

    /// `f(x) = sin x`, declared on charts containing only the zero at 0.
    pub fn sine() -> Self {
        GeneratorFunction::new(Sine, vec![0.0])
    }

    pub fn name(&self) -> String {
        self.inner.name()
    }

    pub fn casimirs(&self) -> usize {
        self.inner.casimirs()
    }

    pub fn zero_set(&self) -> &[f64] {
        &self.zeros
    }

    pub fn derivs(&self, x: Jet, v: &[Jet]) -> [Jet; 4] {
        self.inner.derivs(x, v)
    }

    pub fn f_jet(&self, x: Jet, v: &[Jet]) -> Jet {
        self.inner.derivs(x, v)[0]
    }

    pub fn f(&self, x: f64, v: &[f64]) -> f64 {
        self.f_jet(Jet::cst(x), &Jet::consts(v)).value()
    }

    /// `f` as a scalar field in the variables `(x, v)`.
    pub fn scalar_field(&self) -> ScalarField {
        let me = self.clone();
        ScalarField::new(1 + self.casimirs(), move |z| me.f_jet(z[0], &z[1..]))
    }

    /// Spot check of the declared zero set on `[lo, hi]` at `v`: every sign
    /// change on a uniform grid must bracket a declared zero.
    pub fn zeros_consistent(&self, lo: f64, hi: f64, samples: usize, v: &[f64]) -> bool {
        let n = samples.max(2);
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        xs.windows(2).all(|w| {
            let (fa, fb) = (self.f(w[0], v), self.f(w[1], v));
            if fa * fb < 0.0 {
                self.zeros.iter().any(|z| *z >= w[0] && *z <= w[1])
            } else {
                true
            }
        })
    }
}

/// Flow quantities at one `(a, x, v)`, carried as jets.
#[derive(Clone, Copy, Debug)]
pub struct FlowQuantities {
    pub f_cap: Jet,
    pub g_cap: Jet,
    pub alpha: Jet,
    /// `(1 - alpha) / a`, smooth through `a = 0`.
    pub kappa: Jet,
}

/// Which evaluation path produced a [`FlowQuantities`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Ode,
    Series,
}

pub fn branch_for(a: f64) -> Branch {
    if libm::fabs(a) < SEAM {
        Branch::Series
    } else {
        Branch::Ode
    }
}

/// Four-term Taylor branch in `a`.
pub fn quantities_series(f: &GeneratorFunction, a: Jet, x: Jet, v: &[Jet]) -> FlowQuantities {
    let [f0, f1, f2, f3] = f.derivs(x, v);
    let c1 = f1 * 0.5;
    let c2 = (f2 * f0 + f1 * f1) / 6.0;
    let c3 = (f3 * f0 * f0 + f2 * f1 * f0 * 4.0 + f1 * f1 * f1) / 24.0;
    // (S - 1) / a
    let tail = c1 + a * (c2 + a * c3);
    let s = 1.0 + a * tail;
    let g_cap = -(f0 * s);
    FlowQuantities { f_cap: x - a * g_cap, g_cap, alpha: s.recip(), kappa: tail / s }
}

/// ODE branch, integrated at full tolerance.
pub fn quantities_ode(f: &GeneratorFunction, a: Jet, x: Jet, v: &[Jet]) -> Result<FlowQuantities> {
    let vv: Vec<Jet> = v.to_vec();
    let rhs = |_t: f64, y: &[Jet]| {
        let d = f.derivs(y[0], &vv);
        vec![a * d[0], d[1] * (1.0 + a * y[1]), y[1]]
    };
    let (y, _) = integrate(rhs, 0.0, 1.0, &[x, Jet::cst(0.0), Jet::cst(0.0)], Tolerances::default())?;
    let m = y[2];
    let j = 1.0 + a * m;
    let f0 = f.f_jet(x, v);
    Ok(FlowQuantities { f_cap: y[0], g_cap: -(f0 * j), alpha: j.recip(), kappa: m / j })
}

/// Dispatches on [`SEAM`].
pub fn quantities(f: &GeneratorFunction, a: Jet, x: Jet, v: &[Jet]) -> Result<FlowQuantities> {
    match branch_for(a.value()) {
        Branch::Series => Ok(quantities_series(f, a, x, v)),
        Branch::Ode => quantities_ode(f, a, x, v),
    }
}

/// `F(a, x, v)`: the solution of `d_a F = f(F, v)` with `F(0) = x`.
#[allow(non_snake_case)]
pub fn solve_F(f: &GeneratorFunction, a: f64, x: f64, v: &[f64]) -> Result<f64> {
    if a == 0.0 {
        return Ok(x);
    }
    let vv = Jet::consts(v);
    let (y, _) = integrate(
        |_t, y| vec![f.f_jet(y[0], &vv) * a],
        0.0,
        1.0,
        &[Jet::cst(x)],
        Tolerances::default(),
    )?;
    Ok(y[0].value())
}

#[allow(non_snake_case)]
pub fn G_of(f: &GeneratorFunction, a: f64, x: f64, v: &[f64]) -> Result<f64> {
    Ok(quantities(f, Jet::cst(a), Jet::cst(x), &Jet::consts(v))?.g_cap.value())
}

/// The difference quotient `(x - F) / a` (for `a != 0`), kept as an
/// independent cross-check of [`G_of`].
pub fn g_quotient(f: &GeneratorFunction, a: f64, x: f64, v: &[f64]) -> Result<f64> {
    if a == 0.0 {
        return Ok(-f.f(x, v));
    }
    Ok((x - solve_F(f, a, x, v)?) / a)
}

pub fn alpha_of(f: &GeneratorFunction, a: f64, x: f64, v: &[f64]) -> Result<f64> {
    if a == 0.0 {
        return Ok(1.0);
    }
    Ok(quantities(f, Jet::cst(a), Jet::cst(x), &Jet::consts(v))?.alpha.value())
}

/// `(1 - alpha) / a`, the coefficient multiplying `b` on `d_b ^ d_y`.
pub fn kappa_of(f: &GeneratorFunction, a: f64, x: f64, v: &[f64]) -> Result<f64> {
    Ok(quantities(f, Jet::cst(a), Jet::cst(x), &Jet::consts(v))?.kappa.value())
}

/// `|d_x F - f(F) / f(x)|` with `d_x F` from a fourth-order central difference.
#[allow(non_snake_case)]
pub fn dFdx_check(f: &GeneratorFunction, a: f64, x: f64) -> Result<f64> {
    let fx = f.f(x, &[]);
    if fx == 0.0 {
        return Err(Error::InvalidArgument("f(x) = 0: identity undefined".into()));
    }
    let h = 1e-3 * (1.0 + libm::fabs(x));
    let e = |t: f64| solve_F(f, a, t, &[]);
    let fd = (-e(x + 2.0 * h)? + 8.0 * e(x + h)? - 8.0 * e(x - h)? + e(x - 2.0 * h)?) / (12.0 * h);
    let fc = solve_F(f, a, x, &[])?;
    Ok(libm::fabs(fd - f.f(fc, &[]) / fx))
}

// Smooth remainder functions, series near the origin.

const SERIES_RADIUS: f64 = 0.5;

fn series_jet(coeffs: impl Fn(usize) -> f64, terms: usize, t: Jet) -> Jet {
    let c: Vec<f64> = (0..terms).map(coeffs).collect();
    poly_eval(&c, t)
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |a, i| a * i as f64)
}

/// `(e^w - 1) / w`.
pub fn exp_mean_jet(w: Jet) -> Jet {
    if libm::fabs(w.value()) < SERIES_RADIUS {
        series_jet(|k| 1.0 / factorial(k + 1), 22, w)
    } else {
        w.exp_m1() / w
    }
}

/// `(e^w - 1 - w) / w^2`.
fn exp_rem2_jet(w: Jet) -> Jet {
    if libm::fabs(w.value()) < SERIES_RADIUS {
        series_jet(|k| 1.0 / factorial(k + 2), 22, w)
    } else {
        (w.exp_m1() - w) / (w * w)
    }
}

/// `-ln(1 - u) / u`.
fn log_mean_jet(u: Jet) -> Jet {
    if libm::fabs(u.value()) < SERIES_RADIUS {
        series_jet(|k| 1.0 / (k + 1) as f64, 60, u)
    } else {
        -(-u).ln_1p() / u
    }
}

/// `(-ln(1 - u) - u) / u^2`.
fn log_rem2_jet(u: Jet) -> Jet {
    if libm::fabs(u.value()) < SERIES_RADIUS {
        series_jet(|k| 1.0 / (k + 2) as f64, 60, u)
    } else {
        (-(-u).ln_1p() - u) / (u * u)
    }
}

/// Closed forms for `f = x^m`, written through smooth remainder functions so
/// that no branch divides by `a` or `x`.
pub fn closed_form_bm_jet(m: u32, a: Jet, x: Jet) -> Result<FlowQuantities> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if m == 1 {
        let e1 = exp_mean_jet(a);
        return Ok(FlowQuantities {
            f_cap: x * a.exp(),
            g_cap: -(x * e1),
            alpha: e1.recip(),
            kappa: exp_rem2_jet(a) / e1,
        });
    }
    let p = (m - 1) as f64;
    let xp = x.powi((m - 1) as i32);
    let u = a * xp * p;
    if u.value() >= 1.0 {
        return Err(Error::OutOfChart(alloc::format!(
            "1 - (m-1) a x^(m-1) = {} <= 0",
            1.0 - u.value()
        )));
    }
    let l1 = log_mean_jet(u);
    let w = u * l1 / p;
    let e1 = exp_mean_jet(w);
    let le = l1 * e1;
    let g_cap = -(x * xp * le);
    let kappa = xp * p * (l1 * l1 * exp_rem2_jet(w) / p + log_rem2_jet(u)) / le;
    Ok(FlowQuantities { f_cap: x - a * g_cap, g_cap, alpha: le.recip(), kappa })
}

/// `(F, G, alpha)` for `f = x^m` from the closed forms.
pub fn closed_form_bm(m: u32, a: f64, x: f64) -> Result<(f64, f64, f64)> {
    let q = closed_form_bm_jet(m, Jet::cst(a), Jet::cst(x))?;
    Ok((q.f_cap.value(), q.g_cap.value(), q.alpha.value()))
}

/// Time-one flow of `sum_i c_i X_i` starting at `u`, on jets.
pub fn time1_flow_jet(fields: &[VectorField], coeffs: &[Jet], u: &[Jet]) -> Result<Vec<Jet>> {
    if fields.len() != coeffs.len() {
        return Err(Error::DimensionMismatch { expected: fields.len(), found: coeffs.len() });
    }
    if let Some(fl) = fields.iter().find(|fl| fl.dim() != u.len()) {
        return Err(Error::DimensionMismatch { expected: u.len(), found: fl.dim() });
    }
    if coeffs.iter().all(|c| c.value() == 0.0 && c.dim() == 0) {
        return Ok(u.to_vec());
    }
    let n = u.len();
    let rhs = |_t: f64, y: &[Jet]| {
        let mut out = vec![Jet::cst(0.0); n];
        for (fl, c) in fields.iter().zip(coeffs) {
            for (o, xi) in out.iter_mut().zip(fl.eval_jet(y)) {
                *o += xi * *c;
            }
        }
        out
    };
    Ok(integrate(rhs, 0.0, 1.0, u, Tolerances::default())?.0)
}

pub fn time1_flow(fields: &[VectorField], coeffs: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let out = time1_flow_jet(fields, &Jet::consts(coeffs), &Jet::consts(u))?;
    Ok(out.iter().map(Jet::value).collect())
}

/// The exponential mean `(e^a - 1) / a` and its derivatives.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpMean;

impl ExpMean {
    pub fn value(&self, a: f64) -> f64 {
        if libm::fabs(a) < SEAM {
            self.value_series(a)
        } else {
            self.value_direct(a)
        }
    }

    pub fn value_direct(&self, a: f64) -> f64 {
        libm::expm1(a) / a
    }

    /// Four-term Taylor branch.
    pub fn value_series(&self, a: f64) -> f64 {
        1.0 + a * (0.5 + a * (1.0 / 6.0 + a / 24.0))
    }

    /// `n`-th derivative from the everywhere-convergent series
    /// `sum_k a^k / (k! (k + n + 1))`, switching to the recurrence for `|a| >= 2`.
    pub fn deriv(&self, n: usize, a: f64) -> f64 {
        if n == 0 {
            return self.value(a);
        }
        if libm::fabs(a) < 2.0 {
            self.deriv_series(n, a)
        } else {
            self.deriv_recurrence(n, a)
        }
    }

    pub fn deriv_series(&self, n: usize, a: f64) -> f64 {
        let mut sum = 0.0;
        let mut pow_over_fact = 1.0;
        for k in 0..80 {
            let term = pow_over_fact / (k + n + 1) as f64;
            sum += term;
            if libm::fabs(term) < 1e-18 * libm::fabs(sum) && k > 2 {
                break;
            }
            pow_over_fact *= a / (k + 1) as f64;
        }
        sum
    }

    /// `E^(n)(a) = (e^a - n E^(n-1)(a)) / a`, applied from `E(a)` upward.
    pub fn deriv_recurrence(&self, n: usize, a: f64) -> f64 {
        let ea = libm::exp(a);
        let mut d = self.value_direct(a);
        for j in 1..=n {
            d = (ea - j as f64 * d) / a;
        }
        d
    }
}
