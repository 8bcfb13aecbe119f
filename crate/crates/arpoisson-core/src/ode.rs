//! Dormand–Prince 5(4) integrator on jet-valued states.
//!
//! Step control looks only at the values; derivatives carried by the jets
//! follow the same step sequence, which amounts to integrating the variational
//! equations alongside the state.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tolerances::{ODE_ATOL, ODE_MAX_STATE, ODE_MIN_STEP, ODE_RTOL};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { atol: ODE_ATOL, rtol: ODE_RTOL }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1` (with `t1 > t0`).
pub fn integrate<F>(rhs: F, t0: f64, t1: f64, y0: &[Jet], tol: Tolerances) -> Result<(Vec<Jet>, Stats)>
where
    F: Fn(f64, &[Jet]) -> Vec<Jet>,
{
    let n = y0.len();
    let mut stats = Stats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok((y, stats));
    }
    let mut h = span * 0.1;
    let mut k: [Vec<Jet>; 7] = Default::default();
    k[0] = rhs(t, &y);
    let mut stage = alloc::vec![Jet::cst(0.0); n];
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > 1_000_000 {
            return Err(Error::OutOfChart("step budget exhausted".into()));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (r, kr) in k.iter().enumerate().take(s) {
                    let a = A[s][r];
                    if a != 0.0 {
                        acc += kr[i] * (h * a);
                    }
                }
                stage[i] = acc;
            }
            k[s] = rhs(t + C[s] * h, &stage);
        }
        // stage 7 sits at the fifth-order solution (FSAL)
        let y_new = stage.clone();
        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i].value();
            }
            let sc = tol.atol + tol.rtol * libm::fabs(y[i].value()).max(libm::fabs(y_new[i].value()));
            err = err.max(libm::fabs(h * e) / sc);
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.value().is_finite()) {
            h *= 0.2;
            stats.rejected += 1;
        } else if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k[0] = core::mem::take(&mut k[6]);
            stats.accepted += 1;
            if y.iter().any(|v| libm::fabs(v.value()) > ODE_MAX_STATE) {
                return Err(Error::OutOfChart(format!("state exceeded {ODE_MAX_STATE:e} at t = {t}")));
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            stats.rejected += 1;
            h *= (0.9 * libm::pow(err, -0.2)).clamp(0.2, 1.0);
        }
        if h < ODE_MIN_STEP * span && t < t1 {
            return Err(Error::OutOfChart(format!("step size collapsed at t = {t}")));
        }
    }
    Ok((y, stats))
}
