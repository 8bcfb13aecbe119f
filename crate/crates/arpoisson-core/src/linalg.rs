//! Small dense linear algebra on top of `nalgebra`.

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jet::Jet;

pub type Mat = DMatrix<f64>;

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(libm::fabs(*x)))
}

pub fn antisymmetry_defect(m: &Mat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(m + m.transpose()))
}

/// Minimum-norm least-squares solution of `a x = b`, discarding singular
/// values below `rel_cutoff * sigma_max`. Returns the solution, the number of
/// retained singular values and the max-norm residual.
pub fn lstsq_min_norm(a: &Mat, b: &Mat, rel_cutoff: f64) -> (Mat, usize, f64) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    let cut = rel_cutoff * smax;
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let mut x = Mat::zeros(a.ncols(), b.ncols());
    let mut rank = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            rank += 1;
            let ui = u.column(i);
            let vi = vt.row(i);
            let coef = ui.transpose() * b / s;
            x += vi.transpose() * coef;
        }
    }
    let res = max_abs(&(a * &x - b));
    (x, rank, res)
}

/// Numerical rank with singular values above `rel_tol * sigma_max`.
pub fn rank(a: &Mat, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |m, s| m.max(*s));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * smax).count()
}

pub fn singular_values(a: &Mat) -> Vec<f64> {
    a.clone().singular_values().iter().copied().collect()
}

/// Pfaffian of an even-dimensional antisymmetric matrix by expansion along the
/// first row. Intended for the small charts used here.
pub fn pfaffian(a: &Mat) -> Result<f64> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    let d = antisymmetry_defect(a);
    let scale = max_abs(a).max(1.0);
    if d > crate::tolerances::ANTISYMMETRY * scale {
        return Err(Error::NotAntisymmetric(d));
    }
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let idx: Vec<usize> = (0..n).collect();
    Ok(pf_rec(a, &idx))
}

fn pf_rec(a: &Mat, idx: &[usize]) -> f64 {
    match idx.len() {
        0 => 1.0,
        2 => a[(idx[0], idx[1])],
        _ => {
            let i0 = idx[0];
            let mut acc = 0.0;
            let mut rest: Vec<usize> = Vec::with_capacity(idx.len() - 2);
            for (pos, &j) in idx.iter().enumerate().skip(1) {
                let aij = a[(i0, j)];
                if aij == 0.0 {
                    continue;
                }
                rest.clear();
                rest.extend(idx.iter().skip(1).filter(|&&k| k != j));
                let sign = if pos % 2 == 1 { 1.0 } else { -1.0 };
                acc += sign * aij * pf_rec(a, &rest);
            }
            acc
        }
    }
}

/// Inverse of a `k x k` row-major matrix of jets by Gauss–Jordan elimination
/// with partial pivoting on the values. `None` when a pivot vanishes.
pub fn jet_inverse(a: &[Jet], k: usize) -> Option<Vec<Jet>> {
    let mut m = a.to_vec();
    let mut inv = alloc::vec![Jet::cst(0.0); k * k];
    for i in 0..k {
        inv[i * k + i] = Jet::cst(1.0);
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&r1, &r2| {
            libm::fabs(m[r1 * k + c].value()).partial_cmp(&libm::fabs(m[r2 * k + c].value())).unwrap_or(core::cmp::Ordering::Equal)
        })?;
        if m[piv * k + c].value() == 0.0 {
            return None;
        }
        if piv != c {
            for j in 0..k {
                m.swap(piv * k + j, c * k + j);
                inv.swap(piv * k + j, c * k + j);
            }
        }
        let d = m[c * k + c].recip();
        for j in 0..k {
            m[c * k + j] = m[c * k + j] * d;
            inv[c * k + j] = inv[c * k + j] * d;
        }
        for r in 0..k {
            if r != c {
                let f = m[r * k + c];
                if f.value() == 0.0 && f.dim() == 0 {
                    continue;
                }
                for j in 0..k {
                    m[r * k + j] = m[r * k + j] - f * m[c * k + j];
                    inv[r * k + j] = inv[r * k + j] - f * inv[c * k + j];
                }
            }
        }
    }
    Some(inv)
}

/// Product of row-major jet matrices `(r x s) * (s x c)`.
pub fn jet_matmul(a: &[Jet], b: &[Jet], r: usize, s: usize, c: usize) -> Vec<Jet> {
    let mut out = alloc::vec![Jet::cst(0.0); r * c];
    for i in 0..r {
        for j in 0..c {
            let mut acc = Jet::cst(0.0);
            for l in 0..s {
                acc += a[i * s + l] * b[l * c + j];
            }
            out[i * c + j] = acc;
        }
    }
    out
}

/// Transpose of a row-major `r x c` jet matrix.
pub fn jet_transpose(a: &[Jet], r: usize, c: usize) -> Vec<Jet> {
    let mut out = alloc::vec![Jet::cst(0.0); r * c];
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = a[i * c + j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pfaffian_squares_to_determinant() {
        let mut m = Mat::zeros(6, 6);
        let vals = [0.3, -1.2, 0.7, 2.0, 0.1, -0.4, 1.1, 0.5, -0.9, 0.8, 1.7, -0.2, 0.6, 0.05, -1.3];
        let mut k = 0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                m[(i, j)] = vals[k];
                m[(j, i)] = -vals[k];
                k += 1;
            }
        }
        let pf = pfaffian(&m).unwrap();
        let det = m.clone().determinant();
        assert!((pf * pf - det).abs() < 1e-12 * det.abs().max(1.0));
    }

    #[test]
    fn min_norm_solution_of_rank_deficient_system() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = Mat::from_row_slice(2, 1, &[2.0, 2.0]);
        let (x, r, res) = lstsq_min_norm(&a, &b, 1e-10);
        assert_eq!(r, 1);
        assert!(res < 1e-14);
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14 && (x[(1, 0)] - 1.0).abs() < 1e-14);
    }
}
