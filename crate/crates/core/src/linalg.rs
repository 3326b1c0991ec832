//! Dense helpers for the tiny (n <= a handful) matrices of the estimation algebra.
//!
//! Matrices are row-major slices of length `n * n`.

use std::cmp::Ordering;

use crate::Real;

/// Ordering that treats incomparable (NaN) pairs as equal instead of panicking.
fn order<R: Real>(a: R, b: R) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Determinant by LU decomposition with partial pivoting; NaN if any entry is not finite.
pub fn determinant<R: Real>(n: usize, a: &[R]) -> R {
    debug_assert_eq!(a.len(), n * n);
    if a.iter().any(|x| !x.is_finite()) {
        return R::nan();
    }
    match n {
        0 => return R::one(),
        1 => return a[0],
        2 => return a[0] * a[3] - a[1] * a[2],
        _ => {}
    }
    let mut m = a.to_vec();
    let mut det = R::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| order(m[i * n + col].abs(), m[j * n + col].abs()))
            .unwrap();
        if m[pivot * n + col] == R::zero() {
            return R::zero();
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det = det * p;
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            for k in col..n {
                let v = m[col * n + k];
                m[row * n + k] = m[row * n + k] - f * v;
            }
        }
    }
    det
}

/// Inverse by Gauss-Jordan elimination with partial pivoting; `None` on an exact zero pivot.
pub fn inverse<R: Real>(n: usize, a: &[R]) -> Option<Vec<R>> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![R::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = R::one();
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| order(m[i * n + col].abs(), m[j * n + col].abs()))
            .unwrap();
        if m[pivot * n + col] == R::zero() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let p = m[col * n + col];
        for k in 0..n {
            m[col * n + k] = m[col * n + k] / p;
            inv[col * n + k] = inv[col * n + k] / p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row * n + col];
            if f == R::zero() {
                continue;
            }
            for k in 0..n {
                let (mv, iv) = (m[col * n + k], inv[col * n + k]);
                m[row * n + k] = m[row * n + k] - f * mv;
                inv[row * n + k] = inv[row * n + k] - f * iv;
            }
        }
    }
    Some(inv)
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, sorted ascending.
pub fn symmetric_eigenvalues<R: Real>(n: usize, a: &[R]) -> Vec<R> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let two = R::lit(2.0);
    for _sweep in 0..64 {
        let off: R = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        let scale: R = m.iter().map(|&x| x * x).sum();
        if off <= R::epsilon() * R::epsilon() * scale || off == R::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == R::zero() {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + R::one()).sqrt());
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<R> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|x, y| order(*x, *y));
    ev
}
