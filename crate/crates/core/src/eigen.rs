//! Dense symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Deterministic: the sweep order is fixed, results are sorted ascending and
//! eigenvector signs are canonicalized, so identical input bits give
//! identical output bits.

use crate::error::{Error, Result};
use crate::scalar::{cast, widen, Scalar};
use crate::tensor::Tensor;

fn off_diagonal_norm<T: Scalar>(a: &Tensor<T>, n: usize) -> f64 {
    let mut acc = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = widen(a.at2(i, j));
                acc += v * v;
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a symmetric matrix. Returns eigenvalues in
/// ascending order and the matching eigenvectors as columns of an
/// orthogonal matrix. Each eigenvector's first nonzero component is made
/// positive.
///
/// `tol` bounds the final off-diagonal Frobenius mass relative to the full
/// norm; `max_sweeps` caps the cyclic passes (a sweep rotates every upper
/// pair once).
pub fn jacobi_eigh<T: Scalar>(
    a: &Tensor<T>,
    tol: f64,
    max_sweeps: usize,
) -> Result<(Vec<T>, Tensor<T>)> {
    let rows = a.rows();
    let cols = a.cols();
    if rows != cols {
        return Err(Error::shape("jacobi_eigh", &[rows, rows], &[rows, cols]));
    }
    let n = rows;
    if n == 0 {
        return Err(Error::domain("jacobi_eigh on an empty matrix"));
    }
    a.check_finite("jacobi_eigh input")?;
    let fro = {
        let mut acc = 0.0f64;
        for &v in a.data() {
            acc += widen(v) * widen(v);
        }
        acc.sqrt()
    };
    let sym_tol = 1e-12 * fro.max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (widen(a.at2(i, j)) - widen(a.at2(j, i))).abs() > sym_tol {
                return Err(Error::domain(format!(
                    "jacobi_eigh needs a symmetric matrix; entries ({i},{j}) and ({j},{i}) differ"
                )));
            }
        }
    }

    let mut m = a.clone();
    let mut v = Tensor::<T>::eye(n);
    let one = T::one();
    let two: T = cast(2.0);
    let target = tol * fro.max(f64::MIN_POSITIVE);
    let mut converged = n == 1 || off_diagonal_norm(&m, n) <= target;
    for _ in 0..max_sweeps {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.at2(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = m.at2(p, p);
                let aqq = m.at2(q, q);
                let theta = (aqq - app) / (two * apq);
                let t = if widen(theta).abs() > 1e150 {
                    // asymptotic form; avoids overflow in theta^2
                    one / (two * theta)
                } else {
                    let sign = if theta < T::zero() { -one } else { one };
                    sign / (theta.abs() + (theta * theta + one).sqrt())
                };
                let c = one / (t * t + one).sqrt();
                let s = t * c;
                let tau = s / (one + c);

                m.set2(p, p, app - t * apq);
                m.set2(q, q, aqq + t * apq);
                m.set2(p, q, T::zero());
                m.set2(q, p, T::zero());
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = m.at2(i, p);
                    let aiq = m.at2(i, q);
                    let nip = aip - s * (aiq + tau * aip);
                    let niq = aiq + s * (aip - tau * aiq);
                    m.set2(i, p, nip);
                    m.set2(p, i, nip);
                    m.set2(i, q, niq);
                    m.set2(q, i, niq);
                }
                for i in 0..n {
                    let vip = v.at2(i, p);
                    let viq = v.at2(i, q);
                    v.set2(i, p, vip - s * (viq + tau * vip));
                    v.set2(i, q, viq + s * (vip - tau * viq));
                }
            }
        }
        converged = off_diagonal_norm(&m, n) <= target;
    }
    if !converged {
        return Err(Error::Degenerate(format!(
            "jacobi_eigh did not converge within {max_sweeps} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        widen(m.at2(i, i))
            .partial_cmp(&widen(m.at2(j, j)))
            .expect("finite eigenvalues")
            .then(i.cmp(&j))
    });
    let values: Vec<T> = order.iter().map(|&i| m.at2(i, i)).collect();
    let mut vectors = Tensor::<T>::zeros(&[n, n]);
    for (new_col, &old_col) in order.iter().enumerate() {
        let mut flip = false;
        for i in 0..n {
            let x = v.at2(i, old_col);
            if x != T::zero() {
                flip = x < T::zero();
                break;
            }
        }
        for i in 0..n {
            let x = v.at2(i, old_col);
            vectors.set2(i, new_col, if flip { -x } else { x });
        }
    }
    Ok((values, vectors))
}
