//! Implicit-shift QL iteration for symmetric tridiagonal matrices.
//!
//! Port of the classic EISPACK `tql2` routine (also the basis of the JAMA
//! and Eigen implementations), generic over the scalar type and with
//! optional accumulation of the orthogonal transformation.

use super::{EigenError, MAX_SWEEPS_PER_EIGENVALUE};
use crate::scalar::Scalar;

/// Diagonalize in place. On entry `d` holds the diagonal and `e[i]` the
/// coupling between `i` and `i+1` with `e[n-1] = 0`; on exit `d` holds the
/// (unsorted) eigenvalues. When `v` is given it must hold the matrix whose
/// columns are to be rotated along (identity for eigenvectors of the
/// tridiagonal matrix itself, or the Householder accumulation for a dense
/// origin).
pub(super) fn ql_implicit_shift<T: Scalar>(
    d: &mut [T],
    e: &mut [T],
    mut v: Option<&mut Vec<Vec<T>>>,
    tol: T,
) -> Result<(), EigenError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    debug_assert_eq!(e.len(), n);
    debug_assert!(d.iter().chain(e.iter()).all(|x| x.is_finite()));

    let two = T::one() + T::one();
    let threshold = tol.max(T::epsilon());

    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());

        // Find the first negligible subdiagonal element at or after l.
        // e[n-1] is zero, so the search always terminates.
        let mut m = l;
        while e[m].abs() > threshold * tst1 {
            m += 1;
        }

        if m > l {
            let mut iter = 0usize;
            loop {
                iter += 1;

                // Implicit shift from the 2x2 block at l.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // QL sweep from m back down to l.
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    if let Some(v) = v.as_deref_mut() {
                        for row in v.iter_mut() {
                            let h = row[i + 1];
                            row[i + 1] = s * row[i] + c * h;
                            row[i] = c * row[i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= threshold * tst1 {
                    break;
                }
                if iter >= MAX_SWEEPS_PER_EIGENVALUE {
                    return Err(EigenError::NoConvergence { index: l });
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}
