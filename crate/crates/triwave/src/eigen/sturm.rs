//! Sturm-sequence eigenvalue counting for symmetric tridiagonal matrices.
//!
//! Independent of the QL solver: counts sign changes in the sequence of
//! leading-principal-minor ratios (equivalently, negative pivots of the
//! LDL^T factorization of `T - x I`), which equals the number of
//! eigenvalues strictly below `x`.

use crate::models::TridiagonalSymmetric;
use crate::scalar::Scalar;

/// Number of eigenvalues of `t` strictly less than `x`.
pub fn sturm_count<T: Scalar>(t: &TridiagonalSymmetric<T>, x: T) -> usize {
    let n = t.dimension();
    if n == 0 {
        return 0;
    }
    let d = t.diag();
    let e = t.offdiag();

    // Standard zero-pivot perturbation: an exactly singular leading minor
    // is nudged by a tiny positive amount on the scale of the matrix.
    let tiny = T::epsilon() * (T::one() + t.inf_norm() + x.abs());

    let mut count = 0usize;
    let mut q = d[0] - x;
    if q < T::zero() {
        count += 1;
    }
    for i in 1..n {
        let denom = if q == T::zero() { tiny } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if q < T::zero() {
            count += 1;
        }
    }
    count
}
