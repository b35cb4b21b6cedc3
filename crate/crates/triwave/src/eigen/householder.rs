//! Householder reduction of a dense symmetric matrix to tridiagonal form
//! with accumulation of the orthogonal transformation (EISPACK `tred2`).

use crate::models::SymmetricDense;
use crate::scalar::Scalar;

/// Returns `(d, e, v)` with `d` the diagonal, `e` the subdiagonal in QL
/// layout (`e[i]` couples `i` and `i+1`, `e[n-1] = 0`) and `v` the
/// accumulated orthogonal matrix, so that `v^T a v` is tridiagonal.
pub(super) fn tridiagonalize_in_place<T: Scalar>(
    a: &SymmetricDense<T>,
) -> (Vec<T>, Vec<T>, Vec<Vec<T>>) {
    let n = a.dimension();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j)).collect())
        .collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    if n == 0 {
        return (d, e, v);
    }

    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        // Scale to avoid under/overflow while forming the reflector.
        let mut h = T::zero();
        let scale = d
            .iter()
            .take(i)
            .fold(T::zero(), |acc, item| acc + item.abs());
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
                v[j][i] = T::zero();
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = T::zero();
            }

            // Apply the similarity transformation to the remaining rows.
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let delta = f * e[k] + g * d[k];
                    v[k][j] -= delta;
                }
                d[j] = v[i - 1][j];
                v[i][j] = T::zero();
            }
        }
        d[i] = h;
    }

    // Accumulate the product of the reflectors.
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for row in v.iter().take(i + 1) {
                    g += row[i + 1] * row[j];
                }
                for (row, scale) in v.iter_mut().zip(&d).take(i + 1) {
                    row[j] -= g * *scale;
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = T::zero();
    }
    v[n - 1][n - 1] = T::one();
    e[0] = T::zero();

    // Shift e into QL layout: e[i] couples i and i+1.
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    (d, e, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TridiagonalSymmetric;

    /// The reduction must preserve the spectrum; cross-check with a matrix
    /// whose eigenvalues are known.
    #[test]
    fn preserves_trace_and_similarity() {
        let mut a = SymmetricDense::zeros(4);
        let entries = [
            [4.0, 1.0, -2.0, 2.0],
            [1.0, 2.0, 0.0, 1.0],
            [-2.0, 0.0, 3.0, -2.0],
            [2.0, 1.0, -2.0, -1.0],
        ];
        for i in 0..4 {
            for j in i..4 {
                a.set_sym(i, j, entries[i][j]);
            }
        }
        let (d, e, v) = tridiagonalize_in_place(&a);
        let trace: f64 = d.iter().sum();
        assert!((trace - 8.0).abs() < 1e-12);

        // v must be orthogonal.
        let n = 4;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| v[k][i] * v[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12, "v'v at ({i},{j})");
            }
        }

        // v^T a v must equal the reported tridiagonal matrix.
        let t = TridiagonalSymmetric::new(d.clone(), e[..n - 1].to_vec());
        for p in 0..n {
            for q in 0..n {
                let mut acc = 0.0;
                for r in 0..n {
                    for s in 0..n {
                        acc += v[r][p] * entries[r][s] * v[s][q];
                    }
                }
                let expected = if p == q {
                    t.diag()[p]
                } else if p + 1 == q {
                    t.offdiag()[p]
                } else if q + 1 == p {
                    t.offdiag()[q]
                } else {
                    0.0
                };
                assert!((acc - expected).abs() < 1e-12, "entry ({p},{q})");
            }
        }
    }
}
