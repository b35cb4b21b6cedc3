//! Self-contained real symmetric eigensolvers.
//!
//! The tridiagonal core is implicit-shift QL iteration; dense symmetric
//! input is first reduced by Householder similarity transformations. A
//! Sturm-sequence eigenvalue counter provides an independent oracle for
//! cross-validating every solve. Block dimensions in this crate stay in
//! the hundreds, where these classic dense methods are the right tool.

mod householder;
mod ql;
mod sturm;

pub use sturm::sturm_count;

use thiserror::Error;

use crate::models::{SymmetricDense, TridiagonalSymmetric};
use crate::scalar::{from_f64, Scalar};

/// Iteration budget per eigenvalue before declaring non-convergence.
pub const MAX_SWEEPS_PER_EIGENVALUE: usize = 50;

/// Default residual tolerance for double-precision work.
pub fn default_tol<T: Scalar>() -> T {
    from_f64(1e-12)
}

#[derive(Debug, Error, PartialEq)]
pub enum EigenError {
    #[error("QL iteration failed to converge for eigenvalue index {index}")]
    NoConvergence { index: usize },
    #[error("dimension mismatch: matrix is {matrix}, spectrum is {spectrum}")]
    DimensionMismatch { matrix: usize, spectrum: usize },
}

/// Ascending eigenvalues with orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Scalar> {
    eigenvalues: Vec<T>,
    eigenvectors: Vec<Vec<T>>,
    source_dimension: usize,
}

impl<T: Scalar> Spectrum<T> {
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, i: usize) -> T {
        self.eigenvalues[i]
    }

    /// Unit-norm eigenvector belonging to `eigenvalue(i)`.
    pub fn eigenvector(&self, i: usize) -> &[T] {
        &self.eigenvectors[i]
    }

    pub fn source_dimension(&self) -> usize {
        self.source_dimension
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn ground_energy(&self) -> T {
        self.eigenvalues[0]
    }

    /// Sort ascending and fix each eigenvector's sign so its first nonzero
    /// component is positive; makes solver output deterministic.
    fn canonicalize(mut self) -> Self {
        let mut order: Vec<usize> = (0..self.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| {
            self.eigenvalues[i]
                .partial_cmp(&self.eigenvalues[j])
                .expect("finite eigenvalues")
        });
        let eigenvalues = order.iter().map(|&i| self.eigenvalues[i]).collect();
        let mut eigenvectors: Vec<Vec<T>> = order
            .iter()
            .map(|&i| std::mem::take(&mut self.eigenvectors[i]))
            .collect();
        for v in &mut eigenvectors {
            if let Some(first) = v.iter().find(|x| **x != T::zero()) {
                if *first < T::zero() {
                    for x in v.iter_mut() {
                        *x = -*x;
                    }
                }
            }
        }
        Spectrum {
            eigenvalues,
            eigenvectors,
            source_dimension: self.source_dimension,
        }
    }
}

/// Anything that acts as a real symmetric operator on vectors.
pub trait SymmetricOp<T: Scalar> {
    fn dimension(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[T], y: &mut [T]);

    /// Maximum absolute row sum.
    fn inf_norm(&self) -> T;
}

impl<T: Scalar> SymmetricOp<T> for TridiagonalSymmetric<T> {
    fn dimension(&self) -> usize {
        TridiagonalSymmetric::dimension(self)
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        let n = TridiagonalSymmetric::dimension(self);
        let d = self.diag();
        let e = self.offdiag();
        for i in 0..n {
            let mut acc = d[i] * x[i];
            if i > 0 {
                acc += e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += e[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    fn inf_norm(&self) -> T {
        TridiagonalSymmetric::inf_norm(self)
    }
}

impl<T: Scalar> SymmetricOp<T> for SymmetricDense<T> {
    fn dimension(&self) -> usize {
        SymmetricDense::dimension(self)
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        for (i, slot) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (j, xj) in x.iter().enumerate() {
                acc += self.get(i, j) * *xj;
            }
            *slot = acc;
        }
    }

    fn inf_norm(&self) -> T {
        SymmetricDense::inf_norm(self)
    }
}

/// Full spectrum of a symmetric tridiagonal matrix.
pub fn eig_tridiagonal<T: Scalar>(
    t: &TridiagonalSymmetric<T>,
    tol: T,
) -> Result<Spectrum<T>, EigenError> {
    let n = t.dimension();
    let mut d = t.diag().to_vec();
    let mut e = padded_offdiag(t);
    let mut v = identity(n);
    ql::ql_implicit_shift(&mut d, &mut e, Some(&mut v), tol)?;
    Ok(assemble_spectrum(d, v, n))
}

/// Eigenvalues only; skips eigenvector accumulation for speed in scans.
pub fn tridiagonal_eigenvalues<T: Scalar>(
    t: &TridiagonalSymmetric<T>,
    tol: T,
) -> Result<Vec<T>, EigenError> {
    let mut d = t.diag().to_vec();
    let mut e = padded_offdiag(t);
    ql::ql_implicit_shift(&mut d, &mut e, None, tol)?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

/// Full spectrum of a dense symmetric matrix: Householder reduction to
/// tridiagonal form, then QL with the transformation carried along.
pub fn eig_symmetric<T: Scalar>(
    a: &SymmetricDense<T>,
    tol: T,
) -> Result<Spectrum<T>, EigenError> {
    let n = a.dimension();
    let (mut d, mut e, mut v) = householder::tridiagonalize_in_place(a);
    ql::ql_implicit_shift(&mut d, &mut e, Some(&mut v), tol)?;
    Ok(assemble_spectrum(d, v, n))
}

/// Eigenvalues of a dense symmetric matrix.
pub fn symmetric_eigenvalues<T: Scalar>(
    a: &SymmetricDense<T>,
    tol: T,
) -> Result<Vec<T>, EigenError> {
    let (mut d, mut e, _) = householder::tridiagonalize_in_place(a);
    ql::ql_implicit_shift(&mut d, &mut e, None, tol)?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

/// Householder reduction exposed for oracle use: returns the tridiagonal
/// matrix orthogonally similar to `a` (same spectrum).
pub fn householder_tridiagonalize<T: Scalar>(a: &SymmetricDense<T>) -> TridiagonalSymmetric<T> {
    let (d, e, _) = householder::tridiagonalize_in_place(a);
    let n = d.len();
    TridiagonalSymmetric::new(d, e[..n.saturating_sub(1)].to_vec())
}

/// Largest eigenpair residual `max_i ||A v_i - lambda_i v_i||_2`.
pub fn residual_report<T: Scalar, M: SymmetricOp<T>>(
    matrix: &M,
    spectrum: &Spectrum<T>,
) -> Result<T, EigenError> {
    let n = matrix.dimension();
    if n != spectrum.source_dimension() || spectrum.len() != n {
        return Err(EigenError::DimensionMismatch {
            matrix: n,
            spectrum: spectrum.source_dimension(),
        });
    }
    let mut work = vec![T::zero(); n];
    let mut worst = T::zero();
    for i in 0..n {
        let v = spectrum.eigenvector(i);
        matrix.apply(v, &mut work);
        let lambda = spectrum.eigenvalue(i);
        let mut acc = T::zero();
        for k in 0..n {
            let r = work[k] - lambda * v[k];
            acc += r * r;
        }
        worst = worst.max(acc.sqrt());
    }
    Ok(worst)
}

/// Offdiagonal in the QL layout: `e[i]` couples `i` and `i+1`, `e[n-1] = 0`.
fn padded_offdiag<T: Scalar>(t: &TridiagonalSymmetric<T>) -> Vec<T> {
    let mut e = t.offdiag().to_vec();
    e.push(T::zero());
    e
}

fn identity<T: Scalar>(n: usize) -> Vec<Vec<T>> {
    let mut v = vec![vec![T::zero(); n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    v
}

/// Collect eigenvalues and the columns of the accumulated transformation
/// into a canonical spectrum.
fn assemble_spectrum<T: Scalar>(d: Vec<T>, v: Vec<Vec<T>>, n: usize) -> Spectrum<T> {
    let eigenvectors = (0..n)
        .map(|j| (0..n).map(|k| v[k][j]).collect())
        .collect();
    Spectrum {
        eigenvalues: d,
        eigenvectors,
        source_dimension: n,
    }
    .canonicalize()
}
