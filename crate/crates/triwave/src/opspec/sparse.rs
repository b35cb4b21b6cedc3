//! Sparse assembly of an operator polynomial on a hard-cutoff product
//! Fock basis, and the commutator check built on it.
//!
//! Transitions that would exceed a cutoff are dropped and the source state
//! is flagged as a boundary state; conservation statements are then made
//! only on the interior, where the truncated matrix agrees exactly with
//! the untruncated operator.

use std::collections::BTreeMap;

use super::{OperatorExpr, OpspecError};
use crate::models::SymmetricDense;
use crate::scalar::Scalar;

/// Default cap on the product-basis dimension.
pub const DEFAULT_MAX_DIMENSION: usize = 200_000;

/// Real symmetric sparse matrix over a cutoff product Fock basis.
#[derive(Debug, Clone)]
pub struct SparseSymmetric<T: Scalar> {
    cutoffs: Vec<u32>,
    strides: Vec<usize>,
    dimension: usize,
    entries: BTreeMap<(usize, usize), T>,
    boundary: Vec<bool>,
}

impl<T: Scalar> SparseSymmetric<T> {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cutoffs(&self) -> &[u32] {
        &self.cutoffs
    }

    /// Stored nonzero entries `((row, col), value)` in deterministic order.
    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &T)> {
        self.entries.iter()
    }

    pub fn entry(&self, row: usize, col: usize) -> T {
        self.entries.get(&(row, col)).copied().unwrap_or(T::zero())
    }

    /// True when some transition out of this state was dropped at a cutoff.
    pub fn is_boundary(&self, state: usize) -> bool {
        self.boundary[state]
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Occupation numbers of a basis index (mode 0 slowest).
    pub fn occupations_of(&self, mut index: usize) -> Vec<u32> {
        let mut occ = Vec::with_capacity(self.cutoffs.len());
        for &stride in &self.strides {
            occ.push((index / stride) as u32);
            index %= stride;
        }
        occ
    }

    /// Basis index of an occupation vector, if within the cutoffs.
    pub fn index_of(&self, occupations: &[u32]) -> Option<usize> {
        if occupations.len() != self.cutoffs.len() {
            return None;
        }
        let mut index = 0usize;
        for ((&n, &cutoff), &stride) in occupations
            .iter()
            .zip(&self.cutoffs)
            .zip(&self.strides)
        {
            if n > cutoff {
                return None;
            }
            index += n as usize * stride;
        }
        Some(index)
    }

    /// Dense copy, for small oracle comparisons.
    pub fn to_dense(&self) -> SymmetricDense<T> {
        let mut dense = SymmetricDense::zeros(self.dimension);
        for (&(row, col), &value) in &self.entries {
            if row <= col {
                dense.set_sym(row, col, value);
            }
        }
        dense
    }
}

/// Assemble with the default dimension limit.
pub fn build_sparse<T: Scalar>(
    expr: &OperatorExpr<T>,
    cutoffs: &[u32],
) -> Result<SparseSymmetric<T>, OpspecError> {
    build_sparse_with_limit(expr, cutoffs, DEFAULT_MAX_DIMENSION)
}

/// Assemble the matrix of `expr` on the product basis with per-mode
/// occupations `0..=cutoff`. Matrix elements follow `a|n> = sqrt(n)|n-1>`
/// and `a'|n> = sqrt(n+1)|n+1>`; each element is the coefficient times one
/// square root of the exact integer product, so independently assembled
/// representations of the same operator agree bitwise.
pub fn build_sparse_with_limit<T: Scalar>(
    expr: &OperatorExpr<T>,
    cutoffs: &[u32],
    max_dimension: usize,
) -> Result<SparseSymmetric<T>, OpspecError> {
    if cutoffs.len() != expr.mode_count() {
        return Err(OpspecError::LengthMismatch {
            what: "cutoff list",
            got: cutoffs.len(),
            expected: expr.mode_count(),
        });
    }
    let mut dimension = 1u128;
    for &c in cutoffs {
        dimension = dimension.saturating_mul(u128::from(c) + 1);
    }
    if dimension > max_dimension as u128 {
        return Err(OpspecError::DimensionLimit {
            dimension: dimension.min(usize::MAX as u128) as usize,
            limit: max_dimension,
        });
    }
    let dimension = dimension as usize;

    let mut strides = vec![1usize; cutoffs.len()];
    for i in (0..cutoffs.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * (cutoffs[i + 1] as usize + 1);
    }

    let mut matrix = SparseSymmetric {
        cutoffs: cutoffs.to_vec(),
        strides,
        dimension,
        entries: BTreeMap::new(),
        boundary: vec![false; dimension],
    };

    let mut occ = vec![0u32; cutoffs.len()];
    for source in 0..dimension {
        decode(source, &matrix.strides, &mut occ);
        'monomials: for monomial in expr.monomials() {
            let mut target = occ.clone();
            let mut product: u128 = 1;
            // Factors are normal-ordered per mode and different modes
            // commute, so the monomial equals (all raisings)(all
            // lowerings). Applying every lowering first detects genuine
            // annihilation before any cutoff can be touched; a raising
            // that then exceeds a cutoff is a real dropped transition.
            for factor in monomial.factors.iter().rev() {
                if factor.dagger {
                    continue;
                }
                for _ in 0..factor.power {
                    let n = target[factor.mode];
                    if n == 0 {
                        continue 'monomials;
                    }
                    product *= u128::from(n);
                    target[factor.mode] = n - 1;
                }
            }
            for factor in &monomial.factors {
                if !factor.dagger {
                    continue;
                }
                for _ in 0..factor.power {
                    let n = target[factor.mode];
                    if n + 1 > cutoffs[factor.mode] {
                        matrix.boundary[source] = true;
                        continue 'monomials;
                    }
                    product *= u128::from(n) + 1;
                    target[factor.mode] = n + 1;
                }
            }
            let row = encode(&target, &matrix.strides);
            let amplitude = monomial.coefficient
                * T::from_u128(product).expect("integer product fits scalar").sqrt();
            *matrix
                .entries
                .entry((row, source))
                .or_insert_with(T::zero) += amplitude;
        }
    }
    matrix.entries.retain(|_, v| *v != T::zero());
    Ok(matrix)
}

fn decode(mut index: usize, strides: &[usize], occ: &mut [u32]) {
    for (slot, &stride) in occ.iter_mut().zip(strides) {
        *slot = (index / stride) as u32;
        index %= stride;
    }
}

fn encode(occ: &[u32], strides: &[usize]) -> usize {
    occ.iter()
        .zip(strides)
        .map(|(&n, &stride)| n as usize * stride)
        .sum()
}

/// Max absolute entry of `[H, M]` with `M = sum_i lambda_i n_i`, restricted
/// to rows and columns that are not boundary-flagged. The diagonal `M`
/// values are integers, so for a true invariant the result is exactly zero.
pub fn commutator_interior_norm<T: Scalar>(
    expr: &OperatorExpr<T>,
    lambda: &[i64],
    cutoffs: &[u32],
) -> Result<T, OpspecError> {
    commutator_interior_norm_with_limit(expr, lambda, cutoffs, DEFAULT_MAX_DIMENSION)
}

pub fn commutator_interior_norm_with_limit<T: Scalar>(
    expr: &OperatorExpr<T>,
    lambda: &[i64],
    cutoffs: &[u32],
    max_dimension: usize,
) -> Result<T, OpspecError> {
    if lambda.len() != expr.mode_count() {
        return Err(OpspecError::LengthMismatch {
            what: "invariant vector",
            got: lambda.len(),
            expected: expr.mode_count(),
        });
    }
    let matrix = build_sparse_with_limit(expr, cutoffs, max_dimension)?;
    let weight = |state: usize| -> i128 {
        matrix
            .occupations_of(state)
            .iter()
            .zip(lambda)
            .map(|(&n, &l)| i128::from(n) * i128::from(l))
            .sum()
    };
    let mut norm = T::zero();
    for (&(row, col), &value) in matrix.entries() {
        if matrix.is_boundary(row) || matrix.is_boundary(col) {
            continue;
        }
        let diff = weight(col) - weight(row);
        if diff == 0 {
            continue;
        }
        let entry = value * T::from_i128(diff).expect("small integer");
        norm = norm.max(entry.abs());
    }
    Ok(norm)
}
