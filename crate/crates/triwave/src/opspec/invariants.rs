//! Integer null-space computation for the monomial net-change vectors:
//! every integer vector `lambda` with `lambda . delta = 0` for all
//! monomials defines a conserved combination `sum_i lambda_i n_i`.

use super::OperatorExpr;
use crate::scalar::Scalar;

/// Primitive integer basis of the conserved-combination space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantBasis {
    vectors: Vec<Vec<i64>>,
}

impl InvariantBasis {
    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Integer basis of `{lambda : lambda . delta_m = 0 for every monomial}`.
///
/// Diagonal monomials have `delta = 0` and impose no constraint. The basis
/// is canonical: one vector per free column of the reduced constraint
/// matrix (free variable set to one, pivots back-substituted), scaled to
/// primitive integers with a positive leading entry, ordered by free
/// column.
pub fn derive_invariants<T: Scalar>(expr: &OperatorExpr<T>) -> InvariantBasis {
    let cols = expr.mode_count();
    let mut rows: Vec<Vec<i64>> = expr
        .net_changes()
        .into_iter()
        .filter(|d| d.iter().any(|&x| x != 0))
        .collect();
    rows.sort();
    rows.dedup();
    InvariantBasis {
        vectors: integer_nullspace(&rows, cols),
    }
}

/// Rank of the constraint matrix over the rationals; the basis returned by
/// [`derive_invariants`] always has `mode_count - rank` vectors.
pub fn rational_rank<T: Scalar>(expr: &OperatorExpr<T>) -> usize {
    let cols = expr.mode_count();
    let rows: Vec<Vec<i64>> = expr
        .net_changes()
        .into_iter()
        .filter(|d| d.iter().any(|&x| x != 0))
        .collect();
    eliminate(&rows, cols).len()
}

/// Fraction-free Gaussian elimination; returns the nonzero echelon rows as
/// `(pivot_column, row)` pairs in pivot order.
fn eliminate(rows: &[Vec<i64>], cols: usize) -> Vec<(usize, Vec<i128>)> {
    let mut work: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| i128::from(x)).collect())
        .collect();
    let mut echelon: Vec<(usize, Vec<i128>)> = Vec::new();
    let mut row_start = 0usize;
    for col in 0..cols {
        // Pivot with least magnitude keeps the integers small.
        let pivot_row = (row_start..work.len())
            .filter(|&r| work[r][col] != 0)
            .min_by_key(|&r| work[r][col].unsigned_abs());
        let Some(pivot_row) = pivot_row else { continue };
        work.swap(row_start, pivot_row);
        let pivot = work[row_start][col];
        let (head, tail) = work.split_at_mut(row_start + 1);
        let pivot_row = &head[row_start];
        for row in tail.iter_mut() {
            let lead = row[col];
            if lead == 0 {
                continue;
            }
            let g = gcd(pivot.unsigned_abs(), lead.unsigned_abs()) as i128;
            let pm = pivot / g;
            let lm = lead / g;
            for (cell, p) in row.iter_mut().zip(pivot_row) {
                *cell = *cell * pm - *p * lm;
            }
            reduce_row(row);
        }
        echelon.push((col, work[row_start].clone()));
        row_start += 1;
    }
    echelon
}

/// Null-space basis by unit free variables and exact back-substitution.
fn integer_nullspace(rows: &[Vec<i64>], cols: usize) -> Vec<Vec<i64>> {
    let echelon = eliminate(rows, cols);
    let pivot_cols: Vec<usize> = echelon.iter().map(|&(c, _)| c).collect();
    let free_cols: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();

    let mut basis = Vec::with_capacity(free_cols.len());
    for &free in &free_cols {
        // Entries are numerators over a common (implicit) denominator; only
        // the direction matters, so the denominator is never materialized.
        let mut num = vec![0i128; cols];
        num[free] = 1;
        for &(pivot_col, ref row) in echelon.iter().rev() {
            let pivot = row[pivot_col];
            let mut sum: i128 = 0;
            for c in pivot_col + 1..cols {
                sum += row[c] * num[c];
            }
            // pivot * x[pivot_col] + sum = 0: scale the solved entries by
            // the pivot and set the pivot numerator to -sum.
            for (c, item) in num.iter_mut().enumerate() {
                if c != pivot_col {
                    *item *= pivot;
                }
            }
            num[pivot_col] = -sum;
        }
        reduce_row(&mut num);
        if let Some(first) = num.iter().find(|&&x| x != 0) {
            if *first < 0 {
                for x in &mut num {
                    *x = -*x;
                }
            }
        }
        basis.push(
            num.into_iter()
                .map(|x| i64::try_from(x).expect("primitive entries fit i64"))
                .collect(),
        );
    }
    basis
}

/// Divide out the gcd of all entries.
fn reduce_row(row: &mut [i128]) {
    let mut g: u128 = 0;
    for &x in row.iter() {
        g = gcd(g, x.unsigned_abs());
    }
    if g > 1 {
        for x in row.iter_mut() {
            *x /= g as i128;
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}
