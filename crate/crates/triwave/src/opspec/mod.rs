//! Second-quantized operator polynomials: a small DSL, automatic
//! derivation of linear photon-number invariants, generic sparse
//! Hamiltonian assembly on a hard cutoff, and numerical commutator
//! verification.
//!
//! This module is the independent oracle behind the specialized block
//! machinery: any Hermitian polynomial in bosonic mode operators (the
//! trilinear interaction, its four-wave variant, or arbitrary test
//! expressions) can be assembled on a truncated product basis and checked
//! directly against the block builders and the derived conservation laws.
//!
//! # Grammar
//!
//! ```text
//! expression := group ('+' group)*
//! group      := signed_term ('-' signed_term)* ['+' 'hc']
//! signed_term:= ['-'] [decimal ['*']] factor+
//! factor     := mode letter, optionally followed by one '\'' (dagger)
//! ```
//!
//! Mode names are single letters `a`-`z`; `hc` is reserved and appends the
//! Hermitian conjugates of every term back to the previous group boundary
//! (a `+` not followed by `hc`). Whitespace separates factors; powers are
//! written as repeated factors (`a' a'`), and a repeated apostrophe is
//! rejected. Within one monomial and one mode, a daggered factor may not
//! be written after an undaggered one: reordering it would not be the
//! operator that was written, and this module does no normal-ordering
//! algebra.

mod invariants;
mod parse;
mod sparse;

pub use invariants::{derive_invariants, rational_rank, InvariantBasis};
pub use parse::{parse_operator, parse_operator_with_modes};
pub use sparse::{
    build_sparse, build_sparse_with_limit, commutator_interior_norm,
    commutator_interior_norm_with_limit, SparseSymmetric, DEFAULT_MAX_DIMENSION,
};

use std::cmp::Ordering;
use std::collections::BTreeMap;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum OpspecError {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("expression is not Hermitian: monomial `{monomial}` lacks a conjugate with equal coefficient")]
    NotHermitian { monomial: String },
    #[error("monomial `{monomial}` is not normal-ordered on mode {mode}; write daggered factors first")]
    NotNormalOrdered { monomial: String, mode: char },
    #[error("mode `{mode}` is not in the declared mode list")]
    UnknownMode { mode: char },
    #[error("product basis dimension {dimension} exceeds the limit {limit}")]
    DimensionLimit { dimension: usize, limit: usize },
    #[error("{what}: got {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
}

/// One operator factor: a mode's raising or lowering operator to a power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factor {
    pub mode: usize,
    pub dagger: bool,
    pub power: u32,
}

impl Factor {
    /// Canonical ordering key: mode ascending, daggered before undaggered.
    fn sort_key(&self) -> (usize, bool) {
        (self.mode, !self.dagger)
    }
}

/// Coefficient times a normal-ordered product of factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<T: Scalar> {
    pub coefficient: T,
    pub factors: Vec<Factor>,
}

impl<T: Scalar> Monomial<T> {
    /// Net photon change per mode: daggered minus undaggered powers.
    pub fn net_change(&self, mode_count: usize) -> Vec<i64> {
        let mut delta = vec![0i64; mode_count];
        for f in &self.factors {
            let signed = i64::from(f.power);
            if f.dagger {
                delta[f.mode] += signed;
            } else {
                delta[f.mode] -= signed;
            }
        }
        delta
    }

    /// True when no factor changes any occupation (pure number-operator
    /// products and constants).
    pub fn is_diagonal(&self, mode_count: usize) -> bool {
        self.net_change(mode_count).iter().all(|&d| d == 0)
    }

    /// Signature of the Hermitian conjugate: flip every dagger, then
    /// restore canonical order.
    fn conjugate_factors(&self) -> Vec<Factor> {
        let mut factors: Vec<Factor> = self
            .factors
            .iter()
            .map(|f| Factor {
                mode: f.mode,
                dagger: !f.dagger,
                power: f.power,
            })
            .collect();
        factors.sort_by_key(Factor::sort_key);
        factors
    }
}

fn cmp_factor_lists(a: &[Factor], b: &[Factor]) -> Ordering {
    let key = |f: &Factor| (f.mode, !f.dagger, f.power);
    a.iter()
        .map(key)
        .cmp(b.iter().map(key))
}

/// Canonical Hermitian operator polynomial over named bosonic modes.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorExpr<T: Scalar> {
    modes: Vec<char>,
    monomials: Vec<Monomial<T>>,
}

impl<T: Scalar> OperatorExpr<T> {
    /// Canonicalize raw terms: validate written normal order, sort and
    /// merge factors, merge like monomials, drop zeros, and verify
    /// Hermiticity.
    ///
    /// Each raw term is the written factor sequence `(mode, dagger)`.
    pub fn from_terms(
        modes: Vec<char>,
        terms: Vec<(T, Vec<(usize, bool)>)>,
    ) -> Result<Self, OpspecError> {
        let mut merged: BTreeMap<Vec<Factor>, T> = BTreeMap::new();
        for (coefficient, written) in terms {
            let factors = canonical_factors(&modes, &written)?;
            *merged.entry(factors).or_insert_with(T::zero) += coefficient;
        }
        merged.retain(|_, c| *c != T::zero());

        let mut monomials: Vec<Monomial<T>> = merged
            .into_iter()
            .map(|(factors, coefficient)| Monomial {
                coefficient,
                factors,
            })
            .collect();
        monomials.sort_by(|a, b| cmp_factor_lists(&a.factors, &b.factors));

        let expr = Self { modes, monomials };
        expr.check_hermitian()?;
        Ok(expr)
    }

    fn check_hermitian(&self) -> Result<(), OpspecError> {
        for m in &self.monomials {
            let conj = m.conjugate_factors();
            let partner = self
                .monomials
                .iter()
                .find(|other| other.factors == conj)
                .map(|other| other.coefficient);
            if partner != Some(m.coefficient) {
                return Err(OpspecError::NotHermitian {
                    monomial: self.format_monomial(m),
                });
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> &[char] {
        &self.modes
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn monomials(&self) -> &[Monomial<T>] {
        &self.monomials
    }

    /// Net photon change vectors, one per monomial.
    pub fn net_changes(&self) -> Vec<Vec<i64>> {
        self.monomials
            .iter()
            .map(|m| m.net_change(self.modes.len()))
            .collect()
    }

    /// Energy defect `sum_i delta_i omega_i` of each monomial for the given
    /// mode frequencies; zero for diagonal terms and for resonant
    /// interactions.
    pub fn resonance_defect(&self, omegas: &[T]) -> Result<Vec<T>, OpspecError> {
        if omegas.len() != self.modes.len() {
            return Err(OpspecError::LengthMismatch {
                what: "frequency list",
                got: omegas.len(),
                expected: self.modes.len(),
            });
        }
        Ok(self
            .net_changes()
            .iter()
            .map(|delta| {
                delta
                    .iter()
                    .zip(omegas)
                    .fold(T::zero(), |acc, (&d, &w)| {
                        acc + T::from_i64(d).expect("small integer") * w
                    })
            })
            .collect())
    }

    fn format_monomial(&self, m: &Monomial<T>) -> String {
        let mut parts = Vec::new();
        if m.coefficient != T::one() {
            parts.push(format!("{}", m.coefficient));
        }
        for f in &m.factors {
            let name = self.modes[f.mode];
            let tick = if f.dagger { "'" } else { "" };
            for _ in 0..f.power {
                parts.push(format!("{name}{tick}"));
            }
        }
        if parts.is_empty() {
            parts.push("1".to_string());
        }
        parts.join(" ")
    }
}

impl<T: Scalar> std::fmt::Display for OperatorExpr<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.monomials.is_empty() {
            return write!(f, "0");
        }
        for (i, m) in self.monomials.iter().enumerate() {
            let negative = m.coefficient < T::zero();
            let magnitude = Monomial {
                coefficient: m.coefficient.abs(),
                factors: m.factors.clone(),
            };
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            write!(f, "{}", self.format_monomial(&magnitude))?;
        }
        Ok(())
    }
}

/// Validate the written factor sequence and bring it to canonical form.
fn canonical_factors(
    modes: &[char],
    written: &[(usize, bool)],
) -> Result<Vec<Factor>, OpspecError> {
    // A daggered factor written after an undaggered factor of the same
    // mode cannot be reordered without commutator terms.
    for (i, &(mode, dagger)) in written.iter().enumerate() {
        if dagger
            && written[..i]
                .iter()
                .any(|&(m, d)| m == mode && !d)
        {
            let text: Vec<String> = written
                .iter()
                .map(|&(m, d)| format!("{}{}", modes[m], if d { "'" } else { "" }))
                .collect();
            return Err(OpspecError::NotNormalOrdered {
                monomial: text.join(" "),
                mode: modes[mode],
            });
        }
    }
    let mut factors: Vec<Factor> = Vec::new();
    let mut sorted = written.to_vec();
    sorted.sort_by_key(|&(mode, dagger)| (mode, !dagger));
    for (mode, dagger) in sorted {
        match factors.last_mut() {
            Some(last) if last.mode == mode && last.dagger == dagger => last.power += 1,
            _ => factors.push(Factor {
                mode,
                dagger,
                power: 1,
            }),
        }
    }
    Ok(factors)
}
