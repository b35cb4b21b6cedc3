//! Fock-basis bookkeeping: enumeration of conserved-quantity blocks,
//! coherent-state amplitudes, and truncation control.
//!
//! The trilinear model conserves `M1 = n_a + n_b` and `M2 = n_a + n_c`;
//! the microscopic three-level model conserves the analogous labels
//! `Q1 = n_a + n_b + P1 + P2` and `Q2 = n_a + n_c + P2`, where `P_i`
//! projects onto atomic level `i`. Fixing a pair of labels selects a
//! finite block of the product Fock space, which is what makes exact
//! diagonalization possible without any global cutoff.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;
use thiserror::Error;

use crate::scalar::{from_u32, Scalar};

/// Number of atomic levels in the microscopic model.
pub const ATOM_LEVELS: u8 = 3;

#[derive(Debug, Error, PartialEq)]
pub enum FockError {
    #[error("tail_epsilon must lie strictly in (0, 1), got {0}")]
    InvalidTailEpsilon(f64),
    #[error("coherent spec has {got} amplitudes, model has {expected} modes")]
    ModeCountMismatch { got: usize, expected: usize },
}

/// Which Hamiltonian family a basis or state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Trilinear,
    Microscopic,
}

impl ModelKind {
    /// Photon modes (a, b, c) in either model.
    pub fn mode_count(self) -> usize {
        3
    }
}

/// Occupation-number product state: photon count per mode, plus the atomic
/// level index for microscopic-model states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockOccupation {
    occupations: Vec<u32>,
    atom_level: Option<u8>,
}

impl FockOccupation {
    /// Pure photon state (trilinear model).
    pub fn photons(occupations: Vec<u32>) -> Self {
        Self {
            occupations,
            atom_level: None,
        }
    }

    /// Photon state dressed with an atomic level (microscopic model).
    pub fn with_atom(atom_level: u8, occupations: Vec<u32>) -> Self {
        assert!(atom_level < ATOM_LEVELS, "atom level out of range");
        Self {
            occupations,
            atom_level: Some(atom_level),
        }
    }

    pub fn occupation(&self, mode: usize) -> u32 {
        self.occupations[mode]
    }

    pub fn occupations(&self) -> &[u32] {
        &self.occupations
    }

    pub fn atom_level(&self) -> Option<u8> {
        self.atom_level
    }

    /// True when the state carries an atomic level, i.e. belongs to the
    /// microscopic model.
    pub fn is_microscopic(&self) -> bool {
        self.atom_level.is_some()
    }
}

/// Conserved-quantity labels `(M1, M2)` (trilinear) or `(Q1, Q2)`
/// (microscopic) identifying a non-interacting block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex {
    pub m1: u32,
    pub m2: u32,
}

impl BlockIndex {
    pub fn new(m1: u32, m2: u32) -> Self {
        Self { m1, m2 }
    }
}

impl std::fmt::Display for BlockIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.m1, self.m2)
    }
}

/// Evaluate the conserved labels on a single basis state.
pub fn conserved_labels(kind: ModelKind, state: &FockOccupation) -> BlockIndex {
    let n_a = state.occupation(0);
    let n_b = state.occupation(1);
    let n_c = state.occupation(2);
    match kind {
        ModelKind::Trilinear => BlockIndex::new(n_a + n_b, n_a + n_c),
        ModelKind::Microscopic => {
            let level = state.atom_level().expect("microscopic state has atom level");
            let p1_or_p2 = u32::from(level >= 1);
            let p2 = u32::from(level == 2);
            BlockIndex::new(n_a + n_b + p1_or_p2, n_a + n_c + p2)
        }
    }
}

/// Ordered finite basis of one conserved-quantity block.
#[derive(Debug, Clone)]
pub struct BlockBasis {
    index: BlockIndex,
    model_kind: ModelKind,
    states: Vec<FockOccupation>,
}

impl BlockBasis {
    pub fn index(&self) -> BlockIndex {
        self.index
    }

    pub fn model_kind(&self) -> ModelKind {
        self.model_kind
    }

    pub fn states(&self) -> &[FockOccupation] {
        &self.states
    }

    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    /// Position of a state in the enumeration order, computed from the
    /// deterministic layout rather than by search.
    pub fn position(&self, state: &FockOccupation) -> Option<usize> {
        let pos = match self.model_kind {
            ModelKind::Trilinear => state.occupation(0) as usize,
            ModelKind::Microscopic => {
                let level = state.atom_level()?;
                let k = state.occupation(0) as usize;
                let mut offset = 0usize;
                for i in 0..level {
                    offset += microscopic_level_count(self.index, i);
                }
                if k >= microscopic_level_count(self.index, level) {
                    return None;
                }
                offset + k
            }
        };
        if self.states.get(pos) == Some(state) {
            Some(pos)
        } else {
            None
        }
    }
}

/// Number of `n_a = k` values available to atomic level `i` inside block
/// `(q1, q2)`.
fn microscopic_level_count(index: BlockIndex, level: u8) -> usize {
    let q1 = i64::from(index.m1);
    let q2 = i64::from(index.m2);
    let max_k = match level {
        0 => q1.min(q2),
        1 => (q1 - 1).min(q2),
        2 => (q1 - 1).min(q2 - 1),
        _ => unreachable!("atom level out of range"),
    };
    if max_k < 0 {
        0
    } else {
        max_k as usize + 1
    }
}

/// Basis of the trilinear block `(m1, m2)`: states `(k, m1-k, m2-k)` for
/// `k = 0..=min(m1, m2)`, ordered by increasing `k = n_a`.
pub fn block_basis_trilinear(m1: u32, m2: u32) -> BlockBasis {
    let kmax = m1.min(m2);
    let states = (0..=kmax)
        .map(|k| FockOccupation::photons(vec![k, m1 - k, m2 - k]))
        .collect();
    BlockBasis {
        index: BlockIndex::new(m1, m2),
        model_kind: ModelKind::Trilinear,
        states,
    }
}

/// Basis of the microscopic block `(q1, q2)`, atomic level major and
/// `k = n_a` minor. Level ranges with a negative upper limit are empty.
pub fn block_basis_microscopic(q1: u32, q2: u32) -> BlockBasis {
    let index = BlockIndex::new(q1, q2);
    let mut states = Vec::new();
    for level in 0..ATOM_LEVELS {
        let count = microscopic_level_count(index, level) as u32;
        for k in 0..count {
            let (n_b, n_c) = match level {
                0 => (q1 - k, q2 - k),
                1 => (q1 - 1 - k, q2 - k),
                2 => (q1 - 1 - k, q2 - 1 - k),
                _ => unreachable!(),
            };
            states.push(FockOccupation::with_atom(level, vec![k, n_b, n_c]));
        }
    }
    BlockBasis {
        index,
        model_kind: ModelKind::Microscopic,
        states,
    }
}

/// Basis of a block given the model kind.
pub fn block_basis(kind: ModelKind, index: BlockIndex) -> BlockBasis {
    match kind {
        ModelKind::Trilinear => block_basis_trilinear(index.m1, index.m2),
        ModelKind::Microscopic => block_basis_microscopic(index.m1, index.m2),
    }
}

/// Natural log of `n!`, by direct summation (exact to f64 rounding for the
/// occupation numbers used here).
pub(crate) fn ln_factorial<T: Scalar>(n: u32) -> T {
    let mut acc = T::zero();
    for k in 2..=n.max(1) {
        acc += from_u32::<T>(k).ln();
    }
    acc
}

/// `n!` as a scalar; exact for `n <= 20`.
fn factorial<T: Scalar>(n: u32) -> T {
    let mut acc = 1u64;
    for k in 2..=u64::from(n.max(1)) {
        acc *= k;
    }
    T::from_u64(acc).expect("factorial fits scalar")
}

/// Coherent-state overlap `<n|alpha> = exp(-|alpha|^2/2) alpha^n / sqrt(n!)`.
///
/// For `n > 20` the magnitude is assembled in log space so that large
/// amplitudes and occupations do not overflow the factorial.
pub fn coherent_amplitude<T: Scalar>(alpha: Complex<T>, n: u32) -> Complex<T> {
    let half = T::from_f64(0.5).unwrap();
    let norm_sq = alpha.norm_sqr();
    if n == 0 {
        return Complex::new((-norm_sq * half).exp(), T::zero());
    }
    if alpha == Complex::zero() {
        return Complex::zero();
    }
    if n <= 20 {
        let scale = (-norm_sq * half).exp() / factorial::<T>(n).sqrt();
        alpha.powu(n) * scale
    } else {
        let r = norm_sq.sqrt();
        let log_mag = -norm_sq * half + from_u32::<T>(n) * r.ln() - half * ln_factorial::<T>(n);
        Complex::from_polar(log_mag.exp(), from_u32::<T>(n) * alpha.arg())
    }
}

/// Mode amplitudes of a product coherent state.
#[derive(Debug, Clone)]
pub struct CoherentSpec<T: Scalar> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Scalar> CoherentSpec<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Self {
        Self { amplitudes }
    }

    /// Three-mode spec `|alpha>_a |beta>_b |gamma>_c`.
    pub fn three_mode(alpha: Complex<T>, beta: Complex<T>, gamma: Complex<T>) -> Self {
        Self {
            amplitudes: vec![alpha, beta, gamma],
        }
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn amplitude(&self, mode: usize) -> Complex<T> {
        self.amplitudes[mode]
    }

    fn check_modes(&self, kind: ModelKind) -> Result<(), FockError> {
        if self.amplitudes.len() != kind.mode_count() {
            return Err(FockError::ModeCountMismatch {
                got: self.amplitudes.len(),
                expected: kind.mode_count(),
            });
        }
        Ok(())
    }
}

/// Poisson probabilities `p(n) = exp(-mean) mean^n / n!` for `n = 0..=max_n`.
pub(crate) fn poisson_pmf_table<T: Scalar>(mean: T, max_n: u32) -> Vec<T> {
    let mut table = Vec::with_capacity(max_n as usize + 1);
    let mut term = (-mean).exp();
    table.push(term);
    for n in 1..=max_n {
        term = term * mean / from_u32::<T>(n);
        table.push(term);
    }
    table
}

/// Upper tail `P(X > n)` of a Poisson distribution with the given mean.
pub fn poisson_upper_tail<T: Scalar>(mean: T, n: u32) -> T {
    let cdf: T = poisson_pmf_table(mean, n).into_iter().fold(T::zero(), |a, p| a + p);
    (T::one() - cdf).max(T::zero())
}

/// Smallest `m` with `P(X > m) <= eps`.
fn poisson_cutoff<T: Scalar>(mean: T, eps: T) -> u32 {
    let mut term = (-mean).exp();
    let mut cdf = term;
    let mut m = 0u32;
    while T::one() - cdf > eps {
        m += 1;
        term = term * mean / from_u32::<T>(m);
        cdf += term;
        // Mean <= a few hundred in practice; this is a hard safety stop.
        assert!(m < 100_000, "Poisson cutoff failed to converge");
    }
    m
}

/// Project a product coherent state onto conserved-quantity blocks.
///
/// Keeps the smallest rectangle `m1 <= M1, m2 <= M2` of blocks such that
/// the neglected probability is at most `tail_epsilon`: the block labels
/// `n_a + n_b` and `n_a + n_c` are Poisson with the summed means, and each
/// axis cutoff caps that label's upper tail at half the budget. The
/// reported `tail_bound` is the mass actually left outside the rectangle,
/// computed from the per-mode Poisson cumulative tails by conditioning on
/// `n_a`. The microscopic model starts the atom in level 0, so the block
/// labels and weights coincide with the trilinear case.
pub fn coherent_block_weights<T: Scalar>(
    spec: &CoherentSpec<T>,
    kind: ModelKind,
    tail_epsilon: T,
) -> Result<(BTreeMap<BlockIndex, T>, T), FockError> {
    spec.check_modes(kind)?;
    if !(tail_epsilon > T::zero() && tail_epsilon < T::one()) {
        return Err(FockError::InvalidTailEpsilon(crate::scalar::to_f64(
            tail_epsilon,
        )));
    }

    let mean_a = spec.amplitude(0).norm_sqr();
    let mean_b = spec.amplitude(1).norm_sqr();
    let mean_c = spec.amplitude(2).norm_sqr();
    let half_eps = tail_epsilon / (T::one() + T::one());

    let m1_max = poisson_cutoff(mean_a + mean_b, half_eps);
    let m2_max = poisson_cutoff(mean_a + mean_c, half_eps);

    let pa = poisson_pmf_table(mean_a, m1_max.min(m2_max));
    let pb = poisson_pmf_table(mean_b, m1_max);
    let pc = poisson_pmf_table(mean_c, m2_max);
    let cdf_b = running_sums(&pb);
    let cdf_c = running_sums(&pc);

    // P(n_a + n_b <= M1 and n_a + n_c <= M2), conditioned on n_a.
    let mut retained = T::zero();
    for (k, &p) in pa.iter().enumerate() {
        retained += p * cdf_b[m1_max as usize - k] * cdf_c[m2_max as usize - k];
    }
    let tail_bound = (T::one() - retained).max(T::zero());

    let mut weights = BTreeMap::new();
    for m1 in 0..=m1_max {
        for m2 in 0..=m2_max {
            let kmax = m1.min(m2);
            let mut w = T::zero();
            for k in 0..=kmax {
                w += pa[k as usize] * pb[(m1 - k) as usize] * pc[(m2 - k) as usize];
            }
            weights.insert(BlockIndex::new(m1, m2), w);
        }
    }
    Ok((weights, tail_bound))
}

fn running_sums<T: Scalar>(pmf: &[T]) -> Vec<T> {
    let mut acc = T::zero();
    pmf.iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn trilinear_block_examples() {
        let b = block_basis_trilinear(0, 0);
        assert_eq!(b.states(), &[FockOccupation::photons(vec![0, 0, 0])]);

        let b = block_basis_trilinear(1, 1);
        assert_eq!(
            b.states(),
            &[
                FockOccupation::photons(vec![0, 1, 1]),
                FockOccupation::photons(vec![1, 0, 0]),
            ]
        );

        let b = block_basis_trilinear(2, 5);
        assert_eq!(
            b.states(),
            &[
                FockOccupation::photons(vec![0, 2, 5]),
                FockOccupation::photons(vec![1, 1, 4]),
                FockOccupation::photons(vec![2, 0, 3]),
            ]
        );
        assert_eq!(b.dimension(), 3);
    }

    #[test]
    fn microscopic_block_examples() {
        let b = block_basis_microscopic(0, 0);
        assert_eq!(b.states(), &[FockOccupation::with_atom(0, vec![0, 0, 0])]);

        let b = block_basis_microscopic(1, 1);
        assert_eq!(
            b.states(),
            &[
                FockOccupation::with_atom(0, vec![0, 1, 1]),
                FockOccupation::with_atom(0, vec![1, 0, 0]),
                FockOccupation::with_atom(1, vec![0, 0, 1]),
                FockOccupation::with_atom(2, vec![0, 0, 0]),
            ]
        );
        assert_eq!(b.dimension(), 4);

        let b = block_basis_microscopic(1, 0);
        assert_eq!(
            b.states(),
            &[
                FockOccupation::with_atom(0, vec![0, 1, 0]),
                FockOccupation::with_atom(1, vec![0, 0, 0]),
            ]
        );
    }

    #[test]
    fn labels_match_block_index_exhaustively() {
        for m1 in 0..=50u32 {
            for m2 in 0..=50u32 {
                let b = block_basis_trilinear(m1, m2);
                assert_eq!(b.dimension() as u32, m1.min(m2) + 1);
                for s in b.states() {
                    assert_eq!(conserved_labels(ModelKind::Trilinear, s), b.index());
                }
            }
        }
        for q1 in 0..=12u32 {
            for q2 in 0..=12u32 {
                let b = block_basis_microscopic(q1, q2);
                assert!(b.dimension() as u32 <= 3 * q1.min(q2) + 2);
                for s in b.states() {
                    assert_eq!(conserved_labels(ModelKind::Microscopic, s), b.index());
                }
            }
        }
    }

    #[test]
    fn positions_agree_with_enumeration() {
        let b = block_basis_microscopic(4, 6);
        for (i, s) in b.states().iter().enumerate() {
            assert_eq!(b.position(s), Some(i));
        }
        // A state from a different block is not found.
        assert_eq!(b.position(&FockOccupation::with_atom(0, vec![0, 0, 0])), None);
    }

    #[test]
    fn coherent_amplitude_examples() {
        assert_eq!(coherent_amplitude(c(0.0, 0.0), 0), c(1.0, 0.0));
        assert_eq!(coherent_amplitude(c(0.0, 0.0), 3), c(0.0, 0.0));
        let a = coherent_amplitude(c(1.0, 0.0), 2);
        let expected = (-0.5f64).exp() / 2f64.sqrt();
        assert!((a.re - expected).abs() < 1e-15);
        assert!(a.im.abs() < 1e-15);
        assert!((expected - 0.42888).abs() < 5e-6);
    }

    #[test]
    fn coherent_amplitude_log_branch_is_continuous() {
        // n = 20 uses the direct product, n = 21 the log-space path; both
        // must satisfy the recurrence amp(n+1) = amp(n) * alpha / sqrt(n+1).
        let alpha = c(2.5, -1.5);
        let a20 = coherent_amplitude(alpha, 20);
        let a21 = coherent_amplitude(alpha, 21);
        let predicted = a20 * alpha / 21f64.sqrt();
        assert!((a21 - predicted).norm() < 1e-12 * a21.norm().max(1e-300));
    }

    #[test]
    fn amplitude_norms_match_poisson_tail() {
        for &r in &[0.5f64, 1.0, 2.0, 4.0] {
            let alpha = c(r, 0.0);
            let mean = r * r;
            for n_max in [10u32, 40, 80] {
                let sum: f64 = (0..=n_max)
                    .map(|n| coherent_amplitude(alpha, n).norm_sqr())
                    .sum();
                let deficit = 1.0 - sum;
                let tail = poisson_upper_tail(mean, n_max);
                assert!(
                    (deficit - tail).abs() < 1e-12,
                    "r={r} n_max={n_max}: deficit {deficit} vs tail {tail}"
                );
            }
        }
    }

    #[test]
    fn weights_vacuum() {
        let spec = CoherentSpec::three_mode(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let (w, tail) = coherent_block_weights(&spec, ModelKind::Trilinear, 1e-8).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[&BlockIndex::new(0, 0)], 1.0);
        assert_eq!(tail, 0.0);
    }

    #[test]
    fn weights_single_mode_collapse_to_poisson() {
        let spec = CoherentSpec::three_mode(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let (w, _) = coherent_block_weights(&spec, ModelKind::Trilinear, 1e-10).unwrap();
        for (idx, weight) in &w {
            if idx.m1 == idx.m2 {
                let n = idx.m1;
                let mut expected = (-1.0f64).exp();
                for k in 2..=n {
                    expected /= k as f64;
                }
                assert!((weight - expected).abs() < 1e-15, "block {idx}");
            } else {
                assert_eq!(*weight, 0.0, "off-diagonal block {idx}");
            }
        }
    }

    #[test]
    fn weights_account_for_all_mass() {
        let spec = CoherentSpec::three_mode(c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0));
        let (w, tail) = coherent_block_weights(&spec, ModelKind::Trilinear, 1e-8).unwrap();
        assert!(w.len() <= 400, "rectangle unexpectedly large: {}", w.len());
        let total: f64 = w.values().sum();
        assert!(total >= 1.0 - 1e-8);
        assert!(total + tail >= 1.0 - 1e-12);
        assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn weights_reject_bad_epsilon() {
        let spec = CoherentSpec::three_mode(c(0.1, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(
            coherent_block_weights(&spec, ModelKind::Trilinear, 0.0),
            Err(FockError::InvalidTailEpsilon(_))
        ));
        assert!(matches!(
            coherent_block_weights(&spec, ModelKind::Trilinear, 1.0),
            Err(FockError::InvalidTailEpsilon(_))
        ));
    }
}
