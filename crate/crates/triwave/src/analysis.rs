//! Closed-form coherent-state energy functionals and exact ground-energy
//! scans.
//!
//! The trilinear coherent energy `(w_a+w_b+w_c) r^2 - 2 |kappa| r^3` at the
//! worst phase tends to minus infinity, so block ground energies eventually
//! cross zero as the conserved labels grow; the microscopic model's
//! coherent energy is bounded below, and its block ground energies keep
//! rising. The scans here exhibit both behaviours exactly.

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::eigen::{self, EigenError};
use crate::fock::{block_basis_microscopic, block_basis_trilinear, BlockIndex};
use crate::models::{
    build_microscopic_block, build_trilinear_block, effective_from_microscopic,
    MicroscopicParams, TrilinearParams,
};
use crate::scalar::{from_f64, from_u32, to_f64, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("atom amplitudes must be normalized: |c|^2 deviates by {defect}")]
    NotNormalized { defect: f64 },
}

/// Normalized amplitudes of a general atomic superposition state.
#[derive(Debug, Clone, Copy)]
pub struct AtomAmplitudes<T: Scalar> {
    pub c0: Complex<T>,
    pub c1: Complex<T>,
    pub c2: Complex<T>,
}

impl<T: Scalar> AtomAmplitudes<T> {
    pub fn new(c0: Complex<T>, c1: Complex<T>, c2: Complex<T>) -> Result<Self, AnalysisError> {
        let norm_sq = c0.norm_sqr() + c1.norm_sqr() + c2.norm_sqr();
        let defect = (norm_sq - T::one()).abs();
        let tolerance = from_f64::<T>(1e-12).max(T::epsilon() * from_f64(8.0));
        if defect > tolerance {
            return Err(AnalysisError::NotNormalized {
                defect: to_f64(defect),
            });
        }
        Ok(Self { c0, c1, c2 })
    }

    /// Atom resting in its ground level.
    pub fn ground() -> Self {
        Self {
            c0: Complex::one(),
            c1: Complex::zero(),
            c2: Complex::zero(),
        }
    }
}

/// Trilinear coherent-state energy
/// `w_a|alpha|^2 + w_b|beta|^2 + w_c|gamma|^2 + 2 kappa Re(alpha* beta gamma)`.
pub fn coherent_energy_trilinear<T: Scalar>(
    params: &TrilinearParams<T>,
    alpha: Complex<T>,
    beta: Complex<T>,
    gamma: Complex<T>,
) -> T {
    let two = T::one() + T::one();
    params.omega_a() * alpha.norm_sqr()
        + params.omega_b() * beta.norm_sqr()
        + params.omega_c() * gamma.norm_sqr()
        + two * params.kappa() * (alpha.conj() * beta * gamma).re
}

/// Phase-minimized trilinear coherent energy at equal moduli `r`:
/// `(w_a + w_b + w_c) r^2 - 2 |kappa| r^3`.
pub fn worst_phase_energy<T: Scalar>(params: &TrilinearParams<T>, r: T) -> T {
    let two = T::one() + T::one();
    (params.omega_a() + params.omega_b() + params.omega_c()) * r * r
        - two * params.kappa() * r * r * r
}

/// Microscopic coherent-state energy for mode amplitudes and a general
/// atomic state, with each coupling paired with its own mode amplitude as
/// the interaction structure dictates.
pub fn coherent_energy_microscopic<T: Scalar>(
    params: &MicroscopicParams<T>,
    alpha: Complex<T>,
    beta: Complex<T>,
    gamma: Complex<T>,
    atom: &AtomAmplitudes<T>,
) -> T {
    let two = T::one() + T::one();
    let field = params.omega_a() * alpha.norm_sqr()
        + params.omega_b() * beta.norm_sqr()
        + params.omega_c() * gamma.norm_sqr();
    let level = params.level_energy(0) * atom.c0.norm_sqr()
        + params.level_energy(1) * atom.c1.norm_sqr()
        + params.level_energy(2) * atom.c2.norm_sqr();
    let coupling = params.g_a() * (alpha * atom.c0 * atom.c2.conj()).re
        + params.g_c() * (gamma * atom.c1 * atom.c2.conj()).re
        + params.g_b() * (beta * atom.c0 * atom.c1.conj()).re;
    field + level + two * coupling
}

/// Term-by-term lower bound on the microscopic coherent energy at equal
/// moduli `r`: `(min w) r^2 - (|g_a|+|g_b|+|g_c|) r - max|E_i|`.
pub fn microscopic_coherent_lower_bound<T: Scalar>(params: &MicroscopicParams<T>, r: T) -> T {
    let min_omega = params.omega_a().min(params.omega_b()).min(params.omega_c());
    let g_sum = params.g_a().abs() + params.g_b().abs() + params.g_c().abs();
    let e_max = params
        .level_energy(0)
        .abs()
        .max(params.level_energy(1).abs())
        .max(params.level_energy(2).abs());
    min_omega * r * r - g_sum * r - e_max
}

/// Radius beyond which [`microscopic_coherent_lower_bound`] is positive,
/// certifying that the coherent energy grows without bound.
pub fn microscopic_positivity_radius<T: Scalar>(params: &MicroscopicParams<T>) -> T {
    let min_omega = params.omega_a().min(params.omega_b()).min(params.omega_c());
    let g_sum = params.g_a().abs() + params.g_b().abs() + params.g_c().abs();
    let e_max = params
        .level_energy(0)
        .abs()
        .max(params.level_energy(1).abs())
        .max(params.level_energy(2).abs());
    let four = from_f64::<T>(4.0);
    let two = T::one() + T::one();
    (g_sum + (g_sum * g_sum + four * min_omega * e_max).sqrt()) / (two * min_omega)
}

/// Phase-matched estimate of the lowest block energy when all three modes
/// hold roughly `n` photons: `2 n w_a - 2 |kappa| n^{3/2}`, which changes
/// sign at `sqrt(n) = w_a / |kappa|`.
pub fn ground_energy_estimate<T: Scalar>(params: &TrilinearParams<T>, n: u32) -> T {
    let two = T::one() + T::one();
    let nf = from_u32::<T>(n);
    two * params.omega_a() * nf - two * params.kappa() * nf * nf.sqrt()
}

/// The `n` at which [`ground_energy_estimate`] reaches zero, or `None` for
/// a vanishing coupling.
pub fn estimated_crossing<T: Scalar>(params: &TrilinearParams<T>) -> Option<T> {
    if params.kappa() > T::zero() {
        let ratio = params.omega_a() / params.kappa();
        Some(ratio * ratio)
    } else {
        None
    }
}

/// One scanned block.
#[derive(Debug, Clone, Copy)]
pub struct ScanEntry<T: Scalar> {
    pub n: u32,
    pub block: BlockIndex,
    pub ground_energy: T,
    /// Phase-matched closed-form estimate (reduced parameters are used for
    /// the microscopic scan when the reduction is defined).
    pub estimate: Option<T>,
    /// Analytic lower bound (microscopic scan only).
    pub lower_bound: Option<T>,
}

/// Result of a ground-energy scan over diagonal blocks.
#[derive(Debug, Clone)]
pub struct GroundScanResult<T: Scalar> {
    pub entries: Vec<ScanEntry<T>>,
    /// First scanned `n` whose ground energy is negative.
    pub crossing: Option<u32>,
    /// Closed-form prediction of the crossing.
    pub estimated_crossing: Option<T>,
}

/// Lowest eigenvalue of the trilinear block `(2n, 2n)` for `n = 1..=n_max`;
/// on this block `n_a ~ n` implies all modes hold roughly `n` photons.
pub fn ground_scan_trilinear<T: Scalar>(
    params: &TrilinearParams<T>,
    n_max: u32,
) -> Result<GroundScanResult<T>, EigenError> {
    assert!(n_max >= 1, "n_max must be at least 1");
    let tol = eigen::default_tol::<T>();
    let entries: Vec<ScanEntry<T>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let basis = block_basis_trilinear(2 * n, 2 * n);
            let matrix = build_trilinear_block(params, &basis);
            let eigenvalues = eigen::tridiagonal_eigenvalues(&matrix, tol)?;
            Ok(ScanEntry {
                n,
                block: basis.index(),
                ground_energy: eigenvalues[0],
                estimate: Some(ground_energy_estimate(params, n)),
                lower_bound: None,
            })
        })
        .collect::<Result<_, EigenError>>()?;
    let crossing = entries
        .iter()
        .find(|e| e.ground_energy < T::zero())
        .map(|e| e.n);
    Ok(GroundScanResult {
        entries,
        crossing,
        estimated_crossing: estimated_crossing(params),
    })
}

/// Lowest eigenvalue of the microscopic block `(q, q)` for `q = 1..=q_max`,
/// each entry paired with the Gershgorin-type bound
/// `min diag - (|g_a|+|g_b|+|g_c|) sqrt(q+1)`.
pub fn ground_scan_microscopic<T: Scalar>(
    params: &MicroscopicParams<T>,
    q_max: u32,
) -> Result<GroundScanResult<T>, EigenError> {
    assert!(q_max >= 1, "q_max must be at least 1");
    let tol = eigen::default_tol::<T>();
    let reduced = effective_from_microscopic(params).ok();
    let g_sum = params.g_a().abs() + params.g_b().abs() + params.g_c().abs();
    let entries: Vec<ScanEntry<T>> = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let basis = block_basis_microscopic(q, q);
            let matrix = build_microscopic_block(params, &basis);
            let eigenvalues = eigen::symmetric_eigenvalues(&matrix, tol)?;
            let mut min_diag = matrix.get(0, 0);
            for i in 1..matrix.dimension() {
                min_diag = min_diag.min(matrix.get(i, i));
            }
            let lower_bound = min_diag - g_sum * from_u32::<T>(q + 1).sqrt();
            Ok(ScanEntry {
                n: q,
                block: basis.index(),
                ground_energy: eigenvalues[0],
                estimate: reduced
                    .as_ref()
                    .map(|(r, _, _)| ground_energy_estimate(r, q)),
                lower_bound: Some(lower_bound),
            })
        })
        .collect::<Result<_, EigenError>>()?;
    let crossing = entries
        .iter()
        .find(|e| e.ground_energy < T::zero())
        .map(|e| e.n);
    Ok(GroundScanResult {
        entries,
        crossing,
        estimated_crossing: reduced.as_ref().and_then(|(r, _, _)| estimated_crossing(r)),
    })
}
