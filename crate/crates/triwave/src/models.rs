//! Exact block Hamiltonians for the trilinear three-wave model and for the
//! microscopic three-level model, plus the perturbative reduction that
//! connects them.

use num_complex::Complex;
use num_traits::Zero;
use thiserror::Error;

use crate::fock::{BlockBasis, FockOccupation, ModelKind};
use crate::scalar::{from_u32, to_f64, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("mode frequency {name} must be positive, got {value}")]
    NonPositiveFrequency { name: &'static str, value: f64 },
    #[error("detuning {name} is zero; perturbative elimination is invalid on resonance")]
    ZeroDetuning { name: &'static str },
}

/// Parameters of the trilinear Hamiltonian
/// `H = w_a n_a + w_b n_b + w_c n_c + kappa (a'bc + b'c'a)`.
///
/// A complex coupling is canonicalized to `|kappa|` by absorbing its phase
/// into mode a, which keeps every block matrix real symmetric with
/// non-negative off-diagonals; the absorbed phase is retained for
/// reference.
#[derive(Debug, Clone, Copy)]
pub struct TrilinearParams<T: Scalar> {
    omega_a: T,
    omega_b: T,
    omega_c: T,
    kappa: T,
    absorbed_phase: T,
}

impl<T: Scalar> TrilinearParams<T> {
    pub fn new(
        omega_a: T,
        omega_b: T,
        omega_c: T,
        kappa: Complex<T>,
    ) -> Result<Self, ModelError> {
        check_frequency("omega_a", omega_a)?;
        check_frequency("omega_b", omega_b)?;
        check_frequency("omega_c", omega_c)?;
        let (magnitude, phase) = if kappa == Complex::zero() {
            (T::zero(), T::zero())
        } else {
            (kappa.norm(), kappa.arg())
        };
        Ok(Self {
            omega_a,
            omega_b,
            omega_c,
            kappa: magnitude,
            absorbed_phase: phase,
        })
    }

    /// Real coupling convenience; a negative value is canonicalized to its
    /// magnitude with absorbed phase pi.
    pub fn new_real(omega_a: T, omega_b: T, omega_c: T, kappa: T) -> Result<Self, ModelError> {
        Self::new(omega_a, omega_b, omega_c, Complex::new(kappa, T::zero()))
    }

    pub fn omega_a(&self) -> T {
        self.omega_a
    }

    pub fn omega_b(&self) -> T {
        self.omega_b
    }

    pub fn omega_c(&self) -> T {
        self.omega_c
    }

    /// Canonical coupling magnitude, `>= 0`.
    pub fn kappa(&self) -> T {
        self.kappa
    }

    /// Phase removed from the coupling during canonicalization.
    pub fn absorbed_phase(&self) -> T {
        self.absorbed_phase
    }

    /// `omega_a - omega_b - omega_c`; zero in the resonant case.
    pub fn detuning(&self) -> T {
        self.omega_a - self.omega_b - self.omega_c
    }

    /// Detuned operation is permitted but flagged so front ends can warn.
    pub fn is_resonant(&self) -> bool {
        let scale = self.omega_a + self.omega_b + self.omega_c;
        self.detuning().abs() <= T::epsilon() * scale
    }
}

/// Parameters of the microscopic three-level model: field frequencies,
/// atomic level energies and the three dipole couplings.
#[derive(Debug, Clone, Copy)]
pub struct MicroscopicParams<T: Scalar> {
    omega_a: T,
    omega_b: T,
    omega_c: T,
    level_energies: [T; 3],
    g_a: T,
    g_b: T,
    g_c: T,
}

impl<T: Scalar> MicroscopicParams<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega_a: T,
        omega_b: T,
        omega_c: T,
        level_energies: [T; 3],
        g_a: T,
        g_b: T,
        g_c: T,
    ) -> Result<Self, ModelError> {
        check_frequency("omega_a", omega_a)?;
        check_frequency("omega_b", omega_b)?;
        check_frequency("omega_c", omega_c)?;
        Ok(Self {
            omega_a,
            omega_b,
            omega_c,
            level_energies,
            g_a,
            g_b,
            g_c,
        })
    }

    pub fn omega_a(&self) -> T {
        self.omega_a
    }

    pub fn omega_b(&self) -> T {
        self.omega_b
    }

    pub fn omega_c(&self) -> T {
        self.omega_c
    }

    pub fn level_energy(&self, level: usize) -> T {
        self.level_energies[level]
    }

    pub fn g_a(&self) -> T {
        self.g_a
    }

    pub fn g_b(&self) -> T {
        self.g_b
    }

    pub fn g_c(&self) -> T {
        self.g_c
    }

    /// Two-photon detuning `delta = E2 - E0 - omega_a`.
    pub fn delta(&self) -> T {
        self.level_energies[2] - self.level_energies[0] - self.omega_a
    }

    /// One-photon detuning `Delta = E1 - E0 - omega_b`.
    pub fn big_delta(&self) -> T {
        self.level_energies[1] - self.level_energies[0] - self.omega_b
    }
}

fn check_frequency<T: Scalar>(name: &'static str, value: T) -> Result<(), ModelError> {
    if value > T::zero() {
        Ok(())
    } else {
        Err(ModelError::NonPositiveFrequency {
            name,
            value: to_f64(value),
        })
    }
}

/// Real symmetric tridiagonal matrix, stored as diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSymmetric<T: Scalar> {
    diag: Vec<T>,
    offdiag: Vec<T>,
}

impl<T: Scalar> TridiagonalSymmetric<T> {
    pub fn new(diag: Vec<T>, offdiag: Vec<T>) -> Self {
        assert_eq!(
            offdiag.len() + 1,
            diag.len().max(1),
            "offdiag length must be diag length - 1"
        );
        Self { diag, offdiag }
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[T] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[T] {
        &self.offdiag
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> T {
        let n = self.diag.len();
        let mut norm = T::zero();
        for i in 0..n {
            let mut row = self.diag[i].abs();
            if i > 0 {
                row += self.offdiag[i - 1].abs();
            }
            if i + 1 < n {
                row += self.offdiag[i].abs();
            }
            norm = norm.max(row);
        }
        norm
    }
}

/// Real symmetric dense matrix; writes go through `set_sym` so the stored
/// data is mirror-exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricDense<T: Scalar> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymmetricDense<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    /// Set `(i, j)` and `(j, i)` to the same value.
    pub fn set_sym(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.dim + j] = value;
        self.data[j * self.dim + i] = value;
    }

    /// Add to `(i, j)` and mirror into `(j, i)` bit-exactly.
    pub fn add_sym(&mut self, i: usize, j: usize, value: T) {
        let updated = self.data[i * self.dim + j] + value;
        self.data[i * self.dim + j] = updated;
        self.data[j * self.dim + i] = updated;
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> T {
        let mut norm = T::zero();
        for i in 0..self.dim {
            let mut row = T::zero();
            for j in 0..self.dim {
                row += self.get(i, j).abs();
            }
            norm = norm.max(row);
        }
        norm
    }
}

/// Square root of a small non-negative integer product, computed as a
/// single `sqrt` of the exact integer so that independently assembled
/// matrix elements agree bit for bit.
fn sqrt_int<T: Scalar>(product: u64) -> T {
    T::from_u64(product).expect("integer product fits scalar").sqrt()
}

/// Trilinear block Hamiltonian on the basis `(k, m1-k, m2-k)`:
/// diagonal `w_a k + w_b (m1-k) + w_c (m2-k)`, off-diagonal
/// `kappa sqrt((k+1)(m1-k)(m2-k))` coupling `k` and `k+1`.
pub fn build_trilinear_block<T: Scalar>(
    params: &TrilinearParams<T>,
    block: &BlockBasis,
) -> TridiagonalSymmetric<T> {
    assert_eq!(block.model_kind(), ModelKind::Trilinear, "trilinear basis required");
    let m1 = u64::from(block.index().m1);
    let m2 = u64::from(block.index().m2);
    let dim = block.dimension();

    let mut diag = Vec::with_capacity(dim);
    for state in block.states() {
        let k = from_u32::<T>(state.occupation(0));
        let n_b = from_u32::<T>(state.occupation(1));
        let n_c = from_u32::<T>(state.occupation(2));
        diag.push(params.omega_a() * k + params.omega_b() * n_b + params.omega_c() * n_c);
    }
    let mut offdiag = Vec::with_capacity(dim.saturating_sub(1));
    for k in 0..dim.saturating_sub(1) {
        let k = k as u64;
        let product = (k + 1) * (m1 - k) * (m2 - k);
        offdiag.push(params.kappa() * sqrt_int::<T>(product));
    }
    TridiagonalSymmetric::new(diag, offdiag)
}

/// Microscopic block Hamiltonian on the enumerated basis: field plus level
/// energies on the diagonal, dipole couplings `g_a sqrt(n_a)` between
/// levels 0 and 2 (absorbing an a photon), `g_b sqrt(n_b)` between 0 and 1,
/// and `g_c sqrt(n_c)` between 1 and 2.
pub fn build_microscopic_block<T: Scalar>(
    params: &MicroscopicParams<T>,
    block: &BlockBasis,
) -> SymmetricDense<T> {
    assert_eq!(
        block.model_kind(),
        ModelKind::Microscopic,
        "microscopic basis required"
    );
    let dim = block.dimension();
    let mut h = SymmetricDense::zeros(dim);

    for (row, state) in block.states().iter().enumerate() {
        let n_a = state.occupation(0);
        let n_b = state.occupation(1);
        let n_c = state.occupation(2);
        let level = state.atom_level().expect("microscopic state");
        let diag = params.omega_a() * from_u32::<T>(n_a)
            + params.omega_b() * from_u32::<T>(n_b)
            + params.omega_c() * from_u32::<T>(n_c)
            + params.level_energy(level as usize);
        h.set_sym(row, row, diag);

        // Couplings are emitted once per unordered pair, from the state
        // whose photon gets absorbed.
        if level == 0 && n_a >= 1 {
            let partner = FockOccupation::with_atom(2, vec![n_a - 1, n_b, n_c]);
            let col = block.position(&partner).expect("partner in same block");
            h.set_sym(row, col, params.g_a() * sqrt_int::<T>(u64::from(n_a)));
        }
        if level == 0 && n_b >= 1 {
            let partner = FockOccupation::with_atom(1, vec![n_a, n_b - 1, n_c]);
            let col = block.position(&partner).expect("partner in same block");
            h.set_sym(row, col, params.g_b() * sqrt_int::<T>(u64::from(n_b)));
        }
        if level == 1 && n_c >= 1 {
            let partner = FockOccupation::with_atom(2, vec![n_a, n_b, n_c - 1]);
            let col = block.position(&partner).expect("partner in same block");
            h.set_sym(row, col, params.g_c() * sqrt_int::<T>(u64::from(n_c)));
        }
    }
    h
}

/// Third-order perturbative reduction of the microscopic model: effective
/// coupling `kappa = g_a g_b g_c / (delta Delta)` with the ground-state
/// Stark shifts `g_a^2/delta` and `g_b^2/Delta` folded into the mode
/// frequencies.
pub fn effective_from_microscopic<T: Scalar>(
    params: &MicroscopicParams<T>,
) -> Result<(TrilinearParams<T>, T, T), ModelError> {
    let delta = params.delta();
    let big_delta = params.big_delta();
    if delta == T::zero() {
        return Err(ModelError::ZeroDetuning { name: "delta" });
    }
    if big_delta == T::zero() {
        return Err(ModelError::ZeroDetuning { name: "Delta" });
    }
    let kappa = params.g_a() * params.g_b() * params.g_c() / (delta * big_delta);
    let stark_a = params.g_a() * params.g_a() / delta;
    let stark_b = params.g_b() * params.g_b() / big_delta;
    let reduced = TrilinearParams::new_real(
        params.omega_a() - stark_a,
        params.omega_b() - stark_b,
        params.omega_c(),
        kappa,
    )?;
    Ok((reduced, stark_a, stark_b))
}

/// Dispersive-regime diagnostics `g_a sqrt(n_a)/|delta|` and
/// `g_b sqrt(n_b)/|Delta|`; values well below one indicate the
/// perturbative reduction is trustworthy.
pub fn dispersive_ratios<T: Scalar>(
    params: &MicroscopicParams<T>,
    occupations: &FockOccupation,
) -> Result<(T, T), ModelError> {
    let delta = params.delta();
    let big_delta = params.big_delta();
    if delta == T::zero() {
        return Err(ModelError::ZeroDetuning { name: "delta" });
    }
    if big_delta == T::zero() {
        return Err(ModelError::ZeroDetuning { name: "Delta" });
    }
    let ratio_a =
        params.g_a() * sqrt_int::<T>(u64::from(occupations.occupation(0))) / delta.abs();
    let ratio_b =
        params.g_b() * sqrt_int::<T>(u64::from(occupations.occupation(1))) / big_delta.abs();
    Ok((ratio_a, ratio_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{block_basis_microscopic, block_basis_trilinear};

    fn trilinear_desk() -> TrilinearParams<f64> {
        TrilinearParams::new_real(2.0, 1.0, 1.0, 0.1).unwrap()
    }

    fn microscopic_desk() -> MicroscopicParams<f64> {
        MicroscopicParams::new(2.0, 1.0, 1.0, [0.0, 1.1, 2.2], 0.01, 0.01, 0.01).unwrap()
    }

    #[test]
    fn vacuum_block_is_scalar_zero() {
        let h = build_trilinear_block(&trilinear_desk(), &block_basis_trilinear(0, 0));
        assert_eq!(h.diag(), &[0.0]);
        assert_eq!(h.offdiag(), &[] as &[f64]);
    }

    #[test]
    fn block_11_matrix() {
        let h = build_trilinear_block(&trilinear_desk(), &block_basis_trilinear(1, 1));
        assert_eq!(h.diag(), &[2.0, 2.0]);
        assert_eq!(h.offdiag(), &[0.1]);
    }

    #[test]
    fn block_22_matrix() {
        let h = build_trilinear_block(&trilinear_desk(), &block_basis_trilinear(2, 2));
        assert_eq!(h.diag(), &[4.0, 4.0, 4.0]);
        assert_eq!(h.offdiag(), &[0.2, 2f64.sqrt() * 0.1]);
    }

    #[test]
    fn kappa_canonicalization() {
        let p = TrilinearParams::new_real(2.0, 1.0, 1.0, -0.3).unwrap();
        assert_eq!(p.kappa(), 0.3);
        assert!((p.absorbed_phase() - std::f64::consts::PI).abs() < 1e-15);

        let p = TrilinearParams::<f64>::new(2.0, 1.0, 1.0, num_complex::Complex::new(0.0, 0.2)).unwrap();
        assert!((p.kappa() - 0.2).abs() < 1e-16);
        assert!((p.absorbed_phase() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn frequencies_must_be_positive() {
        assert!(matches!(
            TrilinearParams::new_real(0.0, 1.0, 1.0, 0.1),
            Err(ModelError::NonPositiveFrequency { name: "omega_a", .. })
        ));
    }

    #[test]
    fn microscopic_block_11_matrix() {
        let h = build_microscopic_block(&microscopic_desk(), &block_basis_microscopic(1, 1));
        assert_eq!(h.dimension(), 4);
        // Basis: (0;0,1,1), (0;1,0,0), (1;0,0,1), (2;0,0,0).
        assert_eq!(h.get(0, 0), 2.0);
        assert_eq!(h.get(1, 1), 2.0);
        assert_eq!(h.get(2, 2), 1.0 + 1.1);
        assert_eq!(h.get(3, 3), 2.2);
        assert_eq!(h.get(0, 2), 0.01); // g_b between states 1 and 3
        assert_eq!(h.get(1, 3), 0.01); // g_a between states 2 and 4
        assert_eq!(h.get(2, 3), 0.01); // g_c between states 3 and 4
        assert_eq!(h.get(0, 1), 0.0);
        assert_eq!(h.get(0, 3), 0.0);
        assert_eq!(h.get(1, 2), 0.0);
    }

    #[test]
    fn microscopic_block_is_bitwise_symmetric() {
        let h = build_microscopic_block(&microscopic_desk(), &block_basis_microscopic(5, 7));
        for i in 0..h.dimension() {
            for j in 0..h.dimension() {
                assert_eq!(h.get(i, j).to_bits(), h.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn decoupled_microscopic_model_is_diagonal() {
        let p = MicroscopicParams::new(2.0, 1.0, 1.0, [0.0, 1.1, 2.2], 0.0, 0.0, 0.0).unwrap();
        let h = build_microscopic_block(&p, &block_basis_microscopic(3, 3));
        for i in 0..h.dimension() {
            for j in 0..h.dimension() {
                if i != j {
                    assert_eq!(h.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn effective_reduction_desk_values() {
        let p = microscopic_desk();
        assert!((p.delta() - 0.2).abs() < 1e-15);
        assert!((p.big_delta() - 0.1).abs() < 1e-15);
        let (reduced, stark_a, stark_b) = effective_from_microscopic(&p).unwrap();
        assert!((reduced.kappa() - 5e-5).abs() < 1e-18);
        assert!((stark_a - 5e-4).abs() < 1e-18);
        assert!((stark_b - 1e-3).abs() < 1e-18);
        assert!((reduced.omega_a() - (2.0 - 5e-4)).abs() < 1e-15);
        assert!((reduced.omega_b() - (1.0 - 1e-3)).abs() < 1e-15);
        assert_eq!(reduced.omega_c(), 1.0);
    }

    #[test]
    fn broken_coupling_chain_gives_zero_kappa() {
        let p = MicroscopicParams::new(2.0, 1.0, 1.0, [0.0, 1.1, 2.2], 0.01, 0.0, 0.01).unwrap();
        let (reduced, _, stark_b) = effective_from_microscopic(&p).unwrap();
        assert_eq!(reduced.kappa(), 0.0);
        assert_eq!(stark_b, 0.0);
    }

    #[test]
    fn zero_detuning_is_rejected() {
        let p = MicroscopicParams::new(2.0, 1.0, 1.0, [0.0, 1.1, 2.0], 0.01, 0.01, 0.01).unwrap();
        assert!(matches!(
            effective_from_microscopic(&p),
            Err(ModelError::ZeroDetuning { name: "delta" })
        ));
        assert!(dispersive_ratios(&p, &FockOccupation::with_atom(0, vec![1, 0, 0])).is_err());
    }

    #[test]
    fn dispersive_ratio_values() {
        let p = microscopic_desk();
        let (r, _) = dispersive_ratios(&p, &FockOccupation::with_atom(0, vec![0, 0, 0])).unwrap();
        assert_eq!(r, 0.0);
        let (r, _) = dispersive_ratios(&p, &FockOccupation::with_atom(0, vec![4, 0, 0])).unwrap();
        assert!((r - 0.1).abs() < 1e-15);
        let (r, _) =
            dispersive_ratios(&p, &FockOccupation::with_atom(0, vec![400, 0, 0])).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }
}
