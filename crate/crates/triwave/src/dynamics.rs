//! Exact time evolution by per-block spectral decomposition, and the
//! observables built on it: mode occupations, the conserved Manley-Rowe
//! combinations, the pair correlation `<bc>`, and the energy.
//!
//! Evolution never mixes blocks, so a state is a direct sum of small
//! complex amplitude vectors and propagation to any time is a single
//! `V exp(-i L t) V^T` per block with no step-size error.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::eigen::{self, EigenError, Spectrum, SymmetricOp};
use crate::fock::{
    block_basis, coherent_amplitude, coherent_block_weights, conserved_labels, BlockIndex,
    CoherentSpec, FockError, FockOccupation, ModelKind,
};
use crate::models::{
    build_microscopic_block, build_trilinear_block, MicroscopicParams, SymmetricDense,
    TridiagonalSymmetric, TrilinearParams,
};
use crate::scalar::{from_u32, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("no cached spectrum for block {0}; prepare the evolution context first")]
    MissingSpectrum(BlockIndex),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Model parameters behind an evolution context.
#[derive(Debug, Clone, Copy)]
pub enum ModelParams<T: Scalar> {
    Trilinear(TrilinearParams<T>),
    Microscopic(MicroscopicParams<T>),
}

impl<T: Scalar> ModelParams<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Trilinear(_) => ModelKind::Trilinear,
            ModelParams::Microscopic(_) => ModelKind::Microscopic,
        }
    }
}

enum BlockMatrix<T: Scalar> {
    Tridiagonal(TridiagonalSymmetric<T>),
    Dense(SymmetricDense<T>),
}

impl<T: Scalar> BlockMatrix<T> {
    fn apply(&self, x: &[T], y: &mut [T]) {
        match self {
            BlockMatrix::Tridiagonal(m) => m.apply(x, y),
            BlockMatrix::Dense(m) => m.apply(x, y),
        }
    }
}

struct BlockData<T: Scalar> {
    matrix: BlockMatrix<T>,
    spectrum: Spectrum<T>,
}

/// Per-block spectra cached once and reused across evolutions and scans.
pub struct EvolutionContext<T: Scalar> {
    params: ModelParams<T>,
    tol: T,
    blocks: BTreeMap<BlockIndex, BlockData<T>>,
}

impl<T: Scalar> EvolutionContext<T> {
    pub fn new(params: ModelParams<T>) -> Self {
        Self::with_tol(params, eigen::default_tol())
    }

    pub fn with_tol(params: ModelParams<T>, tol: T) -> Self {
        Self {
            params,
            tol,
            blocks: BTreeMap::new(),
        }
    }

    pub fn trilinear(params: TrilinearParams<T>) -> Self {
        Self::new(ModelParams::Trilinear(params))
    }

    pub fn microscopic(params: MicroscopicParams<T>) -> Self {
        Self::new(ModelParams::Microscopic(params))
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn model_kind(&self) -> ModelKind {
        self.params.kind()
    }

    /// Build and diagonalize every block the state touches that is not
    /// already cached.
    pub fn prepare(&mut self, state: &GlobalState<T>) -> Result<(), DynamicsError> {
        let indices: Vec<BlockIndex> = state.blocks.keys().copied().collect();
        for index in indices {
            self.prepare_block(index)?;
        }
        Ok(())
    }

    pub fn prepare_block(&mut self, index: BlockIndex) -> Result<(), DynamicsError> {
        if self.blocks.contains_key(&index) {
            return Ok(());
        }
        let data = match &self.params {
            ModelParams::Trilinear(p) => {
                let basis = block_basis(ModelKind::Trilinear, index);
                let matrix = build_trilinear_block(p, &basis);
                let spectrum = eigen::eig_tridiagonal(&matrix, self.tol)?;
                BlockData {
                    matrix: BlockMatrix::Tridiagonal(matrix),
                    spectrum,
                }
            }
            ModelParams::Microscopic(p) => {
                let basis = block_basis(ModelKind::Microscopic, index);
                let matrix = build_microscopic_block(p, &basis);
                let spectrum = eigen::eig_symmetric(&matrix, self.tol)?;
                BlockData {
                    matrix: BlockMatrix::Dense(matrix),
                    spectrum,
                }
            }
        };
        self.blocks.insert(index, data);
        Ok(())
    }

    pub fn spectrum(&self, index: BlockIndex) -> Option<&Spectrum<T>> {
        self.blocks.get(&index).map(|d| &d.spectrum)
    }

    fn block_data(&self, index: BlockIndex) -> Result<&BlockData<T>, DynamicsError> {
        self.blocks
            .get(&index)
            .ok_or(DynamicsError::MissingSpectrum(index))
    }

    /// Largest eigenvalue magnitude over all cached blocks; the scale that
    /// converts a probability tail into an observable uncertainty.
    pub fn spectral_radius(&self) -> T {
        let mut radius = T::zero();
        for data in self.blocks.values() {
            for &lambda in data.spectrum.eigenvalues() {
                radius = radius.max(lambda.abs());
            }
        }
        radius
    }
}

/// Complex amplitudes over one block basis.
#[derive(Debug, Clone)]
pub struct BlockState<T: Scalar> {
    block: BlockIndex,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Scalar> BlockState<T> {
    pub fn new(block: BlockIndex, amplitudes: Vec<Complex<T>>) -> Self {
        Self { block, amplitudes }
    }

    pub fn block(&self) -> BlockIndex {
        self.block
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm_sq(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }
}

/// Direct sum of block states, with the probability mass discarded by
/// truncation carried along as `tail_bound`.
#[derive(Debug, Clone)]
pub struct GlobalState<T: Scalar> {
    model_kind: ModelKind,
    blocks: BTreeMap<BlockIndex, BlockState<T>>,
    tail_bound: T,
}

impl<T: Scalar> GlobalState<T> {
    /// Assemble a state from explicit block amplitude vectors; each vector
    /// length must match its block's basis dimension.
    pub fn from_blocks(
        model_kind: ModelKind,
        block_states: impl IntoIterator<Item = BlockState<T>>,
        tail_bound: T,
    ) -> Self {
        let mut blocks = BTreeMap::new();
        for bs in block_states {
            assert_eq!(
                bs.amplitudes.len(),
                block_basis(model_kind, bs.block).dimension(),
                "amplitude vector length must match block dimension"
            );
            blocks.insert(bs.block, bs);
        }
        Self {
            model_kind,
            blocks,
            tail_bound,
        }
    }

    pub fn model_kind(&self) -> ModelKind {
        self.model_kind
    }

    pub fn tail_bound(&self) -> T {
        self.tail_bound
    }

    pub fn blocks(&self) -> impl Iterator<Item = &BlockState<T>> {
        self.blocks.values()
    }

    pub fn block(&self, index: BlockIndex) -> Option<&BlockState<T>> {
        self.blocks.get(&index)
    }

    pub fn block_indices(&self) -> impl Iterator<Item = BlockIndex> + '_ {
        self.blocks.keys().copied()
    }

    pub fn total_norm_sq(&self) -> T {
        self.blocks
            .values()
            .fold(T::zero(), |acc, b| acc + b.norm_sq())
    }

    /// `|norm^2 + tail_bound - 1|`; zero for a faithfully truncated state.
    pub fn norm_defect(&self) -> T {
        (self.total_norm_sq() + self.tail_bound - T::one()).abs()
    }
}

/// State with unit amplitude on a single occupation-number state.
pub fn init_fock<T: Scalar>(kind: ModelKind, occupation: &FockOccupation) -> GlobalState<T> {
    assert_eq!(
        occupation.is_microscopic(),
        kind == ModelKind::Microscopic,
        "occupation does not match model kind"
    );
    let index = conserved_labels(kind, occupation);
    let basis = block_basis(kind, index);
    let pos = basis
        .position(occupation)
        .expect("occupation lies in its own block");
    let mut amplitudes = vec![Complex::zero(); basis.dimension()];
    amplitudes[pos] = Complex::one();
    let mut blocks = BTreeMap::new();
    blocks.insert(
        index,
        BlockState {
            block: index,
            amplitudes,
        },
    );
    GlobalState {
        model_kind: kind,
        blocks,
        tail_bound: T::zero(),
    }
}

/// Product coherent state distributed over blocks, truncated to the block
/// rectangle chosen by [`coherent_block_weights`]. The microscopic model
/// starts the atom in level 0.
pub fn init_coherent<T: Scalar>(
    kind: ModelKind,
    spec: &CoherentSpec<T>,
    tail_epsilon: T,
) -> Result<GlobalState<T>, DynamicsError> {
    let (weights, tail_bound) = coherent_block_weights(spec, kind, tail_epsilon)?;

    let mut max_m1 = 0;
    let mut max_m2 = 0;
    for index in weights.keys() {
        max_m1 = max_m1.max(index.m1);
        max_m2 = max_m2.max(index.m2);
    }
    let amp_a: Vec<Complex<T>> = (0..=max_m1.min(max_m2))
        .map(|n| coherent_amplitude(spec.amplitude(0), n))
        .collect();
    let amp_b: Vec<Complex<T>> = (0..=max_m1)
        .map(|n| coherent_amplitude(spec.amplitude(1), n))
        .collect();
    let amp_c: Vec<Complex<T>> = (0..=max_m2)
        .map(|n| coherent_amplitude(spec.amplitude(2), n))
        .collect();

    let mut blocks = BTreeMap::new();
    for index in weights.keys() {
        let basis = block_basis(kind, *index);
        let mut amplitudes = vec![Complex::zero(); basis.dimension()];
        for (pos, state) in basis.states().iter().enumerate() {
            if state.atom_level().unwrap_or(0) != 0 {
                continue;
            }
            let n_a = state.occupation(0) as usize;
            let n_b = state.occupation(1) as usize;
            let n_c = state.occupation(2) as usize;
            amplitudes[pos] = amp_a[n_a] * amp_b[n_b] * amp_c[n_c];
        }
        blocks.insert(
            *index,
            BlockState {
                block: *index,
                amplitudes,
            },
        );
    }
    Ok(GlobalState {
        model_kind: kind,
        blocks,
        tail_bound,
    })
}

/// Propagate a state to time `t` using the cached spectra:
/// `psi <- V exp(-i lambda t) V^T psi` block by block.
pub fn evolve<T: Scalar>(
    state: &GlobalState<T>,
    ctx: &EvolutionContext<T>,
    t: T,
) -> Result<GlobalState<T>, DynamicsError> {
    assert_eq!(state.model_kind(), ctx.model_kind(), "model kind mismatch");
    let mut blocks = BTreeMap::new();
    for (index, block_state) in &state.blocks {
        let data = ctx.block_data(*index)?;
        let spectrum = &data.spectrum;
        let dim = block_state.amplitudes.len();
        debug_assert_eq!(dim, spectrum.len());

        let mut out = vec![Complex::<T>::zero(); dim];
        for j in 0..dim {
            let v = spectrum.eigenvector(j);
            let mut coeff = Complex::<T>::zero();
            for (s, amp) in block_state.amplitudes.iter().enumerate() {
                coeff += amp.scale(v[s]);
            }
            let phase = Complex::from_polar(T::one(), -spectrum.eigenvalue(j) * t);
            let rotated = coeff * phase;
            for (s, slot) in out.iter_mut().enumerate() {
                *slot += rotated.scale(v[s]);
            }
        }
        blocks.insert(
            *index,
            BlockState {
                block: *index,
                amplitudes: out,
            },
        );
    }
    Ok(GlobalState {
        model_kind: state.model_kind,
        blocks,
        tail_bound: state.tail_bound,
    })
}

/// Mode occupation expectations, plus atomic level populations for the
/// microscopic model.
#[derive(Debug, Clone, Copy)]
pub struct NumberExpectations<T: Scalar> {
    pub n_a: T,
    pub n_b: T,
    pub n_c: T,
    pub atom: Option<[T; 3]>,
}

pub fn expect_numbers<T: Scalar>(state: &GlobalState<T>) -> NumberExpectations<T> {
    let kind = state.model_kind();
    let mut n_a = T::zero();
    let mut n_b = T::zero();
    let mut n_c = T::zero();
    let mut atom = [T::zero(); 3];
    for (index, block_state) in &state.blocks {
        let basis = block_basis(kind, *index);
        for (s, occ) in basis.states().iter().enumerate() {
            let p = block_state.amplitudes[s].norm_sqr();
            n_a += p * from_u32(occ.occupation(0));
            n_b += p * from_u32(occ.occupation(1));
            n_c += p * from_u32(occ.occupation(2));
            if let Some(level) = occ.atom_level() {
                atom[level as usize] += p;
            }
        }
    }
    NumberExpectations {
        n_a,
        n_b,
        n_c,
        atom: (kind == ModelKind::Microscopic).then_some(atom),
    }
}

/// Expectations of the conserved combinations. The third is returned as
/// `M2 - M1` identically, mirroring how it follows from the first two.
pub fn expect_invariants<T: Scalar>(state: &GlobalState<T>) -> (T, T, T) {
    let nums = expect_numbers(state);
    let (m1, m2) = match nums.atom {
        None => (nums.n_a + nums.n_b, nums.n_a + nums.n_c),
        Some(atom) => (
            nums.n_a + nums.n_b + atom[1] + atom[2],
            nums.n_a + nums.n_c + atom[2],
        ),
    };
    (m1, m2, m2 - m1)
}

/// Single-mode amplitudes and the pair correlation.
#[derive(Debug, Clone, Copy)]
pub struct PairExpectations<T: Scalar> {
    pub b: Complex<T>,
    pub c: Complex<T>,
    pub bc: Complex<T>,
}

/// `<b>`, `<c>` and `<b c>` from inter-block coherences: each annihilation
/// lowers one conserved label, so the operators map block `(m1, m2)` into
/// `(m1-1, m2)`, `(m1, m2-1)` and `(m1-1, m2-1)` respectively. Blocks
/// absent from the state contribute nothing, which makes the selection
/// rules exact.
pub fn expect_pair<T: Scalar>(
    state: &GlobalState<T>,
    ctx: &EvolutionContext<T>,
) -> PairExpectations<T> {
    assert_eq!(state.model_kind(), ctx.model_kind(), "model kind mismatch");
    let kind = state.model_kind();
    let mut b = Complex::<T>::zero();
    let mut c = Complex::<T>::zero();
    let mut bc = Complex::<T>::zero();

    for (index, source) in &state.blocks {
        let basis = block_basis(kind, *index);

        // <psi| b |psi>: target block (m1-1, m2).
        if index.m1 >= 1 {
            let target_index = BlockIndex::new(index.m1 - 1, index.m2);
            if let Some(target) = state.blocks.get(&target_index) {
                let target_basis = block_basis(kind, target_index);
                for (s, occ) in basis.states().iter().enumerate() {
                    let n_b = occ.occupation(1);
                    if n_b == 0 {
                        continue;
                    }
                    let lowered = lower(occ, 1);
                    if let Some(t) = target_basis.position(&lowered) {
                        let element = from_u32::<T>(n_b).sqrt();
                        b += target.amplitudes[t].conj()
                            * source.amplitudes[s].scale(element);
                    }
                }
            }
        }

        // <psi| c |psi>: target block (m1, m2-1).
        if index.m2 >= 1 {
            let target_index = BlockIndex::new(index.m1, index.m2 - 1);
            if let Some(target) = state.blocks.get(&target_index) {
                let target_basis = block_basis(kind, target_index);
                for (s, occ) in basis.states().iter().enumerate() {
                    let n_c = occ.occupation(2);
                    if n_c == 0 {
                        continue;
                    }
                    let lowered = lower(occ, 2);
                    if let Some(t) = target_basis.position(&lowered) {
                        let element = from_u32::<T>(n_c).sqrt();
                        c += target.amplitudes[t].conj()
                            * source.amplitudes[s].scale(element);
                    }
                }
            }
        }

        // <psi| b c |psi>: target block (m1-1, m2-1).
        if index.m1 >= 1 && index.m2 >= 1 {
            let target_index = BlockIndex::new(index.m1 - 1, index.m2 - 1);
            if let Some(target) = state.blocks.get(&target_index) {
                let target_basis = block_basis(kind, target_index);
                for (s, occ) in basis.states().iter().enumerate() {
                    let n_b = occ.occupation(1);
                    let n_c = occ.occupation(2);
                    if n_b == 0 || n_c == 0 {
                        continue;
                    }
                    let lowered = lower(&lower(occ, 1), 2);
                    if let Some(t) = target_basis.position(&lowered) {
                        let element =
                            T::from_u64(u64::from(n_b) * u64::from(n_c)).unwrap().sqrt();
                        bc += target.amplitudes[t].conj()
                            * source.amplitudes[s].scale(element);
                    }
                }
            }
        }
    }
    PairExpectations { b, c, bc }
}

fn lower(occ: &FockOccupation, mode: usize) -> FockOccupation {
    let mut occupations = occ.occupations().to_vec();
    occupations[mode] -= 1;
    match occ.atom_level() {
        Some(level) => FockOccupation::with_atom(level, occupations),
        None => FockOccupation::photons(occupations),
    }
}

/// `<H>` summed over blocks via the cached matrices; invariant under
/// [`evolve`] up to eigensolver residuals.
pub fn expect_energy<T: Scalar>(
    state: &GlobalState<T>,
    ctx: &EvolutionContext<T>,
) -> Result<T, DynamicsError> {
    assert_eq!(state.model_kind(), ctx.model_kind(), "model kind mismatch");
    let mut energy = T::zero();
    for (index, block_state) in &state.blocks {
        let data = ctx.block_data(*index)?;
        let dim = block_state.amplitudes.len();
        let re: Vec<T> = block_state.amplitudes.iter().map(|a| a.re).collect();
        let im: Vec<T> = block_state.amplitudes.iter().map(|a| a.im).collect();
        let mut work = vec![T::zero(); dim];
        data.matrix.apply(&re, &mut work);
        for s in 0..dim {
            energy += re[s] * work[s];
        }
        data.matrix.apply(&im, &mut work);
        for s in 0..dim {
            energy += im[s] * work[s];
        }
    }
    Ok(energy)
}

/// Additive uncertainty on any bounded observable caused by the truncated
/// tail: neglected mass times the largest retained eigenvalue scale.
pub fn tail_uncertainty<T: Scalar>(state: &GlobalState<T>, ctx: &EvolutionContext<T>) -> T {
    state.tail_bound() * ctx.spectral_radius()
}

/// One row of the trajectory output schema.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryRecord<T: Scalar> {
    pub t: T,
    pub n_a: T,
    pub n_b: T,
    pub n_c: T,
    pub m1: T,
    pub m2: T,
    pub pair_bc: Complex<T>,
    pub abs_b: T,
    pub abs_c: T,
    pub energy: T,
    pub tail_bound: T,
}

/// Evolve `state0` to each sample time (always from t = 0, so no error
/// accumulates across samples) and record the observable set consumed by
/// the CLI trajectory schema.
pub fn sample_trajectory<T: Scalar>(
    state0: &GlobalState<T>,
    ctx: &EvolutionContext<T>,
    times: &[T],
) -> Result<Vec<TrajectoryRecord<T>>, DynamicsError> {
    let mut records = Vec::with_capacity(times.len());
    for &t in times {
        let state = evolve(state0, ctx, t)?;
        let nums = expect_numbers(&state);
        let (m1, m2, _) = expect_invariants(&state);
        let pair = expect_pair(&state, ctx);
        let energy = expect_energy(&state, ctx)?;
        records.push(TrajectoryRecord {
            t,
            n_a: nums.n_a,
            n_b: nums.n_b,
            n_c: nums.n_c,
            m1,
            m2,
            pair_bc: pair.bc,
            abs_b: pair.b.norm(),
            abs_c: pair.c.norm(),
            energy,
            tail_bound: state.tail_bound(),
        });
    }
    Ok(records)
}
