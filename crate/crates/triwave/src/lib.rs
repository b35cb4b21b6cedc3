//! Block-exact simulation and analysis of quantum three-wave mixing on
//! truncated Fock spaces.
//!
//! Three-wave interactions conserve two photon-number combinations, which
//! splits the state space into finite non-interacting blocks. This crate
//! builds those blocks exactly for the trilinear model and its microscopic
//! three-level parent, diagonalizes them with self-contained symmetric
//! eigensolvers, evolves states spectrally, and provides the closed-form
//! energy functionals and ground-energy scans that contrast the trilinear
//! model's unbounded-below spectrum with the bounded microscopic one. An
//! operator DSL under [`opspec`] serves as an independent oracle for the
//! block machinery and handles generic mixing Hamiltonians such as the
//! four-wave variant.
//!
//! Core math is generic over the scalar type via [`scalar::Scalar`];
//! `*64` aliases at the crate root fix `f64` for everyday use.

pub mod analysis;
pub mod dynamics;
pub mod eigen;
pub mod fock;
pub mod models;
pub mod opspec;
pub mod scalar;

pub use fock::{BlockBasis, BlockIndex, CoherentSpec, FockOccupation, ModelKind};
pub use scalar::Scalar;

/// `f64` instantiations of the generic core types.
pub type TrilinearParams64 = models::TrilinearParams<f64>;
pub type MicroscopicParams64 = models::MicroscopicParams<f64>;
pub type TridiagonalSymmetric64 = models::TridiagonalSymmetric<f64>;
pub type SymmetricDense64 = models::SymmetricDense<f64>;
pub type Spectrum64 = eigen::Spectrum<f64>;
pub type CoherentSpec64 = fock::CoherentSpec<f64>;
pub type GlobalState64 = dynamics::GlobalState<f64>;
pub type EvolutionContext64 = dynamics::EvolutionContext<f64>;
pub type GroundScanResult64 = analysis::GroundScanResult<f64>;
pub type OperatorExpr64 = opspec::OperatorExpr<f64>;
