//! Exact diagonalization of a mean-field Bose gas coupled to a single
//! impurity on the torus, and of its Fröhlich effective Hamiltonian.
//!
//! The crate builds momentum-sector occupation bases, assembles the N-body
//! and effective Hamiltonians as sparse symmetric matrices, finds their low
//! spectra, and compares the two through the excitation map that factors out
//! the condensate.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod harness;
pub mod map;
pub mod model;
pub mod solve;

pub use assembly::SparseOperator;
pub use basis::{BasisKind, ProductState, SectorBasis};
pub use error::{ConfigError, Error, Result};
pub use map::{LnssBijection, MappedState};
pub use model::{ExperimentConfig, ModeSet, ModeVector, ModelParams, PotentialSpec, SolverSettings};
pub use solve::{SolveOptions, SpectrumResult};
