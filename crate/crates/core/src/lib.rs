//! Hierarchical Anderson model: finite-volume Hamiltonians on an ultrametric index
//! space, their spectra, and Monte Carlo statistics of the rescaled eigenvalue process.
//!
//! The numerical kernels (`geom`, `linalg`, `operator`) are generic over the scalar
//! type through [`Real`]; the Monte Carlo layer works in `f64`.

pub mod error;
pub mod experiments;
pub mod geom;
pub mod linalg;
pub mod operator;
pub mod pointproc;
pub mod potential;
pub mod scalar;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use geom::{ball_members, hier_distance, spectral_dimension, CouplingSequence, HierGeometry};
pub use linalg::{symmetric_eigen, EigenSystem, SymMatrix};
pub use operator::{
    assemble_hierarchical, assemble_lattice, free_green_hier, laplacian_spectrum_closed_form,
    resolvent_diag, Hamiltonian, HierStructure, ModelTag,
};
pub use experiments::{run_experiment, EnsembleReport, ExperimentKind, ModelConfig, ModelSpec, Status};
pub use potential::PotentialDistribution;
pub use scalar::Real;

pub type CouplingSequence64 = CouplingSequence<f64>;
pub type Hamiltonian64 = Hamiltonian<f64>;
pub type EigenSystem64 = EigenSystem<f64>;
pub type SymMatrix64 = SymMatrix<f64>;
pub type HierStructure64 = HierStructure<f64>;
