//! Dense linear algebra used by the spectral kernels.

mod complex;
mod eigen;
mod matrix;

pub use complex::{complex_operator_norm, ComplexMatrix};
pub use eigen::{symmetric_eigen, tridiagonal_count_below, tridiagonal_eigen, EigenSystem, MAX_QL_ITERATIONS};
pub use matrix::SymMatrix;
