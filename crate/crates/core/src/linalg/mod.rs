//! Dense complex linear algebra: the matrix type, Kronecker products, a
//! Hermitian eigensolver and Haar-random unitaries.

mod eigen;
mod matrix;
pub mod random;

pub use eigen::{
    hermitian_eigendecomposition, hermitian_eigenvalues, EigenDecomposition, DEFAULT_EIGEN_TOL,
    HERMITIAN_TOL, MAX_SWEEPS,
};
pub use matrix::{inner, norm, ComplexMatrix};
pub use random::{gue_hermitian, haar_random_unitary, standard_complex_normal};

/// `A ⊗ B`.
pub fn kronecker_product(a: &ComplexMatrix, b: &ComplexMatrix) -> crate::Result<ComplexMatrix> {
    a.kron(b)
}
