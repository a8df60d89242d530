//! Pure states, density matrices, Haar sampling and the scalar functionals
//! (purity, effective dimension, trace distance).

use num_complex::Complex64;
use rand::Rng;

use crate::bipartite::BipartiteSpace;
use crate::error::{Error, Result};
use crate::linalg::random::gaussian_vector;
use crate::linalg::{hermitian_eigenvalues, norm, ComplexMatrix};

/// Tolerance on `Σ|ψ_i|² = 1`.
pub const NORM_TOL: f64 = 1e-12;
/// Eigenvalues above this count toward the rank.
pub const RANK_THRESHOLD: f64 = 1e-10;
/// Most negative eigenvalue a density matrix may carry from rounding.
pub const NEGATIVITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("state vector is empty".into()));
        }
        let n2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if !n2.is_finite() || (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state vector is not normalized (norm² = {n2})"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        for z in &mut amplitudes {
            *z /= n;
        }
        Ok(Self { amplitudes })
    }

    /// Computational basis state `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub(crate) fn from_trusted(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// ⟨self|other⟩
    pub fn overlap(&self, other: &PureState) -> Complex64 {
        crate::linalg::inner(&self.amplitudes, &other.amplitudes)
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity (the latter costs an
    /// eigendecomposition).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                context: "density matrix (square)",
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        let deviation = matrix.hermitian_deviation();
        if deviation > 1e-10 {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = matrix.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidArgument(format!("density matrix trace is {tr}")));
        }
        let matrix = matrix.hermitized();
        let min_eig = hermitian_eigenvalues(&matrix)?[0];
        if min_eig < -NEGATIVITY_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix has eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            matrix: ComplexMatrix::outer(psi.amplitudes()),
        }
    }

    /// `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// Skips validation; for results of operations that preserve the
    /// density-matrix invariants.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn purity(&self) -> f64 {
        purity_of(&self.matrix)
    }

    pub fn effective_dimension(&self) -> f64 {
        1.0 / self.purity()
    }

    /// Number of eigenvalues above [`RANK_THRESHOLD`].
    pub fn rank(&self) -> Result<usize> {
        Ok(hermitian_eigenvalues(&self.matrix)?
            .into_iter()
            .filter(|&l| l > RANK_THRESHOLD)
            .count())
    }
}

/// `tr(ρ²)` for a Hermitian matrix, computed as `Σ|ρ_ij|²`.
pub fn purity_of(rho: &ComplexMatrix) -> f64 {
    rho.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// `1 / tr(ρ²)`.
pub fn effective_dimension(rho: &DensityMatrix) -> f64 {
    rho.effective_dimension()
}

/// `½ Σ|λ_i|` over the eigenvalues of `ρ₁ - ρ₂`.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    trace_distance_of(rho1.matrix(), rho2.matrix())
}

/// Trace distance on raw Hermitian matrices.
pub fn trace_distance_of(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "trace distance",
            expected: a.rows(),
            found: b.rows(),
        });
    }
    let diff = a - b;
    let eig = hermitian_eigenvalues(&diff)?;
    Ok((0.5 * eig.iter().map(|l| l.abs()).sum::<f64>()).min(1.0))
}

/// An `d_R`-dimensional subspace of the ambient space, given by an
/// orthonormal basis stored as columns.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: ComplexMatrix,
}

impl Subspace {
    pub fn new(basis: ComplexMatrix) -> Result<Self> {
        if basis.cols() > basis.rows() {
            return Err(Error::InvalidArgument(format!(
                "{} basis vectors cannot be independent in dimension {}",
                basis.cols(),
                basis.rows()
            )));
        }
        let gram = &basis.adjoint() * &basis;
        let err = gram.max_abs_diff(&ComplexMatrix::identity(basis.cols()));
        if err > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "subspace basis is not orthonormal (max deviation {err:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// The whole space.
    pub fn full(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        crate::limits::check_dim(dim)?;
        Ok(Self {
            basis: ComplexMatrix::identity(dim),
        })
    }

    /// `|ψ⟩_S ⊗ H_B`: the subsystem is fixed, the bath is free.
    pub fn product_fixed_system(psi_s: &PureState, space: &BipartiteSpace) -> Result<Self> {
        check_factor(psi_s, space.d_s(), "fixed subsystem state")?;
        let columns: Vec<_> = (0..space.d_b())
            .map(|b| {
                let e_b = PureState::basis(space.d_b(), b).expect("in range");
                product_state(psi_s, &e_b, space).map(PureState::into_amplitudes)
            })
            .collect::<Result<_>>()?;
        Self::new(ComplexMatrix::from_columns(&columns)?)
    }

    /// `H_S ⊗ |φ⟩_B`: the bath is fixed, the subsystem is free.
    pub fn product_fixed_bath(phi_b: &PureState, space: &BipartiteSpace) -> Result<Self> {
        check_factor(phi_b, space.d_b(), "fixed bath state")?;
        let columns: Vec<_> = (0..space.d_s())
            .map(|s| {
                let e_s = PureState::basis(space.d_s(), s).expect("in range");
                product_state(&e_s, phi_b, space).map(PureState::into_amplitudes)
            })
            .collect::<Result<_>>()?;
        Self::new(ComplexMatrix::from_columns(&columns)?)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    /// `d_R`.
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    /// `Π_R = B B†`.
    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * &self.basis.adjoint()
    }

    /// `⟨v|Π_R|v⟩ = ‖B† v‖²`.
    pub fn projector_weight(&self, v: &[Complex64]) -> f64 {
        self.basis.adjoint_mat_vec(v).iter().map(|z| z.norm_sqr()).sum()
    }
}

fn check_factor(psi: &PureState, dim: usize, context: &'static str) -> Result<()> {
    if psi.dim() != dim {
        return Err(Error::DimensionMismatch {
            context,
            expected: dim,
            found: psi.dim(),
        });
    }
    Ok(())
}

/// Haar-random pure state in the subspace: Gaussian coefficients on the
/// basis columns, normalized.
pub fn haar_random_state<R: Rng + ?Sized>(subspace: &Subspace, rng: &mut R) -> PureState {
    loop {
        let g = gaussian_vector(subspace.dim(), rng);
        let n = norm(&g);
        if n > 0.0 {
            let coeffs: Vec<_> = g.into_iter().map(|z| z / n).collect();
            return PureState::from_trusted(subspace.basis.mat_vec(&coeffs));
        }
    }
}

/// `|ψ⟩_S|φ⟩_B` under the fixed index convention.
pub fn product_state(psi_s: &PureState, phi_b: &PureState, space: &BipartiteSpace) -> Result<PureState> {
    check_factor(psi_s, space.d_s(), "subsystem factor")?;
    check_factor(phi_b, space.d_b(), "bath factor")?;
    let amplitudes = psi_s
        .amplitudes()
        .iter()
        .flat_map(|&a| phi_b.amplitudes().iter().map(move |&b| a * b))
        .collect();
    Ok(PureState::from_trusted(amplitudes))
}
