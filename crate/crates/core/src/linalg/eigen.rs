//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, then applies the classic real symmetric Jacobi rotation to the
//! resulting real 2×2 block. The combined 2×2 unitary acts on columns/rows
//! `p` and `q` only, so a rotation costs O(n).

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Relative convergence tolerance: off-diagonals are driven below
/// `DEFAULT_EIGEN_TOL * ‖M‖_F`.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;

/// Sweep limit before reporting [`Error::NoConvergence`].
pub const MAX_SWEEPS: usize = 100;

/// Entrywise tolerance on `M - M†`, relative to `max(1, max|M_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `U diag(λ) U†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let n = u.rows();
        ComplexMatrix::from_fn(n, n, |i, j| {
            self.eigenvalues
                .iter()
                .enumerate()
                .map(|(k, &lam)| u[(i, k)] * u[(j, k)].conj() * lam)
                .sum()
        })
    }
}

/// Diagonalizes a Hermitian matrix.
///
/// `tol` is relative to the Frobenius norm of the input; pass
/// [`DEFAULT_EIGEN_TOL`] unless there is a reason not to.
pub fn hermitian_eigendecomposition(m: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "eigendecomposition (square input)",
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }

    let n = m.rows();
    let mut a = m.hermitized();
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);
    let threshold = tol * m.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let residual = max_off_diagonal(&a);
        if residual <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if m.rows() == 2 && m.cols() == 2 {
        // closed form; the 2×2 case dominates subsystem trace distances
        let deviation = m.hermitian_deviation();
        if deviation > HERMITIAN_TOL * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian { deviation });
        }
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        return Ok(vec![mean - radius, mean + radius]);
    }
    Ok(hermitian_eigendecomposition(m, DEFAULT_EIGEN_TOL)?.eigenvalues)
}

fn max_off_diagonal(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut off = 0.0_f64;
    for p in 0..n {
        for q in (p + 1)..n {
            off = off.max(a[(p, q)].norm());
        }
    }
    off
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let z = a[(p, q)];
    let r = z.norm();
    if r == 0.0 {
        return;
    }
    let phase = z / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // W = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
    let w_pp = Complex64::new(c, 0.0);
    let w_pq = Complex64::new(s, 0.0);
    let w_qp = -phase.conj() * s;
    let w_qq = phase.conj() * c;

    let n = a.rows();
    // A <- A W
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * w_pp + akq * w_qp;
        a[(k, q)] = akp * w_pq + akq * w_qq;
    }
    // A <- W† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
        a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(app - t * r, 0.0);
    a[(q, q)] = Complex64::new(aqq + t * r, 0.0);

    // V <- V W
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * w_pp + vkq * w_qp;
        v[(k, q)] = vkp * w_pq + vkq * w_qq;
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::random::gue_hermitian;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unitarity_error(u: &ComplexMatrix) -> f64 {
        (&u.adjoint() * u).max_abs_diff(&ComplexMatrix::identity(u.rows()))
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = hermitian_eigendecomposition(&ComplexMatrix::identity(4), DEFAULT_EIGEN_TOL).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0; 4]);
        assert!(unitarity_error(&e.eigenvectors) < 1e-15);
    }

    #[test]
    fn pauli_x() {
        let sx = ComplexMatrix::new(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let e = hermitian_eigendecomposition(&sx, DEFAULT_EIGEN_TOL).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!(e.reconstruct().max_abs_diff(&sx) < 1e-14);
    }

    #[test]
    fn random_8x8_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = gue_hermitian(8, &mut rng);
        let e = hermitian_eigendecomposition(&m, DEFAULT_EIGEN_TOL).unwrap();
        let rel = (&e.reconstruct() - &m).frobenius_norm() / m.frobenius_norm();
        assert!(rel < 1e-9, "relative reconstruction error {rel:e}");
        assert!(unitarity_error(&e.eigenvectors) < 1e-10);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::new(2, 2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert!(matches!(
            hermitian_eigendecomposition(&m, DEFAULT_EIGEN_TOL),
            Err(Error::NotHermitian { .. })
        ));
        assert!(hermitian_eigenvalues(&m).is_err());
    }

    #[test]
    fn degenerate_spectrum_is_allowed() {
        let m = ComplexMatrix::from_real_diagonal(&[2.0, -1.0, 2.0, 2.0]);
        let e = hermitian_eigendecomposition(&m, DEFAULT_EIGEN_TOL).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn zero_matrix() {
        let e = hermitian_eigendecomposition(&ComplexMatrix::zeros(3, 3), DEFAULT_EIGEN_TOL).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0; 3]);
    }

    /// Every 2×2 Hermitian matrix with integer parts in [-3, 3], against the
    /// roots of the characteristic polynomial.
    #[test]
    fn agrees_with_characteristic_polynomial_on_integer_2x2() {
        for a in -3..=3 {
            for d in -3..=3 {
                for x in -3..=3 {
                    for y in -3..=3 {
                        let (a, d, x, y) = (a as f64, d as f64, x as f64, y as f64);
                        let m = ComplexMatrix::new(2, 2, vec![c(a, 0.0), c(x, y), c(x, -y), c(d, 0.0)])
                            .unwrap();
                        // λ² - (a+d)λ + (ad - |b|²) = 0
                        let tr = a + d;
                        let det = a * d - (x * x + y * y);
                        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
                        let expected = [(tr - disc) / 2.0, (tr + disc) / 2.0];
                        let got = hermitian_eigendecomposition(&m, DEFAULT_EIGEN_TOL).unwrap();
                        let closed = hermitian_eigenvalues(&m).unwrap();
                        for k in 0..2 {
                            assert!((got.eigenvalues[k] - expected[k]).abs() < 1e-9);
                            assert!((closed[k] - expected[k]).abs() < 1e-9);
                        }
                    }
                }
            }
        }
    }
}
