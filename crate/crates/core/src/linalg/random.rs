use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::limits;

/// Complex Gaussian with independent N(0, 1/2) real and imaginary parts.
pub fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    (0..len).map(|_| standard_complex_normal(rng)).collect()
}

/// Haar-distributed unitary.
///
/// Columns of an i.i.d. complex Gaussian matrix are orthonormalized in order
/// (Gram-Schmidt, two passes). This is the QR factorization with a positive
/// real diagonal in R, which makes the Q factor exactly Haar.
pub fn haar_random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::InvalidArgument("unitary dimension must be at least 1".into()));
    }
    limits::check_dim(dim)?;
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    // Draw the whole Gaussian matrix row-major first so the stream layout does
    // not depend on the orthonormalization.
    let g = gaussian_vector(dim * dim, rng);
    for j in 0..dim {
        let mut col: Vec<Complex64> = (0..dim).map(|i| g[i * dim + j]).collect();
        loop {
            for _pass in 0..2 {
                for prev in &columns {
                    let proj: Complex64 = prev.iter().zip(&col).map(|(p, x)| p.conj() * x).sum();
                    for (x, p) in col.iter_mut().zip(prev) {
                        *x -= proj * p;
                    }
                }
            }
            let norm = super::matrix::norm(&col);
            if norm > 1e-8 {
                for x in &mut col {
                    *x /= norm;
                }
                break;
            }
            // Numerically dependent draw; happens with probability zero.
            col = gaussian_vector(dim, rng);
        }
        columns.push(col);
    }
    ComplexMatrix::from_columns(&columns)
}

/// Gaussian Hermitian matrix: complex N(0,1) off-diagonals, real N(0,1)
/// diagonal.
pub fn gue_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        m[(i, i)] = Complex64::new(d, 0.0);
        for j in (i + 1)..dim {
            let z = standard_complex_normal(rng);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn dim_one_is_a_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = haar_random_unitary(1, &mut rng).unwrap();
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dim_zero_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(haar_random_unitary(0, &mut rng).is_err());
    }

    #[test]
    fn unitary_at_16_and_128() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for dim in [16, 128] {
            let u = haar_random_unitary(dim, &mut rng).unwrap();
            let err = (&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(dim));
            assert!(err < 1e-10, "dim {dim}: {err:e}");
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let a = haar_random_unitary(6, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let b = haar_random_unitary(6, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.re.to_bits() == y.re.to_bits()
            && x.im.to_bits() == y.im.to_bits()));
    }

    /// For Haar U(2), |U00|² is uniform on [0, 1]: mean 1/2, variance 1/12.
    #[test]
    fn first_moment_of_u00_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| haar_random_unitary(2, &mut rng).unwrap()[(0, 0)].norm_sqr())
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "mean {mean}, se {se}");
        assert!((var - 1.0 / 12.0).abs() < 0.005);
    }

    #[test]
    fn gue_is_hermitian() {
        let m = gue_hermitian(5, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(m.hermitian_deviation(), 0.0);
    }
}
