//! The tensor-product structure `H = H_S ⊗ H_B`.
//!
//! Basis state `|s⟩_S|b⟩_B` has global index `s·d_B + b` (subsystem index most
//! significant). Every routine in the crate uses this convention.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits;
use crate::linalg::ComplexMatrix;
use crate::state::DensityMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteSpace {
    d_s: usize,
    d_b: usize,
}

impl BipartiteSpace {
    pub fn new(d_s: usize, d_b: usize) -> Result<Self> {
        if d_s == 0 || d_b == 0 {
            return Err(Error::InvalidArgument(format!(
                "subsystem and bath dimensions must be positive (got {d_s}, {d_b})"
            )));
        }
        limits::checked_product(d_s, d_b)?;
        Ok(Self { d_s, d_b })
    }

    #[inline]
    pub fn d_s(&self) -> usize {
        self.d_s
    }

    #[inline]
    pub fn d_b(&self) -> usize {
        self.d_b
    }

    /// Total dimension `d_S·d_B`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.d_s * self.d_b
    }

    pub fn compose_index(&self, s: usize, b: usize) -> Result<usize> {
        if s >= self.d_s {
            return Err(Error::IndexOutOfRange { index: s, dim: self.d_s });
        }
        if b >= self.d_b {
            return Err(Error::IndexOutOfRange { index: b, dim: self.d_b });
        }
        Ok(s * self.d_b + b)
    }

    pub fn decompose_index(&self, i: usize) -> Result<(usize, usize)> {
        if i >= self.dim() {
            return Err(Error::IndexOutOfRange { index: i, dim: self.dim() });
        }
        Ok((i / self.d_b, i % self.d_b))
    }

    fn check_operator(&self, m: &ComplexMatrix, context: &'static str) -> Result<()> {
        let d = self.dim();
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimensionMismatch {
                context,
                expected: d,
                found: if m.rows() != d { m.rows() } else { m.cols() },
            });
        }
        Ok(())
    }

    /// `tr_B X` for an arbitrary operator on the full space.
    pub fn trace_out_bath(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operator(x, "partial trace over bath")?;
        let (ds, db) = (self.d_s, self.d_b);
        let mut out = ComplexMatrix::zeros(ds, ds);
        for s in 0..ds {
            for t in 0..ds {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..db {
                    acc += x[(s * db + b, t * db + b)];
                }
                out[(s, t)] = acc;
            }
        }
        Ok(out)
    }

    /// `tr_S X` for an arbitrary operator on the full space.
    pub fn trace_out_system(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_operator(x, "partial trace over subsystem")?;
        let (ds, db) = (self.d_s, self.d_b);
        let mut out = ComplexMatrix::zeros(db, db);
        for s in 0..ds {
            for b in 0..db {
                for c in 0..db {
                    out[(b, c)] += x[(s * db + b, s * db + c)];
                }
            }
        }
        Ok(out)
    }

    /// `tr_B |ψ⟩⟨ψ|` straight from the amplitudes.
    pub fn reduced_system_of_vector(&self, psi: &[Complex64]) -> Result<ComplexMatrix> {
        self.check_vector(psi)?;
        let (ds, db) = (self.d_s, self.d_b);
        let mut out = ComplexMatrix::zeros(ds, ds);
        for s in 0..ds {
            let row_s = &psi[s * db..(s + 1) * db];
            for t in s..ds {
                let row_t = &psi[t * db..(t + 1) * db];
                let v: Complex64 = row_s.iter().zip(row_t).map(|(a, b)| a * b.conj()).sum();
                out[(s, t)] = v;
                out[(t, s)] = v.conj();
            }
            out[(s, s)].im = 0.0;
        }
        Ok(out)
    }

    /// `tr_S |ψ⟩⟨ψ|` straight from the amplitudes.
    pub fn reduced_bath_of_vector(&self, psi: &[Complex64]) -> Result<ComplexMatrix> {
        self.check_vector(psi)?;
        let (ds, db) = (self.d_s, self.d_b);
        let mut out = ComplexMatrix::zeros(db, db);
        for s in 0..ds {
            let row = &psi[s * db..(s + 1) * db];
            for b in 0..db {
                for c in b..db {
                    out[(b, c)] += row[b] * row[c].conj();
                }
            }
        }
        for b in 0..db {
            out[(b, b)].im = 0.0;
            for c in (b + 1)..db {
                out[(c, b)] = out[(b, c)].conj();
            }
        }
        Ok(out)
    }

    fn check_vector(&self, psi: &[Complex64]) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "state vector",
                expected: self.dim(),
                found: psi.len(),
            });
        }
        Ok(())
    }

    /// `ρ_S = tr_B ρ`, re-Hermitized.
    pub fn partial_trace_bath(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let reduced = self.trace_out_bath(rho.matrix())?.hermitized();
        Ok(DensityMatrix::from_trusted(reduced))
    }

    /// `ρ_B = tr_S ρ`, re-Hermitized.
    pub fn partial_trace_system(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let reduced = self.trace_out_system(rho.matrix())?.hermitized();
        Ok(DensityMatrix::from_trusted(reduced))
    }

    /// `A_S ⊗ 1_B`.
    pub fn embed_system_operator(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.rows() != self.d_s || a.cols() != self.d_s {
            return Err(Error::DimensionMismatch {
                context: "subsystem operator",
                expected: self.d_s,
                found: a.rows(),
            });
        }
        a.kron(&ComplexMatrix::identity(self.d_b))
    }

    /// `1_S ⊗ B_B`.
    pub fn embed_bath_operator(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        if b.rows() != self.d_b || b.cols() != self.d_b {
            return Err(Error::DimensionMismatch {
                context: "bath operator",
                expected: self.d_b,
                found: b.rows(),
            });
        }
        ComplexMatrix::identity(self.d_s).kron(b)
    }
}

/// SWAP on `C^dim ⊗ C^dim`: `S|i⟩|j⟩ = |j⟩|i⟩`.
pub fn swap_operator(dim: usize) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::InvalidArgument("SWAP dimension must be at least 1".into()));
    }
    let d2 = limits::checked_product(dim, dim)?;
    let mut s = ComplexMatrix::zeros(d2, d2);
    for i in 0..dim {
        for j in 0..dim {
            s[(j * dim + i, i * dim + j)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::linalg::random::gaussian_vector;
    use crate::linalg::{hermitian_eigenvalues, gue_hermitian};
    use crate::state::{haar_random_state, PureState, Subspace};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn index_convention() {
        let sp = BipartiteSpace::new(3, 4).unwrap();
        assert_eq!(sp.compose_index(0, 0).unwrap(), 0);
        assert_eq!(sp.compose_index(1, 2).unwrap(), 6);
        assert!(sp.compose_index(3, 0).is_err());
        assert!(sp.compose_index(0, 4).is_err());
        assert!(sp.decompose_index(12).is_err());
    }

    #[test]
    fn index_round_trip_exhaustive() {
        let sp = BipartiteSpace::new(4, 6).unwrap();
        for i in 0..24 {
            let (s, b) = sp.decompose_index(i).unwrap();
            assert_eq!(sp.compose_index(s, b).unwrap(), i);
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(BipartiteSpace::new(0, 3).is_err());
        assert!(BipartiteSpace::new(100, 100).is_err());
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let sp = BipartiteSpace::new(2, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
        let rho = DensityMatrix::from_pure(&bell);
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(sp.partial_trace_bath(&rho).unwrap().matrix().max_abs_diff(&half) < 1e-15);
        assert!(sp.partial_trace_system(&rho).unwrap().matrix().max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn product_state_traces_back_to_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sp = BipartiteSpace::new(3, 4).unwrap();
        let rs = random_density(3, &mut rng);
        let rb = random_density(4, &mut rng);
        let joint = DensityMatrix::from_trusted(rs.kron(&rb).unwrap());
        assert!(sp.partial_trace_bath(&joint).unwrap().matrix().max_abs_diff(&rs) < 1e-12);
        assert!(sp.partial_trace_system(&joint).unwrap().matrix().max_abs_diff(&rb) < 1e-12);
    }

    /// Nested-loop definition of tr_B on a pure state.
    #[test]
    fn partial_trace_matches_index_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let sp = BipartiteSpace::new(3, 5).unwrap();
        let psi = haar_random_state(&Subspace::full(15).unwrap(), &mut rng);
        let rho = DensityMatrix::from_pure(&psi);
        let got = sp.partial_trace_bath(&rho).unwrap();
        let a = psi.amplitudes();
        for s in 0..3 {
            for t in 0..3 {
                let mut acc = c(0.0);
                for b in 0..5 {
                    for b2 in 0..5 {
                        if b == b2 {
                            acc += a[s * 5 + b] * a[t * 5 + b2].conj();
                        }
                    }
                }
                assert!((got.matrix()[(s, t)] - acc).norm() <= 1e-12);
            }
        }
        let from_vec = sp.reduced_system_of_vector(a).unwrap();
        assert!(from_vec.max_abs_diff(got.matrix()) <= 1e-12);
        let bath = sp.partial_trace_system(&rho).unwrap();
        assert!(sp.reduced_bath_of_vector(a).unwrap().max_abs_diff(bath.matrix()) <= 1e-12);
    }

    #[test]
    fn schmidt_spectra_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sp = BipartiteSpace::new(3, 5).unwrap();
        let psi = haar_random_state(&Subspace::full(15).unwrap(), &mut rng);
        let rho = DensityMatrix::from_pure(&psi);
        let ls = hermitian_eigenvalues(sp.partial_trace_bath(&rho).unwrap().matrix()).unwrap();
        let lb = hermitian_eigenvalues(sp.partial_trace_system(&rho).unwrap().matrix()).unwrap();
        // ρ_B has d_B - d_S extra zeros at the bottom
        for (x, y) in ls.iter().rev().zip(lb.iter().rev()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(lb[..2].iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn trace_preserved_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sp = BipartiteSpace::new(2, 3).unwrap();
        let a = ComplexMatrix::new(2, 2, gaussian_vector(4, &mut rng)).unwrap();
        let b = ComplexMatrix::new(3, 3, gaussian_vector(9, &mut rng)).unwrap();
        let ab = a.kron(&b).unwrap();
        let reduced = sp.trace_out_bath(&ab).unwrap();
        assert!(reduced.max_abs_diff(&a.scale(b.trace())) < 1e-10);
        assert!((reduced.trace() - ab.trace()).norm() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let sp = BipartiteSpace::new(2, 3).unwrap();
        assert!(sp.trace_out_bath(&ComplexMatrix::identity(5)).is_err());
        assert!(sp.embed_system_operator(&ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn embedding_convention() {
        let sp = BipartiteSpace::new(2, 3).unwrap();
        let sz = ComplexMatrix::from_real_diagonal(&[1.0, -1.0]);
        let embedded = sp.embed_system_operator(&sz).unwrap();
        assert_eq!(
            embedded,
            ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
        );
        assert_eq!(
            sp.embed_system_operator(&ComplexMatrix::identity(2)).unwrap(),
            ComplexMatrix::identity(6)
        );
    }

    #[test]
    fn embedded_expectation_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let sp = BipartiteSpace::new(3, 4).unwrap();
        let a = gue_hermitian(3, &mut rng);
        let rs = random_density(3, &mut rng);
        let rb = random_density(4, &mut rng);
        let joint = rs.kron(&rb).unwrap();
        let lhs = (&sp.embed_system_operator(&a).unwrap() * &joint).trace();
        let rhs = (&a * &rs).trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn swap_small_cases() {
        assert_eq!(swap_operator(1).unwrap(), ComplexMatrix::identity(1));
        let s2 = swap_operator(2).unwrap();
        let mut expected = ComplexMatrix::identity(4);
        expected[(1, 1)] = c(0.0);
        expected[(2, 2)] = c(0.0);
        expected[(1, 2)] = c(1.0);
        expected[(2, 1)] = c(1.0);
        assert_eq!(s2, expected);
        for d in 2..=4 {
            let s = swap_operator(d).unwrap();
            assert_eq!(s.trace(), c(d as f64));
            assert_eq!(&s * &s, ComplexMatrix::identity(d * d));
            assert_eq!(s.hermitian_deviation(), 0.0);
        }
        assert!(swap_operator(65).is_err());
    }

    #[test]
    fn swap_trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = ComplexMatrix::new(4, 4, gaussian_vector(16, &mut rng)).unwrap();
        let b = ComplexMatrix::new(4, 4, gaussian_vector(16, &mut rng)).unwrap();
        let lhs = (&a * &b).trace();
        let rhs = (&a.kron(&b).unwrap() * &swap_operator(4).unwrap()).trace();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    fn random_density(d: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let g = ComplexMatrix::new(d, d, gaussian_vector(d * d, rng)).unwrap();
        let m = &g * &g.adjoint();
        let tr = m.trace().re;
        m.scale_real(1.0 / tr).hermitized()
    }
}
