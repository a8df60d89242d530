//! Hamiltonians in spectral form `H = Σ_k E_k |E_k⟩⟨E_k|`, the
//! non-degenerate-gap test, and the model families used by the experiments.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bipartite::BipartiteSpace;
use crate::error::{Error, Result};
use crate::linalg::{
    gue_hermitian, haar_random_unitary, hermitian_eigendecomposition, hermitian_eigenvalues,
    ComplexMatrix, DEFAULT_EIGEN_TOL,
};

/// Resampling cap for generators that must produce non-degenerate gaps.
pub const MAX_RESAMPLE_ATTEMPTS: usize = 100;

/// Gap tolerance relative to the spectral width.
pub const RELATIVE_GAP_TOL: f64 = 1e-9;

/// At most this many violating quadruples are stored in a [`GapReport`].
pub const MAX_REPORTED_VIOLATIONS: usize = 4096;

#[derive(Clone, Debug)]
pub struct SpectralHamiltonian {
    energies: Vec<f64>,
    eigenbasis: ComplexMatrix,
}

impl SpectralHamiltonian {
    /// Checks that the energies are finite and ascending and that the
    /// eigenbasis is unitary within 1e-10.
    pub fn new(energies: Vec<f64>, eigenbasis: ComplexMatrix) -> Result<Self> {
        let d = energies.len();
        if d == 0 {
            return Err(Error::InvalidArgument("Hamiltonian needs at least one level".into()));
        }
        if eigenbasis.rows() != d || eigenbasis.cols() != d {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian eigenbasis",
                expected: d,
                found: eigenbasis.rows(),
            });
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("energies must be finite".into()));
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("energies must be sorted ascending".into()));
        }
        let err = (&eigenbasis.adjoint() * &eigenbasis).max_abs_diff(&ComplexMatrix::identity(d));
        if err > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "eigenbasis is not unitary (max deviation {err:e})"
            )));
        }
        Ok(Self {
            energies,
            eigenbasis,
        })
    }

    /// Sorts `(energy, column)` pairs ascending before validating.
    pub fn from_unsorted(energies: Vec<f64>, eigenbasis: ComplexMatrix) -> Result<Self> {
        if eigenbasis.cols() != energies.len() {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian eigenbasis",
                expected: energies.len(),
                found: eigenbasis.cols(),
            });
        }
        let mut order: Vec<usize> = (0..energies.len()).collect();
        order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
        let sorted = order.iter().map(|&k| energies[k]).collect();
        let basis = ComplexMatrix::from_fn(eigenbasis.rows(), eigenbasis.cols(), |i, k| {
            eigenbasis[(i, order[k])]
        });
        Self::new(sorted, basis)
    }

    /// Diagonalizes a dense Hermitian matrix.
    pub fn from_dense(h: &ComplexMatrix) -> Result<Self> {
        let eig = hermitian_eigendecomposition(h, DEFAULT_EIGEN_TOL)?;
        Self::new(eig.eigenvalues, eig.eigenvectors)
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Columns are the eigenvectors `|E_k⟩`.
    pub fn eigenbasis(&self) -> &ComplexMatrix {
        &self.eigenbasis
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenbasis.column(k)
    }

    /// `U diag(E) U†`, Hermitized.
    pub fn dense(&self) -> ComplexMatrix {
        let u = &self.eigenbasis;
        let d = self.dim();
        let scaled = ComplexMatrix::from_fn(d, d, |i, k| u[(i, k)] * self.energies[k]);
        (&scaled * &u.adjoint()).hermitized()
    }

    /// `E_max - E_min`.
    pub fn spectral_width(&self) -> f64 {
        self.energies[self.dim() - 1] - self.energies[0]
    }

    /// Smallest spacing between adjacent levels; infinite for d = 1.
    pub fn min_level_spacing(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Default tolerance for [`gap_analysis`].
    pub fn default_gap_tolerance(&self) -> f64 {
        RELATIVE_GAP_TOL * self.spectral_width()
    }

    /// Runs [`gap_analysis`] at the default tolerance and errors on failure.
    pub fn require_nondegenerate_gaps(&self) -> Result<()> {
        let report = gap_analysis(self, self.default_gap_tolerance());
        if report.passes {
            Ok(())
        } else {
            Err(Error::DegenerateHamiltonian {
                violations: report.violation_count,
            })
        }
    }
}

/// Result of [`gap_analysis`].
///
/// Equal gaps `E_k - E_l = E_m - E_n` are reported as `(k, l, m, n)` with
/// `k > l`, `m > n`. A degenerate level pair `E_k = E_l` is reported as
/// `(k, l, k, k)`, i.e. the gap `E_k - E_l` equals the zero gap.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub passes: bool,
    pub min_gap_separation: f64,
    pub degenerate_pairs: Vec<(usize, usize, usize, usize)>,
    /// Total number of violations; `degenerate_pairs` is truncated at
    /// [`MAX_REPORTED_VIOLATIONS`].
    pub violation_count: usize,
    pub tolerance: f64,
}

/// Checks the non-degenerate energy gap condition: `E_k - E_l = E_m - E_n`
/// only for `k = l, m = n` or `k = m, l = n`.
///
/// Sorts the d(d-1)/2 positive gaps and compares neighbours, so the cost is
/// O(d² log d) rather than the O(d⁴) of comparing every pair of gaps.
pub fn gap_analysis(h: &SpectralHamiltonian, tol: f64) -> GapReport {
    let e = h.energies();
    let d = e.len();
    let mut violations = Vec::new();
    let mut count = 0usize;
    let mut push = |v: (usize, usize, usize, usize), violations: &mut Vec<_>| {
        count += 1;
        if violations.len() < MAX_REPORTED_VIOLATIONS {
            violations.push(v);
        }
    };

    let mut gaps: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for k in 0..d {
        for l in 0..k {
            let g = e[k] - e[l];
            if g <= tol {
                push((k, l, k, k), &mut violations);
            } else {
                gaps.push((g, k, l));
            }
        }
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut min_sep = f64::INFINITY;
    for i in 0..gaps.len() {
        if i + 1 < gaps.len() {
            min_sep = min_sep.min(gaps[i + 1].0 - gaps[i].0);
        }
        for j in (i + 1)..gaps.len() {
            if gaps[j].0 - gaps[i].0 > tol {
                break;
            }
            push((gaps[i].1, gaps[i].2, gaps[j].1, gaps[j].2), &mut violations);
        }
    }

    GapReport {
        passes: count == 0,
        min_gap_separation: min_sep,
        degenerate_pairs: violations,
        violation_count: count,
        tolerance: tol,
    }
}

/// Closed interval of energies `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub lo: f64,
    pub hi: f64,
}

impl EnergyWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "energy window [{lo}, {hi}] must be finite and nonempty"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.lo + self.width() * rng.random::<f64>()
    }
}

impl Default for EnergyWindow {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }
}

fn nondegenerate_energies<R: Rng + ?Sized>(
    d: usize,
    window: &EnergyWindow,
    rng: &mut R,
) -> Result<Vec<f64>> {
    EnergyWindow::new(window.lo, window.hi)?;
    let tol = RELATIVE_GAP_TOL * window.width();
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let energies: Vec<f64> = (0..d).map(|_| window.sample(rng)).collect();
        let mut sorted = energies.clone();
        sorted.sort_by(f64::total_cmp);
        let probe = SpectralHamiltonian {
            energies: sorted,
            eigenbasis: ComplexMatrix::identity(1),
        };
        if d < 2 || gap_analysis(&probe, tol).passes {
            return Ok(energies);
        }
    }
    Err(Error::ResampleLimit {
        attempts: MAX_RESAMPLE_ATTEMPTS,
    })
}

/// Energies i.i.d. uniform on the window, Haar-random eigenbasis.
pub fn random_spectral_hamiltonian<R: Rng + ?Sized>(
    space: &BipartiteSpace,
    window: &EnergyWindow,
    rng: &mut R,
) -> Result<SpectralHamiltonian> {
    let mut energies = nondegenerate_energies(space.dim(), window, rng)?;
    energies.sort_by(f64::total_cmp);
    let basis = haar_random_unitary(space.dim(), rng)?;
    SpectralHamiltonian::new(energies, basis)
}

/// `H_S ⊗ 1 + 1 ⊗ H_B`: energies `E^S_s + E^B_b` with product eigenvectors.
pub fn noninteracting_hamiltonian(
    h_s: &SpectralHamiltonian,
    h_b: &SpectralHamiltonian,
    space: &BipartiteSpace,
) -> Result<SpectralHamiltonian> {
    if h_s.dim() != space.d_s() || h_b.dim() != space.d_b() {
        return Err(Error::DimensionMismatch {
            context: "noninteracting Hamiltonian factors",
            expected: space.dim(),
            found: h_s.dim() * h_b.dim(),
        });
    }
    let energies: Vec<f64> = h_s
        .energies()
        .iter()
        .flat_map(|&es| h_b.energies().iter().map(move |&eb| es + eb))
        .collect();
    let basis = h_s.eigenbasis().kron(h_b.eigenbasis())?;
    SpectralHamiltonian::from_unsorted(energies, basis)
}

/// `H = Σ_nm E_nm |n⟩⟨n|_S ⊗ |m⟩⟨m|_B` with i.i.d. uniform `E_nm`.
///
/// Every eigenvector is a computational basis vector `|n⟩|m⟩`; the columns
/// of the eigenbasis are ordered by energy, so it is a permutation matrix.
pub fn diagonal_product_hamiltonian<R: Rng + ?Sized>(
    space: &BipartiteSpace,
    window: &EnergyWindow,
    rng: &mut R,
) -> Result<SpectralHamiltonian> {
    let energies = nondegenerate_energies(space.dim(), window, rng)?;
    SpectralHamiltonian::from_unsorted(energies, ComplexMatrix::identity(space.dim()))
}

/// The dominant-subsystem-energy model `E σ_z ⊗ 1 + H_int + 1 ⊗ H_B`.
#[derive(Clone, Debug)]
pub struct SpinBathModel {
    pub space: BipartiteSpace,
    pub energy: f64,
    pub hamiltonian: SpectralHamiltonian,
    /// `H_int`, spectral radius 1.
    pub interaction: ComplexMatrix,
    /// `1_S ⊗ H_B`, spectral radius 1.
    pub bath: ComplexMatrix,
}

impl SpinBathModel {
    /// `E σ_z ⊗ 1_B` on the full space.
    pub fn system_term(&self) -> ComplexMatrix {
        let sz = ComplexMatrix::from_real_diagonal(&[self.energy, -self.energy]);
        self.space.embed_system_operator(&sz).expect("dimensions fixed at construction")
    }
}

fn unit_radius_gue<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let m = gue_hermitian(dim, rng);
    let eig = hermitian_eigenvalues(&m)?;
    let radius = eig[0].abs().max(eig[dim - 1].abs());
    Ok(m.scale_real(1.0 / radius))
}

/// Builds and diagonalizes the spin-bath model; resamples the random terms
/// until the spectrum has non-degenerate gaps.
pub fn spin_bath_model<R: Rng + ?Sized>(energy: f64, d_b: usize, rng: &mut R) -> Result<SpinBathModel> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::InvalidArgument(format!("spin-bath energy must be positive, got {energy}")));
    }
    if d_b < 2 {
        return Err(Error::InvalidArgument("spin-bath model needs d_B >= 2".into()));
    }
    let space = BipartiteSpace::new(2, d_b)?;
    let sz = ComplexMatrix::from_real_diagonal(&[energy, -energy]);
    let system = space.embed_system_operator(&sz)?;
    for _ in 0..MAX_RESAMPLE_ATTEMPTS {
        let interaction = unit_radius_gue(space.dim(), rng)?;
        let bath = space.embed_bath_operator(&unit_radius_gue(d_b, rng)?)?;
        let dense = &(&system + &interaction) + &bath;
        let hamiltonian = SpectralHamiltonian::from_dense(&dense)?;
        if gap_analysis(&hamiltonian, hamiltonian.default_gap_tolerance()).passes {
            return Ok(SpinBathModel {
                space,
                energy,
                hamiltonian,
                interaction,
                bath,
            });
        }
    }
    Err(Error::ResampleLimit {
        attempts: MAX_RESAMPLE_ATTEMPTS,
    })
}

pub fn spin_bath_hamiltonian<R: Rng + ?Sized>(energy: f64, d_b: usize, rng: &mut R) -> Result<SpectralHamiltonian> {
    spin_bath_model(energy, d_b, rng).map(|m| m.hamiltonian)
}

/// JSON layout: `{d_S, d_B, energies[], eigenbasis}` with the eigenbasis
/// row-major and each entry as an adjacent `re, im` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianDocument {
    #[serde(rename = "d_S")]
    pub d_s: usize,
    #[serde(rename = "d_B")]
    pub d_b: usize,
    pub energies: Vec<f64>,
    pub eigenbasis: Vec<f64>,
}

impl HamiltonianDocument {
    pub fn from_hamiltonian(h: &SpectralHamiltonian, space: &BipartiteSpace) -> Result<Self> {
        if h.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "Hamiltonian vs space",
                expected: space.dim(),
                found: h.dim(),
            });
        }
        Ok(Self {
            d_s: space.d_s(),
            d_b: space.d_b(),
            energies: h.energies().to_vec(),
            eigenbasis: h.eigenbasis().as_slice().iter().flat_map(|z| [z.re, z.im]).collect(),
        })
    }

    pub fn into_hamiltonian(self) -> Result<(SpectralHamiltonian, BipartiteSpace)> {
        let space = BipartiteSpace::new(self.d_s, self.d_b)?;
        let d = space.dim();
        if self.eigenbasis.len() != 2 * d * d {
            return Err(Error::Format(format!(
                "eigenbasis has {} numbers, expected {}",
                self.eigenbasis.len(),
                2 * d * d
            )));
        }
        let entries = self
            .eigenbasis
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        let basis = ComplexMatrix::new(d, d, entries)?;
        Ok((SpectralHamiltonian::new(self.energies, basis)?, space))
    }
}

pub fn hamiltonian_to_json(h: &SpectralHamiltonian, space: &BipartiteSpace) -> Result<String> {
    let doc = HamiltonianDocument::from_hamiltonian(h, space)?;
    serde_json::to_string(&doc).map_err(|e| Error::Format(e.to_string()))
}

pub fn hamiltonian_from_json(text: &str) -> Result<(SpectralHamiltonian, BipartiteSpace)> {
    let doc: HamiltonianDocument = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    doc.into_hamiltonian()
}
