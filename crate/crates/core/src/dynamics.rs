//! Exact evolution in the energy eigenbasis, the dephased time average, time
//! sampled trajectory statistics and uniform sampling of the phase torus.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::bipartite::BipartiteSpace;
use crate::error::{Error, Result};
use crate::hamiltonian::SpectralHamiltonian;
use crate::linalg::ComplexMatrix;
use crate::state::{purity_of, trace_distance_of, DensityMatrix, PureState, NORM_TOL};

/// Markov thresholds used when none are given.
pub const DEFAULT_THRESHOLDS: [f64; 3] = [2.0, 5.0, 10.0];
/// `t_max = DEFAULT_T_MAX_FACTOR / (minimum level spacing)`.
pub const DEFAULT_T_MAX_FACTOR: f64 = 1e3;
pub const DEFAULT_TIME_SAMPLES: usize = 2000;
/// Samples per trajectory on which `rank(ρ_B(t)) = rank(ρ_S(t))` is checked;
/// each costs a d_B×d_B eigendecomposition.
pub const RANK_CHECK_SAMPLES: usize = 16;

/// Coefficients `c_k = ⟨E_k|ψ⟩` of a state in the Hamiltonian eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyCoefficients {
    coefficients: Vec<Complex64>,
}

impl EnergyCoefficients {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        let n2: f64 = coefficients.iter().map(|z| z.norm_sqr()).sum();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "energy coefficients are not normalized (Σ|c|² = {n2})"
            )));
        }
        Ok(Self { coefficients })
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `|c_k|²`.
    pub fn populations(&self) -> Vec<f64> {
        self.coefficients.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `1 / Σ_k |c_k|⁴`, the effective dimension of the dephased state.
    pub fn effective_dimension(&self) -> f64 {
        1.0 / self.coefficients.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>()
    }
}

fn check_dim(h: &SpectralHamiltonian, found: usize, context: &'static str) -> Result<()> {
    if h.dim() != found {
        return Err(Error::DimensionMismatch {
            context,
            expected: h.dim(),
            found,
        });
    }
    Ok(())
}

pub fn energy_coefficients(psi: &PureState, h: &SpectralHamiltonian) -> Result<EnergyCoefficients> {
    check_dim(h, psi.dim(), "state vs Hamiltonian")?;
    Ok(EnergyCoefficients {
        coefficients: h.eigenbasis().adjoint_mat_vec(psi.amplitudes()),
    })
}

/// Maps eigenbasis amplitudes back to the computational basis.
fn from_eigenbasis(h: &SpectralHamiltonian, amplitudes: &[Complex64]) -> PureState {
    PureState::from_trusted(h.eigenbasis().mat_vec(amplitudes))
}

/// `Σ_k c_k e^{-i E_k t} |E_k⟩`.
pub fn evolve_coefficients(c: &EnergyCoefficients, h: &SpectralHamiltonian, t: f64) -> Result<PureState> {
    check_dim(h, c.len(), "coefficients vs Hamiltonian")?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
    }
    let phased: Vec<Complex64> = c
        .as_slice()
        .iter()
        .zip(h.energies())
        .map(|(&ck, &e)| ck * Complex64::from_polar(1.0, -e * t))
        .collect();
    Ok(from_eigenbasis(h, &phased))
}

/// `|ψ(t)⟩ = e^{-iHt}|ψ₀⟩`, computed exactly in the eigenbasis.
pub fn evolve(psi: &PureState, h: &SpectralHamiltonian, t: f64) -> Result<PureState> {
    if t == 0.0 {
        check_dim(h, psi.dim(), "state vs Hamiltonian")?;
        return Ok(psi.clone());
    }
    evolve_coefficients(&energy_coefficients(psi, h)?, h, t)
}

/// `ω = Σ_k |c_k|² |E_k⟩⟨E_k|`, the infinite-time average of `|ψ(t)⟩⟨ψ(t)|`.
///
/// Requires non-degenerate energy gaps at the default tolerance.
pub fn dephased_time_average(psi: &PureState, h: &SpectralHamiltonian) -> Result<DensityMatrix> {
    h.require_nondegenerate_gaps()?;
    let c = energy_coefficients(psi, h)?;
    Ok(DensityMatrix::from_trusted(mix_eigenprojectors(h, &c.populations())))
}

/// `Σ_k p_k |E_k⟩⟨E_k|`.
pub fn mix_eigenprojectors(h: &SpectralHamiltonian, weights: &[f64]) -> ComplexMatrix {
    let u = h.eigenbasis();
    let d = h.dim();
    let scaled = ComplexMatrix::from_fn(d, d, |i, k| u[(i, k)] * weights[k]);
    (&scaled * &u.adjoint()).hermitized()
}

/// The dephasing map `ρ ↦ Σ_k |E_k⟩⟨E_k|ρ|E_k⟩⟨E_k|`.
pub fn dephase(rho: &ComplexMatrix, h: &SpectralHamiltonian) -> Result<ComplexMatrix> {
    check_dim(h, rho.rows(), "operator vs Hamiltonian")?;
    let u = h.eigenbasis();
    let rotated = &(&u.adjoint() * rho) * u;
    let weights: Vec<f64> = rotated.diagonal().iter().map(|z| z.re).collect();
    Ok(mix_eigenprojectors(h, &weights))
}

/// `Σ_k e^{iα_k} c_k |E_k⟩`: a point on the torus filled by the trajectory.
pub fn torus_state(c: &EnergyCoefficients, h: &SpectralHamiltonian, alpha: &[f64]) -> Result<PureState> {
    check_dim(h, c.len(), "coefficients vs Hamiltonian")?;
    if alpha.len() != c.len() {
        return Err(Error::DimensionMismatch {
            context: "phase vector",
            expected: c.len(),
            found: alpha.len(),
        });
    }
    let phased: Vec<Complex64> = c
        .as_slice()
        .iter()
        .zip(alpha)
        .map(|(&ck, &a)| ck * Complex64::from_polar(1.0, a))
        .collect();
    Ok(from_eigenbasis(h, &phased))
}

/// Per-eigenvector subsystem reductions `tr_B |E_k⟩⟨E_k|`, cached so that
/// `ω_S = Σ_k p_k tr_B |E_k⟩⟨E_k|` costs O(d·d_S²) per state.
#[derive(Clone, Debug)]
pub struct EigenstateReductions {
    space: BipartiteSpace,
    system: Vec<ComplexMatrix>,
}

impl EigenstateReductions {
    pub fn new(h: &SpectralHamiltonian, space: &BipartiteSpace) -> Result<Self> {
        check_dim(h, space.dim(), "Hamiltonian vs space")?;
        let system = (0..h.dim())
            .map(|k| space.reduced_system_of_vector(&h.eigenvector(k)))
            .collect::<Result<_>>()?;
        Ok(Self { space: *space, system })
    }

    pub fn system_state(&self, k: usize) -> &ComplexMatrix {
        &self.system[k]
    }

    /// `tr_S(tr_B|E_k⟩⟨E_k|)²` for each k.
    pub fn system_purities(&self) -> Vec<f64> {
        self.system.iter().map(purity_of).collect()
    }

    /// `Σ_k w_k tr_B |E_k⟩⟨E_k|`.
    pub fn system_average(&self, weights: &[f64]) -> ComplexMatrix {
        let ds = self.space.d_s();
        let mut out = ComplexMatrix::zeros(ds, ds);
        for (w, m) in weights.iter().zip(&self.system) {
            for s in 0..ds {
                for t in 0..ds {
                    out[(s, t)] += m[(s, t)] * *w;
                }
            }
        }
        out.hermitized()
    }
}

/// Time grid parameters for trajectory sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeSampling {
    pub t_max: f64,
    pub n_samples: usize,
}

impl TimeSampling {
    /// `t_max = factor / (minimum level spacing)`.
    pub fn from_level_spacing(h: &SpectralHamiltonian, factor: f64, n_samples: usize) -> Result<Self> {
        let gap = h.min_level_spacing();
        if !(gap.is_finite() && gap > 0.0) {
            return Err(Error::InvalidArgument(
                "time scale needs at least two distinct levels".into(),
            ));
        }
        Ok(Self {
            t_max: factor / gap,
            n_samples,
        })
    }

    /// Stratified grid on `[0, t_max]`: one uniform draw per stratum.
    pub fn times<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let width = self.t_max / self.n_samples as f64;
        (0..self.n_samples)
            .map(|j| (j as f64 + rng.random::<f64>()) * width)
            .collect()
    }
}

/// Fluctuations of `D(ρ_S(t), ω_S)` over a time grid.
#[derive(Clone, Debug)]
pub struct TrajectoryStats {
    pub mean_distance: f64,
    pub max_distance: f64,
    /// `(K, fraction of samples with D > K·mean)`.
    pub exceed_fraction: Vec<(f64, f64)>,
    pub sample_count: usize,
    pub t_max: f64,
    /// Individual sampled distances, in time order.
    pub distances: Vec<f64>,
    /// Largest `d_eff(ρ_B(t))` over the samples.
    pub max_bath_effective_dimension: f64,
    /// Largest `|rank(ρ_B(t)) − rank(ρ_S(t))|` over evenly spaced samples.
    pub max_rank_mismatch: usize,
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn summarize(distances: Vec<f64>, thresholds: &[f64], t_max: f64) -> TrajectoryStats {
    let n = distances.len();
    let mean = compensated_sum(distances.iter().copied()) / n as f64;
    let max = distances.iter().copied().fold(0.0, f64::max);
    let exceed_fraction = thresholds
        .iter()
        .map(|&k| {
            let count = distances.iter().filter(|&&x| x > k * mean).count();
            (k, count as f64 / n as f64)
        })
        .collect();
    TrajectoryStats {
        mean_distance: mean,
        max_distance: max,
        exceed_fraction,
        sample_count: n,
        t_max,
        distances,
        max_bath_effective_dimension: 0.0,
        max_rank_mismatch: 0,
    }
}

/// Samples `D(ρ_S(t), ω_S)` on a stratified grid and aggregates it.
pub fn trajectory_statistics<R: Rng + ?Sized>(
    psi: &PureState,
    h: &SpectralHamiltonian,
    space: &BipartiteSpace,
    sampling: TimeSampling,
    thresholds: &[f64],
    rng: &mut R,
) -> Result<TrajectoryStats> {
    if sampling.n_samples < 2 {
        return Err(Error::InvalidArgument("need at least two time samples".into()));
    }
    if !(sampling.t_max.is_finite() && sampling.t_max > 0.0) {
        return Err(Error::InvalidArgument("t_max must be positive and finite".into()));
    }
    check_dim(h, space.dim(), "Hamiltonian vs space")?;
    h.require_nondegenerate_gaps()?;
    let c = energy_coefficients(psi, h)?;
    let reductions = EigenstateReductions::new(h, space)?;
    let omega_s = reductions.system_average(&c.populations());

    let mut distances = Vec::with_capacity(sampling.n_samples);
    let mut max_bath_deff = 0.0_f64;
    let mut max_rank_mismatch = 0usize;
    let rank_stride = sampling.n_samples.div_ceil(RANK_CHECK_SAMPLES);
    for (j, t) in sampling.times(rng).into_iter().enumerate() {
        let psi_t = evolve_coefficients(&c, h, t)?;
        let rho_s = space.reduced_system_of_vector(psi_t.amplitudes())?;
        distances.push(trace_distance_of(&rho_s, &omega_s)?);
        let rho_b = space.reduced_bath_of_vector(psi_t.amplitudes())?;
        max_bath_deff = max_bath_deff.max(1.0 / purity_of(&rho_b));
        if j % rank_stride == 0 {
            let rank_s = DensityMatrix::from_trusted(rho_s).rank()?;
            let rank_b = DensityMatrix::from_trusted(rho_b).rank()?;
            max_rank_mismatch = max_rank_mismatch.max(rank_s.abs_diff(rank_b));
        }
    }
    let mut stats = summarize(distances, thresholds, sampling.t_max);
    stats.max_bath_effective_dimension = max_bath_deff;
    stats.max_rank_mismatch = max_rank_mismatch;
    Ok(stats)
}

/// `D(ρ_S(α), ω_S)` at `n` uniformly random points of the phase torus.
pub fn torus_distances<R: Rng + ?Sized>(
    c: &EnergyCoefficients,
    h: &SpectralHamiltonian,
    space: &BipartiteSpace,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dim(h, space.dim(), "Hamiltonian vs space")?;
    let reductions = EigenstateReductions::new(h, space)?;
    let omega_s = reductions.system_average(&c.populations());
    let mut alpha = vec![0.0; c.len()];
    (0..n)
        .map(|_| {
            for a in alpha.iter_mut() {
                *a = TAU * rng.random::<f64>();
            }
            let psi = torus_state(c, h, &alpha)?;
            let rho_s = space.reduced_system_of_vector(psi.amplitudes())?;
            trace_distance_of(&rho_s, &omega_s)
        })
        .collect()
}
