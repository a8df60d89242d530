use rand::Rng;
use rayon::prelude::*;

use super::identities::{subadditivity_checks_from, SubadditivityInputs};
use super::stats::mean_and_standard_error;
use super::{BoundCheck, ConstantsTable};
use crate::bipartite::BipartiteSpace;
use crate::dynamics::{
    dephased_time_average, energy_coefficients, mix_eigenprojectors, torus_distances, trajectory_statistics,
    EigenstateReductions, EnergyCoefficients, TimeSampling, TrajectoryStats,
};
use crate::error::{Error, Result};
use crate::hamiltonian::SpectralHamiltonian;
use crate::linalg::ComplexMatrix;
use crate::seed::TrialStreams;
use crate::state::{haar_random_state, purity_of, trace_distance_of, PureState, Subspace};

/// Minimum trial count for the Haar-average statistics.
pub const MIN_STAT_TRIALS: usize = 30;
/// Minimum number of torus samples.
pub const MIN_TORUS_SAMPLES: usize = 1000;
/// Expectation bounds are compared with the sample mean plus this many
/// standard errors.
pub const STANDARD_ERROR_ALLOWANCE: f64 = 3.0;
/// Slack on the empirical Markov fractions.
pub const MARKOV_SLACK: f64 = 0.02;

#[derive(Clone, Debug)]
pub struct Theorem1Report {
    /// Mean distance against `½√(d_S/d_eff(ω_B))`.
    pub bath_bound: BoundCheck,
    /// Mean distance against `½√(d_S²/d_eff(ω))`.
    pub total_bound: BoundCheck,
    /// The bath bound never exceeds the total bound.
    pub chain: BoundCheck,
    /// `Pr_t{D > K⟨D⟩} ≤ 1/K`, one check per threshold.
    pub markov: Vec<BoundCheck>,
    pub subadditivity: Vec<BoundCheck>,
    pub deff_omega: f64,
    pub deff_omega_bath: f64,
    pub trajectory: TrajectoryStats,
}

impl Theorem1Report {
    pub fn all_checks(&self) -> impl Iterator<Item = &BoundCheck> {
        [&self.bath_bound, &self.total_bound, &self.chain]
            .into_iter()
            .chain(&self.markov)
            .chain(&self.subadditivity)
    }

    /// All guaranteed checks hold.
    pub fn satisfied(&self) -> bool {
        self.all_checks().all(|c| !c.is_failure())
    }
}

fn check_trials(trials: usize, min: usize, what: &str) -> Result<()> {
    if trials < min {
        return Err(Error::InvalidArgument(format!("{what} needs at least {min} trials, got {trials}")));
    }
    Ok(())
}

fn check_space(h: &SpectralHamiltonian, space: &BipartiteSpace) -> Result<()> {
    if h.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian vs space",
            expected: space.dim(),
            found: h.dim(),
        });
    }
    Ok(())
}

fn check_subspace(h: &SpectralHamiltonian, subspace: &Subspace) -> Result<()> {
    if h.dim() != subspace.ambient_dim() {
        return Err(Error::DimensionMismatch {
            context: "Hamiltonian vs subspace",
            expected: subspace.ambient_dim(),
            found: h.dim(),
        });
    }
    Ok(())
}

/// Time-sampled mean distance of the subsystem from `ω_S` against both
/// equilibration bounds, plus the Markov and subadditivity checks on the same
/// trajectory.
pub fn theorem1_check<R: Rng + ?Sized>(
    psi: &PureState,
    h: &SpectralHamiltonian,
    space: &BipartiteSpace,
    sampling: TimeSampling,
    thresholds: &[f64],
    rng: &mut R,
) -> Result<Theorem1Report> {
    check_space(h, space)?;
    let omega = dephased_time_average(psi, h)?;
    let omega_b = space.trace_out_system(omega.matrix())?;
    let deff_omega = omega.effective_dimension();
    let deff_omega_bath = 1.0 / purity_of(&omega_b);
    let trajectory = trajectory_statistics(psi, h, space, sampling, thresholds, rng)?;

    let ds = space.d_s() as f64;
    let bath = 0.5 * (ds / deff_omega_bath).sqrt();
    let total = 0.5 * (ds * ds / deff_omega).sqrt();
    let mean = trajectory.mean_distance;
    let bath_bound = BoundCheck::upper("thm1.bath_bound", mean, bath)
        .with("d_eff_omega_B", deff_omega_bath)
        .with("samples", trajectory.sample_count);
    let total_bound = BoundCheck::upper("thm1.total_bound", mean, total).with("d_eff_omega", deff_omega);
    let chain = BoundCheck::upper("thm1.bound_chain", bath, total * (1.0 + 1e-12));
    let markov = trajectory
        .exceed_fraction
        .iter()
        .map(|&(k, f)| BoundCheck::upper(format!("thm1.markov_k{k}"), f, 1.0 / k + MARKOV_SLACK))
        .collect();
    let subadditivity = subadditivity_checks_from(&SubadditivityInputs {
        omega: omega.matrix(),
        omega_bath: &omega_b,
        d_s: space.d_s(),
        max_bath_effective_dimension: trajectory.max_bath_effective_dimension,
        max_rank_mismatch: trajectory.max_rank_mismatch,
        restricted_bath_dim: None,
    });
    Ok(Theorem1Report {
        bath_bound,
        total_bound,
        chain,
        markov,
        subadditivity,
        deff_omega,
        deff_omega_bath,
        trajectory,
    })
}

#[derive(Clone, Debug)]
pub struct Theorem2Summary {
    pub d_r: usize,
    /// `d_eff(ω)` per trial, in trial order.
    pub samples: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mean: f64,
    pub standard_error: f64,
    /// Fraction of trials with `d_eff(ω) < d_R/4`.
    pub tail_frequency: f64,
    /// Mean against `d_R/2 − 3·SE`.
    pub mean_check: BoundCheck,
    /// Tail frequency against `2 exp(−c√d_R)`.
    pub tail_check: BoundCheck,
}

/// Haar states in `subspace`, `d_eff(ω) = 1/Σ|c_k|⁴` per trial.
pub fn theorem2_statistics(
    subspace: &Subspace,
    h: &SpectralHamiltonian,
    trials: usize,
    streams: &TrialStreams,
) -> Result<Theorem2Summary> {
    check_trials(trials, MIN_STAT_TRIALS, "theorem 2 statistics")?;
    check_subspace(h, subspace)?;
    let pairs: Vec<(u64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(i);
            let psi = haar_random_state(subspace, &mut rng);
            Ok((streams.seed(i), energy_coefficients(&psi, h)?.effective_dimension()))
        })
        .collect::<Result<_>>()?;
    let (seeds, samples): (Vec<u64>, Vec<f64>) = pairs.into_iter().unzip();

    let d_r = subspace.dim();
    let dr = d_r as f64;
    let (mean, se) = mean_and_standard_error(&samples);
    let tail_frequency = samples.iter().filter(|&&x| x < dr / 4.0).count() as f64 / trials as f64;
    let mean_check = BoundCheck::lower("thm2.mean_d_eff", mean, dr / 2.0 - STANDARD_ERROR_ALLOWANCE * se)
        .with("expectation_bound", dr / 2.0)
        .with("standard_error", se)
        .with("trials", trials);
    let tail_bound = 2.0 * (-ConstantsTable::new().c * dr.sqrt()).exp();
    let tail_check = BoundCheck::tail("thm2.tail_frequency", tail_frequency, tail_bound)
        .with("threshold", dr / 4.0)
        .with("trials", trials);
    Ok(Theorem2Summary {
        d_r,
        samples,
        seeds,
        mean,
        standard_error: se,
        tail_frequency,
        mean_check,
        tail_check,
    })
}

/// `δ = Σ_k ⟨E_k|Π_R/d_R|E_k⟩ · tr(ρ_{S,k}²)` with `ρ_{S,k} = tr_B|E_k⟩⟨E_k|`.
pub fn delta_quantity(h: &SpectralHamiltonian, subspace: &Subspace, space: &BipartiteSpace) -> Result<f64> {
    check_space(h, space)?;
    check_subspace(h, subspace)?;
    let reductions = EigenstateReductions::new(h, space)?;
    let dr = subspace.dim() as f64;
    Ok((0..h.dim())
        .map(|k| subspace.projector_weight(&h.eigenvector(k)) / dr * purity_of(reductions.system_state(k)))
        .sum())
}

#[derive(Clone, Debug)]
pub struct Theorem3Summary {
    pub d_r: usize,
    pub delta: f64,
    /// `D(ω_S^Ψ, Ω_S)` per trial.
    pub distances: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Sample mean of `ω_S^Ψ`, standing in for the Haar average `Ω_S`.
    pub omega_s_estimate: ComplexMatrix,
    pub mean_distance: f64,
    pub standard_error: f64,
    pub epsilon: f64,
    pub tail_threshold: f64,
    pub tail_frequency: f64,
    /// Mean against `√(d_S δ/(4d_R)) + 3·SE`.
    pub delta_check: BoundCheck,
    /// Mean against `√(d_S/(4d_R)) + 3·SE`.
    pub weak_check: BoundCheck,
    /// Frequency of `D > ½√(d_S δ/d_R) + ε` against `2 exp(−c′ε²d_R)`.
    pub tail_check: BoundCheck,
}

/// Spread of the subsystem equilibrium state `tr_B ω` over Haar-random
/// initial states in `subspace`.
pub fn theorem3_statistics(
    subspace: &Subspace,
    h: &SpectralHamiltonian,
    space: &BipartiteSpace,
    trials: usize,
    streams: &TrialStreams,
) -> Result<Theorem3Summary> {
    check_trials(trials, MIN_STAT_TRIALS, "theorem 3 statistics")?;
    check_space(h, space)?;
    check_subspace(h, subspace)?;
    h.require_nondegenerate_gaps()?;
    let reductions = EigenstateReductions::new(h, space)?;
    let delta = delta_quantity(h, subspace, space)?;

    let per_trial: Vec<(u64, ComplexMatrix)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.rng(i);
            let psi = haar_random_state(subspace, &mut rng);
            let c = energy_coefficients(&psi, h)?;
            Ok((streams.seed(i), reductions.system_average(&c.populations())))
        })
        .collect::<Result<_>>()?;

    let ds = space.d_s();
    let mut omega_s = ComplexMatrix::zeros(ds, ds);
    for (_, w) in &per_trial {
        omega_s = &omega_s + w;
    }
    let omega_s = omega_s.scale_real(1.0 / trials as f64).hermitized();
    let seeds = per_trial.iter().map(|(s, _)| *s).collect();
    let distances = per_trial
        .iter()
        .map(|(_, w)| trace_distance_of(w, &omega_s))
        .collect::<Result<Vec<_>>>()?;

    let (mean, se) = mean_and_standard_error(&distances);
    let (dsf, dr) = (ds as f64, subspace.dim() as f64);
    let allowance = STANDARD_ERROR_ALLOWANCE * se;
    let delta_bound = (dsf * delta / (4.0 * dr)).sqrt();
    let weak_bound = (dsf / (4.0 * dr)).sqrt();
    let label = |c: BoundCheck, b: f64| {
        c.with("expectation_bound", b)
            .with("standard_error", se)
            .with("omega_s_estimate", "sample mean over the same trials")
            .with("trials", trials)
    };
    let delta_check = label(
        BoundCheck::upper("thm3.mean_distance_delta_bound", mean, delta_bound + allowance),
        delta_bound,
    )
    .with("delta", delta);
    let weak_check = label(
        BoundCheck::upper("thm3.mean_distance_weak_bound", mean, weak_bound + allowance),
        weak_bound,
    );

    let epsilon = dr.powf(-1.0 / 3.0);
    let tail_threshold = 0.5 * (dsf * delta / dr).sqrt() + epsilon;
    let tail_frequency = distances.iter().filter(|&&x| x > tail_threshold).count() as f64 / trials as f64;
    let tail_bound = 2.0 * (-ConstantsTable::new().c_prime * epsilon * epsilon * dr).exp();
    let tail_check = BoundCheck::tail("thm3.tail_frequency", tail_frequency, tail_bound)
        .with("epsilon", epsilon)
        .with("threshold", tail_threshold);

    Ok(Theorem3Summary {
        d_r: subspace.dim(),
        delta,
        distances,
        seeds,
        omega_s_estimate: omega_s,
        mean_distance: mean,
        standard_error: se,
        epsilon,
        tail_threshold,
        tail_frequency,
        delta_check,
        weak_check,
        tail_check,
    })
}

#[derive(Clone, Debug)]
pub struct Theorem4Report {
    pub check: BoundCheck,
    /// `√(d_S/d_eff(ω_B)) + ε`.
    pub threshold: f64,
    pub deff_omega: f64,
    pub deff_omega_bath: f64,
    /// Sampled `D(ρ_S(α), ω_S)`.
    pub distances: Vec<f64>,
}

/// Uniform torus sampling of `D(ρ_S(α), ω_S)` against
/// `exp(−c″ε⁴ d_eff(ω))`. Assumes rationally independent energies.
pub fn theorem4_report<R: Rng + ?Sized>(
    c: &EnergyCoefficients,
    h: &SpectralHamiltonian,
    space: &BipartiteSpace,
    epsilon: f64,
    samples: usize,
    rng: &mut R,
) -> Result<Theorem4Report> {
    if samples < MIN_TORUS_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "torus tail needs at least {MIN_TORUS_SAMPLES} samples, got {samples}"
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    check_space(h, space)?;
    let omega = mix_eigenprojectors(h, &c.populations());
    let omega_b = space.trace_out_system(&omega)?;
    let deff_omega = c.effective_dimension();
    let deff_omega_bath = 1.0 / purity_of(&omega_b);
    let threshold = (space.d_s() as f64 / deff_omega_bath).sqrt() + epsilon;
    let distances = torus_distances(c, h, space, samples, rng)?;
    let frequency = distances.iter().filter(|&&x| x > threshold).count() as f64 / samples as f64;
    let bound = (-ConstantsTable::new().c_double_prime * epsilon.powi(4) * deff_omega).exp();
    let check = BoundCheck::tail("thm4.tail_frequency", frequency, bound)
        .with("epsilon", epsilon)
        .with("threshold", threshold)
        .with("samples", samples)
        .with("assumption", "rationally independent energies");
    Ok(Theorem4Report {
        check,
        threshold,
        deff_omega,
        deff_omega_bath,
        distances,
    })
}

pub fn theorem4_tail<R: Rng + ?Sized>(
    c: &EnergyCoefficients,
    h: &SpectralHamiltonian,
    space: &BipartiteSpace,
    epsilon: f64,
    samples: usize,
    rng: &mut R,
) -> Result<BoundCheck> {
    theorem4_report(c, h, space, epsilon, samples, rng).map(|r| r.check)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::dynamics::DEFAULT_THRESHOLDS;
    use crate::hamiltonian::{diagonal_product_hamiltonian, random_spectral_hamiltonian, EnergyWindow};

    fn random_h(d_s: usize, d_b: usize, seed: u64) -> (BipartiteSpace, SpectralHamiltonian, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = BipartiteSpace::new(d_s, d_b).unwrap();
        let h = random_spectral_hamiltonian(&space, &EnergyWindow::default(), &mut rng).unwrap();
        (space, h, rng)
    }

    #[test]
    fn theorem1_eigenstate_is_trivial() {
        let (space, h, mut rng) = random_h(2, 4, 1);
        let e = PureState::normalized(h.eigenvector(2)).unwrap();
        let sampling = TimeSampling::from_level_spacing(&h, 1e3, 100).unwrap();
        let r = theorem1_check(&e, &h, &space, sampling, &DEFAULT_THRESHOLDS, &mut rng).unwrap();
        assert!(r.bath_bound.empirical < 1e-10);
        assert!(r.satisfied());
    }

    #[test]
    fn theorem1_random_state_satisfies_both_bounds() {
        let (space, h, mut rng) = random_h(2, 32, 2);
        let psi = haar_random_state(&Subspace::full(64).unwrap(), &mut rng);
        let sampling = TimeSampling::from_level_spacing(&h, 1e3, 2000).unwrap();
        let r = theorem1_check(&psi, &h, &space, sampling, &DEFAULT_THRESHOLDS, &mut rng).unwrap();
        assert!(r.bath_bound.satisfied && r.total_bound.satisfied);
        assert!(r.bath_bound.bound <= r.total_bound.bound);
        assert!(r.satisfied(), "{:?}", r.all_checks().filter(|c| c.is_failure()).collect::<Vec<_>>());
    }

    #[test]
    fn theorem1_rejects_degenerate_hamiltonian() {
        let space = BipartiteSpace::new(1, 3).unwrap();
        let h = SpectralHamiltonian::new(vec![0.0, 1.0, 2.0], ComplexMatrix::identity(3)).unwrap();
        let psi = PureState::basis(3, 0).unwrap();
        let sampling = TimeSampling { t_max: 10.0, n_samples: 10 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            theorem1_check(&psi, &h, &space, sampling, &[], &mut rng),
            Err(Error::DegenerateHamiltonian { .. })
        ));
    }

    #[test]
    fn theorem2_one_dimensional_subspace() {
        let (space, h, _) = random_h(2, 4, 3);
        let e0 = PureState::normalized(h.eigenvector(0)).unwrap();
        let sub = Subspace::new(ComplexMatrix::from_columns(&[e0.amplitudes().to_vec()]).unwrap()).unwrap();
        let s = theorem2_statistics(&sub, &h, 30, &TrialStreams::new(1, 0)).unwrap();
        assert!(s.samples.iter().all(|&x| (x - 1.0).abs() < 1e-10));
        assert!(s.mean_check.satisfied);
        assert_eq!(space.dim(), 8);
        assert!(theorem2_statistics(&sub, &h, 29, &TrialStreams::new(1, 0)).is_err());
    }

    #[test]
    fn theorem2_is_reproducible() {
        let (_, h, _) = random_h(2, 8, 4);
        let full = Subspace::full(16).unwrap();
        let a = theorem2_statistics(&full, &h, 40, &TrialStreams::new(9, 2)).unwrap();
        let b = theorem2_statistics(&full, &h, 40, &TrialStreams::new(9, 2)).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert!(a.mean_check.satisfied);
    }

    #[test]
    fn delta_for_product_and_haar_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let space = BipartiteSpace::new(2, 8).unwrap();
        let diag = diagonal_product_hamiltonian(&space, &EnergyWindow::default(), &mut rng).unwrap();
        let full = Subspace::full(16).unwrap();
        assert!((delta_quantity(&diag, &full, &space).unwrap() - 1.0).abs() < 1e-10);

        let (space, h, _) = random_h(2, 32, 6);
        let d = delta_quantity(&h, &Subspace::full(64).unwrap(), &space).unwrap();
        // mean reduced purity of a Haar state: (d_S + d_B)/(d_S d_B + 1)
        let oracle = 34.0 / 65.0;
        assert!((0.5..=1.0).contains(&d));
        assert!((d - oracle).abs() < 0.02, "δ = {d}");
    }

    #[test]
    fn theorem3_one_dimensional_subspace_has_zero_spread() {
        let (space, h, _) = random_h(2, 4, 7);
        let v: Vec<Complex64> = (0..8).map(|i| Complex64::new(if i == 3 { 1.0 } else { 0.0 }, 0.0)).collect();
        let sub = Subspace::new(ComplexMatrix::from_columns(&[v]).unwrap()).unwrap();
        let s = theorem3_statistics(&sub, &h, &space, 30, &TrialStreams::new(2, 0)).unwrap();
        assert!(s.mean_distance < 1e-12);
    }

    #[test]
    fn theorem3_bath_independence() {
        let (space, h, mut rng) = random_h(2, 32, 8);
        let psi_s = haar_random_state(&Subspace::full(2).unwrap(), &mut rng);
        let sub = Subspace::product_fixed_system(&psi_s, &space).unwrap();
        let s = theorem3_statistics(&sub, &h, &space, 60, &TrialStreams::new(3, 0)).unwrap();
        assert!(s.weak_check.satisfied && s.delta_check.satisfied);
        assert!(s.mean_distance <= 0.125);
        assert!((s.omega_s_estimate.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theorem3_subsystem_independence_weak_bound_is_useless() {
        let (space, h, mut rng) = random_h(2, 16, 9);
        let phi = haar_random_state(&Subspace::full(16).unwrap(), &mut rng);
        let sub = Subspace::product_fixed_bath(&phi, &space).unwrap();
        let s = theorem3_statistics(&sub, &h, &space, 40, &TrialStreams::new(4, 0)).unwrap();
        assert_eq!(s.d_r, 2);
        assert!((s.weak_check.metadata["expectation_bound"].parse::<f64>().unwrap() - 0.5).abs() < 1e-15);
        assert!(s.delta_check.bound <= s.weak_check.bound);
        assert!(s.delta_check.satisfied);
    }

    #[test]
    fn theorem4_single_eigenstate() {
        let (space, h, mut rng) = random_h(2, 4, 10);
        let c = energy_coefficients(&PureState::normalized(h.eigenvector(4)).unwrap(), &h).unwrap();
        let r = theorem4_report(&c, &h, &space, 0.2, 1000, &mut rng).unwrap();
        assert!(r.distances.iter().all(|&x| x < 1e-12));
        assert_eq!(r.check.empirical, 0.0);
        assert!(theorem4_tail(&c, &h, &space, 0.2, 999, &mut rng).is_err());
    }

    #[test]
    fn theorem4_random_state() {
        let (space, h, mut rng) = random_h(2, 32, 11);
        let psi = haar_random_state(&Subspace::full(64).unwrap(), &mut rng);
        let c = energy_coefficients(&psi, &h).unwrap();
        let check = theorem4_tail(&c, &h, &space, 0.2, 5000, &mut rng).unwrap();
        assert!(check.satisfied);
        assert!(!check.guaranteed);
    }
}
