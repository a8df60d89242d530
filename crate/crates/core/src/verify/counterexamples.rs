//! Hamiltonians for which the subsystem equilibrium state does depend on the
//! initial subsystem state.

use rand::Rng;

use super::BoundCheck;
use crate::bipartite::BipartiteSpace;
use crate::dynamics::{dephased_time_average, energy_coefficients, evolve_coefficients, TimeSampling, DEFAULT_T_MAX_FACTOR};
use crate::error::{Error, Result};
use crate::hamiltonian::{diagonal_product_hamiltonian, spin_bath_model, EnergyWindow, SpectralHamiltonian};
use crate::linalg::{inner, ComplexMatrix};
use crate::state::{haar_random_state, product_state, trace_distance_of, PureState, Subspace};

/// `H_int` and `H_B` each shift `⟨H⟩` by at most 2 between two states.
pub const SPIN_BATH_SLACK: f64 = 4.0;
const POPULATION_TOL: f64 = 1e-10;
const DISTANCE_TOL: f64 = 1e-9;

fn sample_times<R: Rng + ?Sized>(h: &SpectralHamiltonian, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sampled time".into()));
    }
    let t_max = TimeSampling::from_level_spacing(h, DEFAULT_T_MAX_FACTOR, n)?.t_max;
    Ok((0..n).map(|_| t_max * rng.random::<f64>()).collect())
}

fn fixed_bath_pair<R: Rng + ?Sized>(space: &BipartiteSpace, rng: &mut R) -> Result<(PureState, PureState)> {
    let phi = haar_random_state(&Subspace::full(space.d_b())?, rng);
    let up = product_state(&PureState::basis(space.d_s(), 0)?, &phi, space)?;
    let down = product_state(&PureState::basis(space.d_s(), 1)?, &phi, space)?;
    Ok((up, down))
}

#[derive(Clone, Debug)]
pub struct DiagonalReport {
    /// Largest change of any `⟨n|ρ_S(t)|n⟩` over the sampled times.
    pub population_drift: f64,
    /// `D(ω_S⁰, ω_S¹)` for initial states `|0⟩⊗φ` and `|1⟩⊗φ`.
    pub omega_distance: f64,
    /// Half the l¹ distance between the two initial population vectors.
    pub half_imbalance: f64,
    pub checks: Vec<BoundCheck>,
}

/// Diagonal product Hamiltonian: subsystem populations never change, so the
/// equilibrium state remembers them.
pub fn diagonal_counterexample<R: Rng + ?Sized>(
    space: &BipartiteSpace,
    window: &EnergyWindow,
    n_times: usize,
    rng: &mut R,
) -> Result<DiagonalReport> {
    if space.d_s() < 2 {
        return Err(Error::InvalidArgument("diagonal counterexample needs d_S >= 2".into()));
    }
    let h = diagonal_product_hamiltonian(space, window, rng)?;
    let (a, b) = fixed_bath_pair(space, rng)?;
    let times = sample_times(&h, n_times, rng)?;

    let populations = |psi: &PureState| -> Result<Vec<f64>> {
        let rho = space.reduced_system_of_vector(psi.amplitudes())?;
        Ok(rho.diagonal().iter().map(|z| z.re).collect())
    };
    let mut drift = 0.0_f64;
    let mut omegas = Vec::with_capacity(2);
    let mut initial = Vec::with_capacity(2);
    for psi in [&a, &b] {
        let p0 = populations(psi)?;
        let c = energy_coefficients(psi, &h)?;
        for &t in &times {
            let pt = populations(&evolve_coefficients(&c, &h, t)?)?;
            for (x, y) in p0.iter().zip(&pt) {
                drift = drift.max((x - y).abs());
            }
        }
        omegas.push(space.trace_out_bath(dephased_time_average(psi, &h)?.matrix())?);
        initial.push(p0);
    }
    let omega_distance = trace_distance_of(&omegas[0], &omegas[1])?;
    let half_imbalance = 0.5 * initial[0].iter().zip(&initial[1]).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let checks = vec![
        BoundCheck::upper("cx.diagonal.population_drift", drift, POPULATION_TOL).with("times", n_times),
        BoundCheck::lower("cx.diagonal.omega_distance", omega_distance, half_imbalance - DISTANCE_TOL),
    ];
    Ok(DiagonalReport {
        population_drift: drift,
        omega_distance,
        half_imbalance,
        checks,
    })
}

#[derive(Clone, Debug)]
pub struct SpinBathReport {
    pub energy: f64,
    /// Extremes over sampled times of `⟨H⟩_↑ − ⟨H⟩_↓`.
    pub min_difference: f64,
    pub max_difference: f64,
    /// `D(ω_S^↑, ω_S^↓)`.
    pub omega_distance: f64,
    /// Energy-window checks; informational when `E ≤ 4`.
    pub checks: Vec<BoundCheck>,
}

/// Spin-bath model `Eσ_z⊗1 + H_int + 1⊗H_B` started in `|↑⟩⊗φ` and `|↓⟩⊗φ`.
pub fn spin_bath_counterexample<R: Rng + ?Sized>(
    energy: f64,
    d_b: usize,
    n_times: usize,
    rng: &mut R,
) -> Result<SpinBathReport> {
    let model = spin_bath_model(energy, d_b, rng)?;
    let h = &model.hamiltonian;
    let dense = h.dense();
    let (up, down) = fixed_bath_pair(&model.space, rng)?;
    let times = sample_times(h, n_times, rng)?;
    let (cu, cd) = (energy_coefficients(&up, h)?, energy_coefficients(&down, h)?);
    let expect = |psi: &PureState| inner(psi.amplitudes(), &dense.mat_vec(psi.amplitudes())).re;

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &t in &times {
        let diff = expect(&evolve_coefficients(&cu, h, t)?) - expect(&evolve_coefficients(&cd, h, t)?);
        lo = lo.min(diff);
        hi = hi.max(diff);
    }
    let omega = |psi: &PureState| -> Result<ComplexMatrix> {
        model.space.trace_out_bath(dephased_time_average(psi, h)?.matrix())
    };
    let omega_distance = trace_distance_of(&omega(&up)?, &omega(&down)?)?;

    // below the slack the system term no longer dominates; report as a control
    let separated = energy > SPIN_BATH_SLACK;
    let prefix = if separated { "cx.spin_bath" } else { "cx.spin_bath_control" };
    let mut checks = vec![
        BoundCheck::lower(format!("{prefix}.energy_difference_min"), lo, 2.0 * energy - SPIN_BATH_SLACK),
        BoundCheck::upper(format!("{prefix}.energy_difference_max"), hi, 2.0 * energy + SPIN_BATH_SLACK),
    ];
    if !separated {
        checks = checks.into_iter().map(|c| c.informational()).collect();
    }
    Ok(SpinBathReport {
        energy,
        min_difference: lo,
        max_difference: hi,
        omega_distance,
        checks,
    })
}
