use rand::Rng;

use super::BoundCheck;
use crate::bipartite::{swap_operator, BipartiteSpace};
use crate::dynamics::{dephased_time_average, trajectory_statistics, TimeSampling};
use crate::error::{Error, Result};
use crate::hamiltonian::SpectralHamiltonian;
use crate::limits;
use crate::linalg::ComplexMatrix;
use crate::state::{haar_random_state, purity_of, PureState, Subspace};

/// Minimum trial count for the pair-moment estimate.
pub const MIN_MOMENT_TRIALS: usize = 1000;
/// Allowance on `d_eff(ρ_B(t)) ≤ d_S`.
const BATH_DEFF_SLACK: f64 = 1e-6;
/// Rounding allowance on the exact purity inequalities.
const PURITY_SLACK: f64 = 1e-12;

/// `|tr(AB) − tr((A⊗B)S)|`.
pub fn swap_trace_identity_check(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() || a.rows() != b.rows() || b.rows() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "SWAP trace identity operands",
            expected: a.rows(),
            found: if a.is_square() { b.rows() } else { a.cols() },
        });
    }
    let lhs = (a * b).trace();
    let rhs = (&a.kron(b)? * &swap_operator(a.rows())?).trace();
    Ok((lhs - rhs).norm())
}

fn check_moment_dims(subspace: &Subspace) -> Result<usize> {
    let d = subspace.ambient_dim();
    let d2 = limits::checked_product(d, d)?;
    Ok(d2)
}

/// `Π_RR(1 + S)/(d_R(d_R+1))` on the doubled ambient space.
pub fn haar_pair_moment_closed_form(subspace: &Subspace) -> Result<ComplexMatrix> {
    check_moment_dims(subspace)?;
    let p = subspace.projector();
    let pp = p.kron(&p)?;
    let s = swap_operator(subspace.ambient_dim())?;
    let dr = subspace.dim() as f64;
    Ok((&pp + &(&pp * &s)).scale_real(1.0 / (dr * (dr + 1.0))))
}

/// Monte Carlo estimate of `⟨|Ψ⟩⟨Ψ|⊗|Ψ⟩⟨Ψ|⟩` over Haar states in `subspace`.
pub fn haar_pair_moment<R: Rng + ?Sized>(subspace: &Subspace, trials: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let d2 = check_moment_dims(subspace)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("pair moment needs at least one trial".into()));
    }
    let d = subspace.ambient_dim();
    let mut acc = ComplexMatrix::zeros(d2, d2);
    let mut v = vec![Default::default(); d2];
    for _ in 0..trials {
        let psi = haar_random_state(subspace, rng);
        let a = psi.amplitudes();
        for i in 0..d {
            for j in 0..d {
                v[i * d + j] = a[i] * a[j];
            }
        }
        for r in 0..d2 {
            let vr = v[r];
            for c in 0..d2 {
                acc[(r, c)] += vr * v[c].conj();
            }
        }
    }
    Ok(acc.scale_real(1.0 / trials as f64))
}

/// Max entrywise deviation of the Monte Carlo pair moment from its closed
/// form.
pub fn haar_pair_moment_check<R: Rng + ?Sized>(subspace: &Subspace, trials: usize, rng: &mut R) -> Result<f64> {
    if trials < MIN_MOMENT_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "pair moment check needs at least {MIN_MOMENT_TRIALS} trials, got {trials}"
        )));
    }
    let exact = haar_pair_moment_closed_form(subspace)?;
    Ok(haar_pair_moment(subspace, trials, rng)?.max_abs_diff(&exact))
}

/// Quantities feeding [`subadditivity_checks_from`].
#[derive(Clone, Copy, Debug)]
pub struct SubadditivityInputs<'a> {
    pub omega: &'a ComplexMatrix,
    pub omega_bath: &'a ComplexMatrix,
    pub d_s: usize,
    /// Largest `d_eff(ρ_B(t))` over the sampled times.
    pub max_bath_effective_dimension: f64,
    pub max_rank_mismatch: usize,
    /// Bath dimension `d_R_B` of a product initial subspace `|ψ⟩⊗H_{R_B}`,
    /// enabling the chained bound.
    pub restricted_bath_dim: Option<usize>,
}

pub fn subadditivity_checks_from(inputs: &SubadditivityInputs<'_>) -> Vec<BoundCheck> {
    let ds = inputs.d_s as f64;
    let purity = purity_of(inputs.omega);
    let purity_b = purity_of(inputs.omega_bath);
    let deff = 1.0 / purity;
    let deff_b = 1.0 / purity_b;
    let mut checks = vec![
        BoundCheck::lower("subadd.purity", purity, purity_b / ds - PURITY_SLACK),
        BoundCheck::upper(
            "subadd.bath_d_eff_at_t",
            inputs.max_bath_effective_dimension,
            ds + BATH_DEFF_SLACK,
        ),
        BoundCheck::lower("subadd.d_eff_omega_B", deff_b, deff / ds * (1.0 - PURITY_SLACK)),
        BoundCheck::upper("subadd.rank_mismatch", inputs.max_rank_mismatch as f64, 0.0),
    ];
    if let Some(drb) = inputs.restricted_bath_dim {
        let quarter = drb as f64 / 4.0;
        let mut chain = BoundCheck::lower("subadd.chain", deff_b, quarter / ds * (1.0 - PURITY_SLACK))
            .with("premise_d_eff_omega", deff)
            .with("premise_bound", quarter);
        if deff < quarter {
            chain = chain.informational().with("premise", "not met");
        }
        checks.push(chain);
    }
    checks
}

/// Purity and rank relations between the global, bath and subsystem states
/// along a sampled trajectory.
pub fn subadditivity_and_bath_checks<R: Rng + ?Sized>(
    psi: &PureState,
    h: &SpectralHamiltonian,
    space: &BipartiteSpace,
    sampling: TimeSampling,
    restricted_bath_dim: Option<usize>,
    rng: &mut R,
) -> Result<Vec<BoundCheck>> {
    let omega = dephased_time_average(psi, h)?;
    let omega_b = space.trace_out_system(omega.matrix())?;
    let stats = trajectory_statistics(psi, h, space, sampling, &[], rng)?;
    Ok(subadditivity_checks_from(&SubadditivityInputs {
        omega: omega.matrix(),
        omega_bath: &omega_b,
        d_s: space.d_s(),
        max_bath_effective_dimension: stats.max_bath_effective_dimension,
        max_rank_mismatch: stats.max_rank_mismatch,
        restricted_bath_dim,
    }))
}
