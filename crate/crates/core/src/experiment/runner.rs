use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{AmplitudeList, ExperimentConfig, ExperimentKind, HamiltonianSpec, SubspaceSpec};
use super::record::{emit, write_file, ExperimentRecord, RowContext};
use crate::bipartite::BipartiteSpace;
use crate::dynamics::{energy_coefficients, trajectory_statistics, TimeSampling};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    diagonal_product_hamiltonian, hamiltonian_from_json, random_spectral_hamiltonian, spin_bath_hamiltonian,
    EnergyWindow, SpectralHamiltonian,
};
use crate::linalg::random::gaussian_vector;
use crate::linalg::ComplexMatrix;
use crate::seed::TrialStreams;
use crate::state::{haar_random_state, PureState, Subspace};
use crate::verify::{
    diagonal_counterexample, haar_pair_moment_check, ks_statistic, spin_bath_counterexample,
    swap_trace_identity_check, theorem1_check, theorem2_statistics, theorem3_statistics, theorem4_report,
};

/// Runs every sweep point of `config`, trials in parallel, rows in
/// (sweep point, trial) order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    run_with_workers(config, config.workers)
}

/// As [`run_experiment`] with an explicit worker count (`None`: one per core).
pub fn run_with_workers(config: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<ExperimentRecord>> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        let dims = config.bath_dims();
        let per_sweep: Vec<Vec<ExperimentRecord>> = dims
            .par_iter()
            .enumerate()
            .map(|(i, &d_b)| run_sweep_point(config, i as u64, d_b))
            .collect::<Result<_>>()?;
        Ok(per_sweep.into_iter().flatten().collect())
    })
}

/// Written next to the output as `<output>.meta.json`.
#[derive(Serialize)]
struct Metadata<'a> {
    config_hash: String,
    version: &'static str,
    rows: usize,
    config: &'a ExperimentConfig,
}

pub fn metadata_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Emits the records in the configured format plus the provenance sidecar.
pub fn write_outputs(config: &ExperimentConfig, records: &[ExperimentRecord]) -> Result<()> {
    emit(records, config.format(), &config.output_path)?;
    let meta = Metadata {
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION"),
        rows: records.len(),
        config,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Format(e.to_string()))?;
    write_file(&metadata_path(&config.output_path), &(text + "\n"))
}

fn to_state(amps: &AmplitudeList, field: &str) -> Result<PureState> {
    PureState::normalized(amps.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
        .map_err(|e| Error::config(field, e.to_string()))
}

fn haar_or_given<R: Rng + ?Sized>(state: &Option<AmplitudeList>, dim: usize, rng: &mut R) -> Result<PureState> {
    match state {
        Some(s) => to_state(s, "subspace.state"),
        None => Ok(haar_random_state(&Subspace::full(dim)?, rng)),
    }
}

fn build_subspace<R: Rng + ?Sized>(spec: &SubspaceSpec, space: &BipartiteSpace, rng: &mut R) -> Result<Subspace> {
    match spec {
        SubspaceSpec::Full => Subspace::full(space.dim()),
        SubspaceSpec::ProductFixedSystem { state } => {
            Subspace::product_fixed_system(&haar_or_given(state, space.d_s(), rng)?, space)
        }
        SubspaceSpec::ProductFixedBath { state } => {
            Subspace::product_fixed_bath(&haar_or_given(state, space.d_b(), rng)?, space)
        }
        SubspaceSpec::Explicit { basis } => {
            let cols: Vec<Vec<Complex64>> = basis
                .iter()
                .map(|c| c.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
                .collect();
            Subspace::new(ComplexMatrix::from_columns(&cols)?).map_err(|e| Error::config("subspace.basis", e.to_string()))
        }
    }
}

fn build_hamiltonian<R: Rng + ?Sized>(
    spec: &HamiltonianSpec,
    space: &BipartiteSpace,
    rng: &mut R,
) -> Result<SpectralHamiltonian> {
    match spec {
        HamiltonianSpec::RandomSpectral { window } => random_spectral_hamiltonian(space, window, rng),
        HamiltonianSpec::DiagonalProduct { window } => diagonal_product_hamiltonian(space, window, rng),
        HamiltonianSpec::SpinBath { energy } => spin_bath_hamiltonian(*energy, space.d_b(), rng),
        HamiltonianSpec::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            let (h, file_space) = hamiltonian_from_json(&text)?;
            if file_space != *space {
                return Err(Error::config(
                    "hamiltonian.path",
                    format!(
                        "file has d_S={}, d_B={} but the config asks for d_S={}, d_B={}",
                        file_space.d_s(),
                        file_space.d_b(),
                        space.d_s(),
                        space.d_b()
                    ),
                ));
            }
            Ok(h)
        }
    }
}

fn sampling(config: &ExperimentConfig, h: &SpectralHamiltonian) -> Result<TimeSampling> {
    TimeSampling::from_level_spacing(h, config.time_sampling.t_max_factor, config.time_sampling.n_samples)
}

fn elapsed_ms(config: &ExperimentConfig, start: Instant) -> f64 {
    if config.record_timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

fn stamp(mut rows: Vec<ExperimentRecord>, wall_ms: f64) -> Vec<ExperimentRecord> {
    for r in &mut rows {
        r.wall_ms = wall_ms;
    }
    rows
}

/// Runs `trial` for every trial index in parallel, keeping trial order.
fn per_trial<T, F>(config: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..config.trials).into_par_iter().map(f).collect()
}

fn run_sweep_point(config: &ExperimentConfig, sweep: u64, d_b: usize) -> Result<Vec<ExperimentRecord>> {
    let streams = TrialStreams::new(config.master_seed, sweep);
    let space = BipartiteSpace::new(config.d_s, d_b)?;
    let id = config.experiment.id();
    let start = Instant::now();
    match config.experiment {
        ExperimentKind::Thm1 => thm1(config, &streams, &space, id),
        ExperimentKind::Thm2 => {
            let mut rng = streams.setup_rng();
            let h = build_hamiltonian(&config.hamiltonian, &space, &mut rng)?;
            let sub = build_subspace(&config.subspace_spec(), &space, &mut rng)?;
            let s = theorem2_statistics(&sub, &h, config.trials, &streams)?;
            let ctx = RowContext { experiment: id, d_s: config.d_s, d_b, d_r: sub.dim() };
            let mut rows: Vec<_> = s
                .samples
                .iter()
                .zip(&s.seeds)
                .enumerate()
                .map(|(i, (&x, &seed))| ctx.info(Some(i), seed, "thm2.d_eff", x))
                .collect();
            rows.push(ctx.check(None, streams.setup_seed(), &s.mean_check));
            rows.push(ctx.check(None, streams.setup_seed(), &s.tail_check));
            Ok(stamp(rows, elapsed_ms(config, start)))
        }
        ExperimentKind::Thm3Bath | ExperimentKind::Thm3Subsystem => {
            let mut rng = streams.setup_rng();
            let h = build_hamiltonian(&config.hamiltonian, &space, &mut rng)?;
            let sub = build_subspace(&config.subspace_spec(), &space, &mut rng)?;
            let s = theorem3_statistics(&sub, &h, &space, config.trials, &streams)?;
            let ctx = RowContext { experiment: id, d_s: config.d_s, d_b, d_r: sub.dim() };
            let mut rows: Vec<_> = s
                .distances
                .iter()
                .zip(&s.seeds)
                .enumerate()
                .map(|(i, (&x, &seed))| ctx.info(Some(i), seed, "thm3.distance", x))
                .collect();
            let setup = streams.setup_seed();
            let lower = 1.0 / config.d_s as f64 - 1e-12;
            rows.push(ctx.row(None, setup, "thm3.delta", s.delta, Some(1.0), s.delta >= lower && s.delta <= 1.0 + 1e-12));
            rows.push(ctx.check(None, setup, &s.delta_check));
            rows.push(ctx.check(None, setup, &s.weak_check));
            rows.push(ctx.check(None, setup, &s.tail_check));
            Ok(stamp(rows, elapsed_ms(config, start)))
        }
        ExperimentKind::Thm4 => thm4(config, &streams, &space, id),
        ExperimentKind::Counterexamples => counterexamples(config, &streams, &space, id),
        ExperimentKind::Identities => identities(config, &streams, &space, id),
    }
}

/// Per-trial setup shared by the trajectory experiments: a Hamiltonian and a
/// Haar state in the configured subspace.
fn random_instance<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    space: &BipartiteSpace,
    subspace: &Subspace,
    rng: &mut R,
) -> Result<(SpectralHamiltonian, PureState)> {
    let h = build_hamiltonian(&config.hamiltonian, space, rng)?;
    let psi = haar_random_state(subspace, rng);
    Ok((h, psi))
}

fn thm1(config: &ExperimentConfig, streams: &TrialStreams, space: &BipartiteSpace, id: &str) -> Result<Vec<ExperimentRecord>> {
    let sub = build_subspace(&config.subspace_spec(), space, &mut streams.setup_rng())?;
    let ctx = RowContext { experiment: id, d_s: space.d_s(), d_b: space.d_b(), d_r: sub.dim() };
    let sweep_start = Instant::now();
    let trials = per_trial(config, |i| {
        let start = Instant::now();
        let mut rng = streams.rng(i as u64);
        let (h, psi) = random_instance(config, space, &sub, &mut rng)?;
        let report = theorem1_check(&psi, &h, space, sampling(config, &h)?, &config.thresholds_k, &mut rng)?;
        let b = &report.bath_bound;
        let mut row = ctx.row(Some(i), streams.seed(i as u64), "thm1.mean_distance", b.empirical, Some(b.bound), report.satisfied());
        row.wall_ms = elapsed_ms(config, start);
        Ok((row, b.empirical / b.bound))
    })?;
    let worst = trials.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let mut rows: Vec<_> = trials.into_iter().map(|(r, _)| r).collect();
    let mut agg = ctx.row(None, streams.setup_seed(), "thm1.worst_bound_ratio", worst, Some(1.0), worst <= 1.0);
    agg.wall_ms = elapsed_ms(config, sweep_start);
    rows.push(agg);
    Ok(rows)
}

/// KS threshold for the time-vs-torus comparison.
const KS_TOLERANCE: f64 = 0.05;

fn thm4(config: &ExperimentConfig, streams: &TrialStreams, space: &BipartiteSpace, id: &str) -> Result<Vec<ExperimentRecord>> {
    let sub = build_subspace(&config.subspace_spec(), space, &mut streams.setup_rng())?;
    let ctx = RowContext { experiment: id, d_s: space.d_s(), d_b: space.d_b(), d_r: sub.dim() };
    let sweep_start = Instant::now();
    let n = config.time_sampling.n_samples;
    let trials = per_trial(config, |i| {
        let start = Instant::now();
        let seed = streams.seed(i as u64);
        let mut rng = streams.rng(i as u64);
        let (h, psi) = random_instance(config, space, &sub, &mut rng)?;
        let c = energy_coefficients(&psi, &h)?;
        let report = theorem4_report(&c, &h, space, config.epsilon, n, &mut rng)?;
        let traj = trajectory_statistics(&psi, &h, space, sampling(config, &h)?, &[], &mut rng)?;
        let ks = ks_statistic(&report.distances, &traj.distances);
        let wall = elapsed_ms(config, start);
        Ok(stamp(
            vec![
                ctx.check(Some(i), seed, &report.check),
                ctx.row(Some(i), seed, "thm4.ks_time_vs_torus", ks, Some(KS_TOLERANCE), ks <= KS_TOLERANCE),
            ],
            wall,
        ))
    })?;
    let mut rows: Vec<_> = trials.into_iter().flatten().collect();
    let max_ks = rows
        .iter()
        .filter(|r| r.quantity == "thm4.ks_time_vs_torus")
        .map(|r| r.empirical)
        .fold(0.0, f64::max);
    let mut agg = ctx.row(None, streams.setup_seed(), "thm4.max_ks", max_ks, Some(KS_TOLERANCE), max_ks <= KS_TOLERANCE);
    agg.wall_ms = elapsed_ms(config, sweep_start);
    rows.push(agg);
    Ok(rows)
}

fn counterexamples(
    config: &ExperimentConfig,
    streams: &TrialStreams,
    space: &BipartiteSpace,
    id: &str,
) -> Result<Vec<ExperimentRecord>> {
    let ctx = RowContext { experiment: id, d_s: space.d_s(), d_b: space.d_b(), d_r: space.dim() };
    let window = match &config.hamiltonian {
        HamiltonianSpec::DiagonalProduct { window } | HamiltonianSpec::RandomSpectral { window } => *window,
        _ => EnergyWindow::default(),
    };
    let energy = match &config.hamiltonian {
        HamiltonianSpec::SpinBath { energy } => *energy,
        _ => config.counterexample_energy,
    };
    let n = config.time_sampling.n_samples;
    let trials = per_trial(config, |i| {
        let start = Instant::now();
        let seed = streams.seed(i as u64);
        let mut rng = streams.rng(i as u64);
        let diag = diagonal_counterexample(space, &window, n, &mut rng)?;
        let spin = spin_bath_counterexample(energy, space.d_b(), n, &mut rng)?;
        let mut rows: Vec<_> = diag.checks.iter().map(|c| ctx.check(Some(i), seed, c)).collect();
        rows.extend(spin.checks.iter().map(|c| ctx.check(Some(i), seed, c)));
        rows.push(ctx.info(Some(i), seed, "cx.spin_bath.omega_distance", spin.omega_distance));
        Ok(stamp(rows, elapsed_ms(config, start)))
    })?;
    Ok(trials.into_iter().flatten().collect())
}

/// Tolerance on the SWAP trace identity.
const SWAP_TOLERANCE: f64 = 1e-10;

fn identities(config: &ExperimentConfig, streams: &TrialStreams, space: &BipartiteSpace, id: &str) -> Result<Vec<ExperimentRecord>> {
    let d = space.d_s();
    let ctx = RowContext { experiment: id, d_s: d, d_b: space.d_b(), d_r: d };
    let mut rows = per_trial(config, |i| {
        let start = Instant::now();
        let mut rng = streams.rng(i as u64);
        let a = ComplexMatrix::new(d, d, gaussian_vector(d * d, &mut rng))?;
        let b = ComplexMatrix::new(d, d, gaussian_vector(d * d, &mut rng))?;
        let dev = swap_trace_identity_check(&a, &b)?;
        let mut row = ctx.row(Some(i), streams.seed(i as u64), "identities.swap_trace", dev, Some(SWAP_TOLERANCE), dev <= SWAP_TOLERANCE);
        row.wall_ms = elapsed_ms(config, start);
        Ok(row)
    })?;
    let start = Instant::now();
    let n = config.moment_trials;
    let dev = haar_pair_moment_check(&Subspace::full(d)?, n, &mut streams.setup_rng())?;
    let bound = 5.0 / (n as f64).sqrt();
    let mut agg = ctx.row(None, streams.setup_seed(), "identities.haar_pair_moment", dev, Some(bound), dev <= bound);
    agg.wall_ms = elapsed_ms(config, start);
    rows.push(agg);
    Ok(rows)
}
