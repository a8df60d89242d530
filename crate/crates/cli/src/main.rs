use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eqlab::experiment::{guaranteed_failures, run_experiment, write_outputs, ExperimentConfig};
use eqlab::linalg::random::gaussian_vector;
use eqlab::linalg::ComplexMatrix;
use eqlab::seed::TrialStreams;
use eqlab::state::Subspace;
use eqlab::verify::{haar_pair_moment_check, swap_trace_identity_check, ConstantsTable};

const EXIT_USAGE: u8 = 1;
const EXIT_BOUND_FAILED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "eqlab", about = "Seeded numerical checks of subsystem equilibration bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment config and write its rows.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config field, e.g. `--set time_sampling.n_samples=500`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the concentration constants.
    Constants {
        #[arg(long)]
        json: bool,
    },
    /// Quick SWAP-trace and Haar pair-moment suite.
    CheckIdentities {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Version,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Run { config, overrides } => run(&config, &overrides),
        Command::Constants { json } => {
            let t = ConstantsTable::new();
            if json {
                println!("{}", serde_json::to_string_pretty(&t).expect("constants serialize"));
            } else {
                println!("c   = {:.16e}", t.c);
                println!("c'  = {:.16e}", t.c_prime);
                println!("c'' = {:.16e}", t.c_double_prime);
            }
            ExitCode::SUCCESS
        }
        Command::CheckIdentities { seed } => check_identities(seed),
        Command::Version => {
            println!("eqlab {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}

fn run(path: &PathBuf, overrides: &[String]) -> ExitCode {
    let config = match ExperimentConfig::load(path, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let records = match run_experiment(&config).and_then(|r| write_outputs(&config, &r).map(|_| r)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let failures = guaranteed_failures(&records);
    println!(
        "{}: {} rows written to {}",
        config.experiment.id(),
        records.len(),
        config.output_path.display()
    );
    for f in &failures {
        eprintln!(
            "FAIL {} d_B={} trial={} empirical={:e} bound={}",
            f.quantity,
            f.d_b,
            f.trial.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
            f.empirical,
            f.bound.map(|b| format!("{b:e}")).unwrap_or_default()
        );
    }
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_BOUND_FAILED)
    }
}

fn check_identities(seed: u64) -> ExitCode {
    const PAIRS: u64 = 100;
    const DIM: usize = 4;
    const MOMENT_TRIALS: usize = 10_000;
    let streams = TrialStreams::new(seed, 0);

    let mut worst = 0.0_f64;
    for i in 0..PAIRS {
        let mut rng = streams.rng(i);
        let a = ComplexMatrix::new(DIM, DIM, gaussian_vector(DIM * DIM, &mut rng)).expect("square data");
        let b = ComplexMatrix::new(DIM, DIM, gaussian_vector(DIM * DIM, &mut rng)).expect("square data");
        worst = worst.max(swap_trace_identity_check(&a, &b).expect("equal shapes"));
    }
    let swap_ok = worst <= 1e-10;
    println!(
        "{} swap trace identity: max deviation {worst:.3e} over {PAIRS} pairs (tol 1e-10)",
        if swap_ok { "PASS" } else { "FAIL" }
    );

    let sub = Subspace::full(DIM).expect("nonzero dimension");
    let dev = match haar_pair_moment_check(&sub, MOMENT_TRIALS, &mut streams.setup_rng()) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let tol = 5.0 / (MOMENT_TRIALS as f64).sqrt();
    println!(
        "{} haar pair moment: max deviation {dev:.3e} at N={MOMENT_TRIALS} (tol {tol:.3e}, statistical)",
        if dev <= tol { "PASS" } else { "WARN" }
    );
    if swap_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_BOUND_FAILED)
    }
}
