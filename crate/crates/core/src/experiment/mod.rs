//! Config-driven experiment suites: seeded trials over bath-dimension sweeps,
//! emitted as flat CSV or JSON rows.

mod config;
mod record;
mod runner;

pub use config::{
    apply_override, AmplitudeList, BathDims, ExperimentConfig, ExperimentKind, HamiltonianSpec, OutputFormat,
    SubspaceSpec, TimeSamplingSpec,
};
pub use record::{
    emit, from_json_str, guaranteed_failures, read_json, to_csv_string, to_json_string, ExperimentRecord, CSV_HEADER,
    GUARANTEED_QUANTITIES,
};
pub use runner::{metadata_path, run_experiment, run_with_workers, write_outputs};
