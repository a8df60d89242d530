use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::OutputFormat;
use crate::error::{Error, Result};
use crate::verify::BoundCheck;

pub const CSV_HEADER: &str = "experiment,d_S,d_B,d_R,trial,seed,quantity,empirical,bound,satisfied,wall_ms";

/// Quantities whose bound must hold in every run.
pub const GUARANTEED_QUANTITIES: &[&str] = &[
    "thm1.mean_distance",
    "thm1.worst_bound_ratio",
    "thm2.mean_d_eff",
    "thm3.mean_distance_delta_bound",
    "thm3.mean_distance_weak_bound",
    "thm3.delta",
    "cx.diagonal.population_drift",
    "cx.diagonal.omega_distance",
    "cx.spin_bath.energy_difference_min",
    "cx.spin_bath.energy_difference_max",
    "identities.swap_trace",
];

/// One output row: a trial (`trial = Some`) or a sweep-point aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    #[serde(rename = "d_S")]
    pub d_s: usize,
    #[serde(rename = "d_B")]
    pub d_b: usize,
    #[serde(rename = "d_R")]
    pub d_r: usize,
    pub trial: Option<usize>,
    pub seed: u64,
    pub quantity: String,
    pub empirical: f64,
    /// Absent for purely descriptive quantities.
    pub bound: Option<f64>,
    pub satisfied: bool,
    pub wall_ms: f64,
}

impl ExperimentRecord {
    pub fn is_guaranteed(&self) -> bool {
        GUARANTEED_QUANTITIES.contains(&self.quantity.as_str())
    }
}

/// Provenance shared by the rows of one sweep point.
#[derive(Clone, Debug)]
pub(crate) struct RowContext<'a> {
    pub experiment: &'a str,
    pub d_s: usize,
    pub d_b: usize,
    pub d_r: usize,
}

impl RowContext<'_> {
    pub fn row(
        &self,
        trial: Option<usize>,
        seed: u64,
        quantity: impl Into<String>,
        empirical: f64,
        bound: Option<f64>,
        satisfied: bool,
    ) -> ExperimentRecord {
        ExperimentRecord {
            experiment: self.experiment.to_string(),
            d_s: self.d_s,
            d_b: self.d_b,
            d_r: self.d_r,
            trial,
            seed,
            quantity: quantity.into(),
            empirical,
            bound,
            satisfied,
            wall_ms: 0.0,
        }
    }

    pub fn check(&self, trial: Option<usize>, seed: u64, check: &BoundCheck) -> ExperimentRecord {
        self.row(trial, seed, check.label.clone(), check.empirical, Some(check.bound), check.satisfied)
    }

    pub fn info(&self, trial: Option<usize>, seed: u64, quantity: &str, value: f64) -> ExperimentRecord {
        self.row(trial, seed, quantity, value, None, true)
    }
}

/// Rows whose guaranteed bound failed.
pub fn guaranteed_failures(records: &[ExperimentRecord]) -> Vec<&ExperimentRecord> {
    records.iter().filter(|r| r.is_guaranteed() && !r.satisfied).collect()
}

/// 17 significant digits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_csv_string(records: &[ExperimentRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let trial = r.trial.map(|t| t.to_string()).unwrap_or_default();
        let bound = r.bound.map(fmt_f64).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.d_s,
            r.d_b,
            r.d_r,
            trial,
            r.seed,
            r.quantity,
            fmt_f64(r.empirical),
            bound,
            r.satisfied,
            fmt_f64(r.wall_ms)
        )
        .expect("writing to a String");
    }
    out
}

/// Writes floats with 17 significant digits.
struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }
}

/// A JSON array, one object per line.
pub fn to_json_string(records: &[ExperimentRecord]) -> String {
    let mut out = String::from("[\n");
    for (i, r) in records.iter().enumerate() {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
        r.serialize(&mut ser).expect("records serialize");
        out.push_str("  ");
        out.push_str(std::str::from_utf8(&buf).expect("JSON is UTF-8"));
        if i + 1 < records.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

pub fn from_json_str(text: &str) -> Result<Vec<ExperimentRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

pub fn read_json(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json_str(&text)
}

pub fn emit(records: &[ExperimentRecord], format: OutputFormat, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("nothing to emit".into()));
    }
    let text = match format {
        OutputFormat::Csv => to_csv_string(records),
        OutputFormat::Json => to_json_string(records),
    };
    write_file(path, &text)
}
