use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::dynamics::{DEFAULT_THRESHOLDS, DEFAULT_TIME_SAMPLES, DEFAULT_T_MAX_FACTOR};
use crate::error::{Error, Result};
use crate::hamiltonian::EnergyWindow;
use crate::limits;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Thm1,
    Thm2,
    Thm3Bath,
    Thm3Subsystem,
    Thm4,
    Counterexamples,
    Identities,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            Self::Thm1 => "thm1",
            Self::Thm2 => "thm2",
            Self::Thm3Bath => "thm3-bath",
            Self::Thm3Subsystem => "thm3-subsystem",
            Self::Thm4 => "thm4",
            Self::Counterexamples => "counterexamples",
            Self::Identities => "identities",
        }
    }

    fn default_subspace(self) -> SubspaceSpec {
        match self {
            Self::Thm3Bath => SubspaceSpec::ProductFixedSystem { state: None },
            Self::Thm3Subsystem => SubspaceSpec::ProductFixedBath { state: None },
            _ => SubspaceSpec::Full,
        }
    }
}

/// One bath dimension or a sweep over several.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BathDims {
    One(usize),
    Sweep(Vec<usize>),
}

impl BathDims {
    pub fn values(&self) -> Vec<usize> {
        match self {
            Self::One(d) => vec![*d],
            Self::Sweep(v) => v.clone(),
        }
    }
}

/// Complex amplitudes as `[re, im]` pairs.
pub type AmplitudeList = Vec<[f64; 2]>;

/// Initial-state subspace. Omitted fixed factor states are Haar-random per
/// sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SubspaceSpec {
    Full,
    /// `|ψ⟩_S ⊗ H_B`.
    ProductFixedSystem {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<AmplitudeList>,
    },
    /// `H_S ⊗ |φ⟩_B`.
    ProductFixedBath {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<AmplitudeList>,
    },
    /// Orthonormal columns of the global space.
    Explicit { basis: Vec<AmplitudeList> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum HamiltonianSpec {
    RandomSpectral {
        #[serde(default)]
        window: EnergyWindow,
    },
    DiagonalProduct {
        #[serde(default)]
        window: EnergyWindow,
    },
    /// `Eσ_z⊗1 + H_int + 1⊗H_B`; requires `d_S = 2`.
    SpinBath { energy: f64 },
    /// A Hamiltonian document written by `hamiltonian_to_json`.
    File { path: PathBuf },
}

impl Default for HamiltonianSpec {
    fn default() -> Self {
        Self::RandomSpectral {
            window: EnergyWindow::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSamplingSpec {
    /// `t_max = t_max_factor / (minimum level spacing)`.
    #[serde(default = "default_t_max_factor")]
    pub t_max_factor: f64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
}

impl Default for TimeSamplingSpec {
    fn default() -> Self {
        Self {
            t_max_factor: DEFAULT_T_MAX_FACTOR,
            n_samples: DEFAULT_TIME_SAMPLES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_t_max_factor() -> f64 {
    DEFAULT_T_MAX_FACTOR
}
fn default_n_samples() -> usize {
    DEFAULT_TIME_SAMPLES
}
fn default_thresholds() -> Vec<f64> {
    DEFAULT_THRESHOLDS.to_vec()
}
fn default_epsilon() -> f64 {
    0.2
}
fn default_moment_trials() -> usize {
    10_000
}
fn default_ce_energy() -> f64 {
    50.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(rename = "d_S")]
    pub d_s: usize,
    #[serde(rename = "d_B")]
    pub d_b: BathDims,
    /// Defaults to the subspace the experiment is about.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace: Option<SubspaceSpec>,
    #[serde(default)]
    pub hamiltonian: HamiltonianSpec,
    pub trials: usize,
    #[serde(default)]
    pub time_sampling: TimeSamplingSpec,
    #[serde(default = "default_thresholds", rename = "thresholds_K")]
    pub thresholds_k: Vec<f64>,
    /// Deviation `ε` for the torus tail.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Monte Carlo size of the pair-moment identity.
    #[serde(default = "default_moment_trials")]
    pub moment_trials: usize,
    /// System energy of the spin-bath counterexample.
    #[serde(default = "default_ce_energy")]
    pub counterexample_energy: f64,
    pub master_seed: u64,
    pub output_path: PathBuf,
    /// Inferred from the output extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_format: Option<OutputFormat>,
    /// Worker threads; absent means one per core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Fill `wall_ms`; off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

fn parse_scalar(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `path` (dot separated) in a JSON document, creating objects as needed.
/// Numeric segments index into existing arrays.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like key=value"))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::config(assignment, "empty key"));
    }
    let mut node = doc;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), parse_scalar(raw));
                    return Ok(());
                }
                if !map.contains_key(*seg) && segments[i + 1].parse::<usize>().is_ok() {
                    // defaulted arrays are not materialized; indexing them would build a map
                    return Err(Error::config(path, format!("`{seg}` is not set; override the whole array")));
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::config(path, format!("`{seg}` is not an array index")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(path, format!("index {idx} out of range ({len} items)")))?;
                if last {
                    *slot = parse_scalar(raw);
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::config(path, format!("`{seg}` is inside a scalar"))),
        };
    }
    unreachable!("loop returns on the last segment")
}

impl ExperimentConfig {
    /// Parses a config document, applies `key=value` overrides, validates.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: Value =
            serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: Self = serde_json::from_value(doc).map_err(|e| Error::config("<document>", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with_overrides(text, &[])
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_with_overrides(&text, overrides)
    }

    pub fn bath_dims(&self) -> Vec<usize> {
        self.d_b.values()
    }

    pub fn subspace_spec(&self) -> SubspaceSpec {
        self.subspace.clone().unwrap_or_else(|| self.experiment.default_subspace())
    }

    pub fn format(&self) -> OutputFormat {
        self.output_format.unwrap_or_else(|| {
            match self.output_path.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("json") => OutputFormat::Json,
                _ => OutputFormat::Csv,
            }
        })
    }

    /// Hex SHA-256 of the canonical (re-serialized) config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        if self.d_s == 0 {
            return Err(Error::config("d_S", "must be at least 1"));
        }
        let dims = self.bath_dims();
        if dims.is_empty() {
            return Err(Error::config("d_B", "sweep list is empty"));
        }
        for &d in &dims {
            if d == 0 {
                return Err(Error::config("d_B", "must be at least 1"));
            }
            let total = self.d_s.checked_mul(d).unwrap_or(usize::MAX);
            if total > limits::max_dim() {
                return Err(Error::config(
                    "d_B",
                    format!("d_S·d_B = {total} exceeds the maximum {}", limits::max_dim()),
                ));
            }
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let ts = &self.time_sampling;
        if !(ts.t_max_factor.is_finite() && ts.t_max_factor > 0.0) {
            return Err(Error::config("time_sampling.t_max_factor", "must be positive and finite"));
        }
        if ts.n_samples < 2 {
            return Err(Error::config("time_sampling.n_samples", "must be at least 2"));
        }
        if self.thresholds_k.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::config("thresholds_K", "thresholds must be positive"));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::config("epsilon", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        match &self.hamiltonian {
            HamiltonianSpec::SpinBath { energy } => {
                if self.d_s != 2 {
                    return Err(Error::config("hamiltonian.model", "spin-bath requires d_S = 2"));
                }
                if !(energy.is_finite() && *energy > 0.0) {
                    return Err(Error::config("hamiltonian.energy", "must be positive"));
                }
            }
            HamiltonianSpec::File { .. } if dims.len() > 1 => {
                return Err(Error::config("d_B", "a Hamiltonian file fixes a single d_B"));
            }
            HamiltonianSpec::RandomSpectral { window } | HamiltonianSpec::DiagonalProduct { window } => {
                EnergyWindow::new(window.lo, window.hi)
                    .map_err(|e| Error::config("hamiltonian.window", e.to_string()))?;
            }
            _ => {}
        }

        let subspace = self.subspace_spec();
        let expect_state = |state: &Option<AmplitudeList>, len: usize, field: &str| -> Result<()> {
            match state {
                Some(s) if s.len() != len => {
                    Err(Error::config(field, format!("expected {len} amplitudes, found {}", s.len())))
                }
                _ => Ok(()),
            }
        };
        match &subspace {
            SubspaceSpec::ProductFixedSystem { state } => expect_state(state, self.d_s, "subspace.state")?,
            SubspaceSpec::ProductFixedBath { state } => {
                if let Some(s) = state {
                    if dims.len() > 1 {
                        return Err(Error::config("subspace.state", "a fixed bath state needs a single d_B"));
                    }
                    expect_state(&Some(s.clone()), dims[0], "subspace.state")?;
                }
            }
            SubspaceSpec::Explicit { basis } => {
                if dims.len() > 1 {
                    return Err(Error::config("subspace.basis", "an explicit basis needs a single d_B"));
                }
                if basis.is_empty() || basis.iter().any(|c| c.len() != self.d_s * dims[0]) {
                    return Err(Error::config("subspace.basis", "columns must have length d_S·d_B"));
                }
            }
            SubspaceSpec::Full => {}
        }
        match (self.experiment, &subspace) {
            (Thm3Bath, SubspaceSpec::ProductFixedSystem { .. })
            | (Thm3Subsystem, SubspaceSpec::ProductFixedBath { .. }) => {}
            (Thm3Bath, _) => return Err(Error::config("subspace.kind", "thm3-bath uses product-fixed-system")),
            (Thm3Subsystem, _) => {
                return Err(Error::config("subspace.kind", "thm3-subsystem uses product-fixed-bath"))
            }
            _ => {}
        }
        match self.experiment {
            Thm2 | Thm3Bath | Thm3Subsystem if self.trials < crate::verify::MIN_STAT_TRIALS => Err(Error::config(
                "trials",
                format!("{} needs at least {} trials", self.experiment.id(), crate::verify::MIN_STAT_TRIALS),
            )),
            Thm4 if ts.n_samples < crate::verify::MIN_TORUS_SAMPLES => Err(Error::config(
                "time_sampling.n_samples",
                format!("thm4 needs at least {} samples", crate::verify::MIN_TORUS_SAMPLES),
            )),
            Identities if self.moment_trials < crate::verify::MIN_MOMENT_TRIALS => Err(Error::config(
                "moment_trials",
                format!("must be at least {}", crate::verify::MIN_MOMENT_TRIALS),
            )),
            Counterexamples if self.d_s != 2 => {
                Err(Error::config("d_S", "counterexamples use a two-level subsystem"))
            }
            Counterexamples if dims.iter().any(|&d| d < 2) => Err(Error::config("d_B", "must be at least 2")),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"experiment":"thm1","d_S":2,"d_B":32,"trials":10,"master_seed":7,"output_path":"out.csv"}"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.thresholds_k, vec![2.0, 5.0, 10.0]);
        assert_eq!(c.time_sampling, TimeSamplingSpec::default());
        assert_eq!(c.subspace_spec(), SubspaceSpec::Full);
        assert_eq!(c.format(), OutputFormat::Csv);
        assert_eq!(c.bath_dims(), vec![32]);
    }

    #[test]
    fn trials_zero_is_rejected() {
        let err = ExperimentConfig::from_json_with_overrides(BASE, &["trials=0".into()]).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field == "trials"));
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let c = ExperimentConfig::from_json_with_overrides(
            BASE,
            &[
                "time_sampling.n_samples=50".into(),
                "d_B=[4,8]".into(),
                "hamiltonian.model=diagonal-product".into(),
                "output_path=x.json".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.time_sampling.n_samples, 50);
        assert_eq!(c.bath_dims(), vec![4, 8]);
        assert!(matches!(c.hamiltonian, HamiltonianSpec::DiagonalProduct { .. }));
        assert_eq!(c.format(), OutputFormat::Json);
        let c = ExperimentConfig::from_json_with_overrides(
            BASE,
            &["thresholds_K=[2,5,10]".into(), "thresholds_K.1=3".into()],
        )
        .unwrap();
        assert_eq!(c.thresholds_k, vec![2.0, 3.0, 10.0]);
        assert!(matches!(
            ExperimentConfig::from_json_with_overrides(BASE, &["thresholds_K.1=3".into()]),
            Err(Error::ConfigInvalid { ref field, .. }) if field == "thresholds_K.1"
        ));
        assert!(ExperimentConfig::from_json_with_overrides(BASE, &["trials".into()]).is_err());
        assert!(ExperimentConfig::from_json_with_overrides(BASE, &["trials.x=1".into()]).is_err());
    }

    #[test]
    fn field_level_errors() {
        let bad = |o: &str| match ExperimentConfig::from_json_with_overrides(BASE, &[o.into()]) {
            Err(Error::ConfigInvalid { field, .. }) => field,
            other => panic!("expected ConfigInvalid for {o}, got {other:?}"),
        };
        assert_eq!(bad("d_S=0"), "d_S");
        assert_eq!(bad("d_B=100000"), "d_B");
        assert_eq!(bad("epsilon=-1"), "epsilon");
        assert_eq!(bad("experiment=thm2"), "trials");
        assert_eq!(bad("bogus=1"), "<document>");
        assert_eq!(bad("experiment=thm3-bath"), "trials");
    }

    #[test]
    fn thm3_defaults_to_product_subspaces() {
        let c = ExperimentConfig::from_json_with_overrides(
            BASE,
            &["experiment=thm3-bath".into(), "trials=30".into()],
        )
        .unwrap();
        assert_eq!(c.subspace_spec(), SubspaceSpec::ProductFixedSystem { state: None });
        let err = ExperimentConfig::from_json_with_overrides(
            BASE,
            &["experiment=thm3-bath".into(), "trials=30".into(), "subspace.kind=full".into()],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid { ref field, .. } if field == "subspace.kind"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_json(BASE).unwrap();
        let b = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = ExperimentConfig::from_json_with_overrides(BASE, &["master_seed=8".into()]).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
