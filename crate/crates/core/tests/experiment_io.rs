use std::path::Path;

use eqlab::experiment::{
    guaranteed_failures, metadata_path, read_json, run_experiment, run_with_workers, to_csv_string, write_outputs,
    ExperimentConfig, CSV_HEADER,
};
use eqlab::Error;

fn config(experiment: &str, trials: usize, out: &Path, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{"experiment":"{experiment}","d_S":2,"d_B":[4,8],"trials":{trials},"master_seed":99,
            "output_path":{:?},"time_sampling":{{"t_max_factor":1000,"n_samples":1000}}{extra}}}"#,
        out.display().to_string()
    );
    ExperimentConfig::from_json(&text).unwrap()
}

#[test]
fn thm1_rows_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"{{"experiment":"thm1","d_S":2,"d_B":32,"trials":10,"master_seed":5,"output_path":{:?}}}"#,
        dir.path().join("t.csv").display().to_string()
    );
    let cfg = ExperimentConfig::from_json(&text).unwrap();
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows.iter().filter(|r| r.trial.is_some()).count(), 10);
    assert!(rows.iter().all(|r| r.satisfied));
    assert!(guaranteed_failures(&rows).is_empty());
}

#[test]
fn csv_is_byte_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("thm1", 4, &dir.path().join("a.csv"), "");
    let seq = run_with_workers(&cfg, Some(1)).unwrap();
    let par = run_with_workers(&cfg, Some(3)).unwrap();
    assert_eq!(seq, par);

    write_outputs(&cfg, &seq).unwrap();
    let first = std::fs::read(&cfg.output_path).unwrap();
    write_outputs(&cfg, &run_experiment(&cfg).unwrap()).unwrap();
    assert_eq!(first, std::fs::read(&cfg.output_path).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(text, to_csv_string(&seq));

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(metadata_path(&cfg.output_path)).unwrap()).unwrap();
    assert_eq!(meta["config_hash"], cfg.hash());
}

#[test]
fn json_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("thm3-bath", 30, &dir.path().join("r.json"), "");
    let rows = run_experiment(&cfg).unwrap();
    write_outputs(&cfg, &rows).unwrap();
    assert_eq!(read_json(&cfg.output_path).unwrap(), rows);
    let raw = std::fs::read_to_string(&cfg.output_path).unwrap();
    assert!(raw.contains("\"satisfied\":true") && !raw.contains("\"satisfied\":1"));
}

#[test]
fn every_experiment_kind_runs_clean() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, trials, extra) in [
        ("thm2", 30, ""),
        ("thm3-subsystem", 30, ""),
        ("thm4", 2, ""),
        ("counterexamples", 2, ""),
        ("identities", 5, r#","moment_trials":2000"#),
    ] {
        let cfg = config(kind, trials, &dir.path().join(format!("{kind}.csv")), extra);
        let rows = run_experiment(&cfg).unwrap();
        assert!(!rows.is_empty(), "{kind}");
        assert!(rows.iter().all(|r| r.experiment == kind));
        let fails = guaranteed_failures(&rows);
        assert!(fails.is_empty(), "{kind}: {fails:?}");
        // rows are grouped by sweep point, in order
        let dbs: Vec<usize> = rows.iter().map(|r| r.d_b).collect();
        assert!(dbs.windows(2).all(|w| w[0] <= w[1]), "{kind}");
    }
}

#[test]
fn dimension_cap_is_a_config_error() {
    let text = r#"{"experiment":"thm1","d_S":2,"d_B":100000,"trials":1,"master_seed":1,"output_path":"x.csv"}"#;
    assert!(matches!(
        ExperimentConfig::from_json(text),
        Err(Error::ConfigInvalid { ref field, .. }) if field == "d_B"
    ));
}
