use std::path::Path;
use std::process::{Command, Output};

use eit_cli::artifacts::{
    data_path, design_path, forward_path, inversion_path, read_json, read_summary, read_trials,
    summary_path, trials_path, write_json, write_trials, DataArtifact, DesignArtifact,
    ForwardArtifact, InversionArtifact, Label,
};
use eit_cli::report::Report;
use eit_core::forward::forward_map;
use eit_core::montecarlo::TrialSummary;
use eit_core::{ElectrodeConfig, EllipseParams};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn eit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eit"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("EIT_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// Loading a file and saving it again reproduces it byte for byte.
fn assert_json_round_trip<T: Serialize + DeserializeOwned>(path: &Path) {
    let value: T = read_json(path).unwrap();
    let copy = path.with_extension("copy.json");
    write_json(&copy, &value).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap(), std::fs::read_to_string(&copy).unwrap(), "{}", path.display());
}

#[test]
fn forward_matches_library_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = eit(dir.path(), &["forward"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let f: ForwardArtifact = read_json(&forward_path(dir.path(), Label::Initial)).unwrap();
    let t0 = EllipseParams::new(0.452, -0.165, 0.025, 2.323, 0.864).unwrap();
    assert_eq!(f.values, forward_map(&t0, &ElectrodeConfig::uniform()).unwrap().values);
    assert_eq!(f.pairs, eit_core::PAIRS);
}

#[test]
fn equal_electrodes_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[electrodes]\nphi = [0.0, 0.0, 2.0, 4.0]\n");
    let out = eit(dir.path(), &["forward", "--config", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta_min"));
}

#[test]
fn malformed_inputs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "epsilom = 0.1\n");
    assert_eq!(code(&eit(dir.path(), &["forward", "--config", &cfg])), 2);
    assert_eq!(code(&eit(dir.path(), &["forward", "--config", "/nonexistent.toml"])), 2);
    assert_eq!(code(&eit(dir.path(), &["forward", "--epsilon", "-0.5"])), 2);
    assert_eq!(code(&eit(dir.path(), &["invert"])), 2, "missing data file");
    assert_eq!(code(&eit(dir.path(), &["forward", "--label", "optimal"])), 2, "missing design");
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_eit"))
        .args(["forward", "--out"])
        .arg(dir.path())
        .env("EIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad_threads), 2);
}

#[test]
fn unreachable_discrepancy_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&eit(dir.path(), &["forward", "--epsilon", "0.9"])), 0);
    assert_eq!(code(&eit(dir.path(), &["invert", "--epsilon", "0.9"])), 3);
    // With this noise draw even a circle fits below the noise level.
    assert_eq!(code(&eit(dir.path(), &["forward", "--seed", "5"])), 0);
    let out = eit(dir.path(), &["invert", "--seed", "5"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("upper"));
}

#[test]
fn thread_cap_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_eit"))
        .args(["forward", "--out"])
        .arg(dir.path())
        .env("EIT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn stages_run_separately_and_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "trials = 6\n[budgets]\ndesign_evaluations = 300\ndesign_starts = 6\n");
    for args in [
        vec!["forward"],
        vec!["invert"],
        vec!["design"],
        vec!["forward", "--label", "optimal"],
        vec!["invert", "--label", "optimal"],
        vec!["mc"],
        vec!["mc", "--label", "optimal"],
        vec!["diag-oracle"],
    ] {
        let mut full = args.clone();
        full.extend(["--config", cfg.as_str()]);
        let out = eit(d, &full);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for label in [Label::Initial, Label::Optimal] {
        assert_json_round_trip::<ForwardArtifact>(&forward_path(d, label));
        assert_json_round_trip::<DataArtifact>(&data_path(d, label));
        assert_json_round_trip::<InversionArtifact>(&inversion_path(d, label));
        assert_json_round_trip::<TrialSummary>(&summary_path(d, label));
        let records = read_trials(&trials_path(d, label)).unwrap();
        assert_eq!(records.len(), 6);
        let copy = d.join("copy.csv");
        write_trials(&copy, &records).unwrap();
        assert_eq!(std::fs::read(trials_path(d, label)).unwrap(), std::fs::read(&copy).unwrap());
        let header = std::fs::read_to_string(trials_path(d, label)).unwrap();
        assert!(header.starts_with("trial,seed,b1,b2,A,r,xi,residual,converged\n"));
    }
    assert_json_round_trip::<DesignArtifact>(&design_path(d));
    assert_json_round_trip::<eit_core::diagnostics::OracleComparison>(&d.join("oracle.json"));
    let design: DesignArtifact = read_json(&design_path(d)).unwrap();
    let data: DataArtifact = read_json(&data_path(d, Label::Optimal)).unwrap();
    assert_eq!(data.electrodes, design.result.phi_opt);
}

#[test]
fn report_numbers_come_from_the_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write_config(d, "trials = 8\n[budgets]\ndesign_evaluations = 300\ndesign_starts = 6\n");
    let out = eit(d, &["pipeline", "--emit-svg", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Report = read_json(&d.join("report.json")).unwrap();
    assert_json_round_trip::<Report>(&d.join("report.json"));
    for row in &report.designs {
        let summary = read_summary(&summary_path(d, row.label)).unwrap();
        let inv: InversionArtifact = read_json(&inversion_path(d, row.label)).unwrap();
        assert_eq!(row.lambda, inv.result.lambda);
        assert_eq!(row.n_converged, summary.n_converged);
        for (k, p) in row.params.iter().enumerate() {
            assert_eq!(p.mean, summary.stats.get(k).mean);
            assert_eq!(p.std, summary.stats.get(k).std);
        }
    }
    for name in ["b1", "b2", "A", "r", "xi"] {
        let svg = std::fs::read_to_string(d.join(format!("boxplot_{name}.svg"))).unwrap();
        assert_eq!(svg.matches("<rect").count(), 2);
    }
    assert!(std::fs::read_to_string(d.join("report.md")).unwrap().contains("| r |"));
}
