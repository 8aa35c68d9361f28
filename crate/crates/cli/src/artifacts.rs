//! Files written by the subcommands and their loaders.
//!
//! JSON floats are written in shortest round-trip form, so loading a file
//! gives back the exact values that were saved.

use std::fs;
use std::path::{Path, PathBuf};

use eit_core::design::DesignResult;
use eit_core::inversion::{BisectionStep, InversionResult, RegularizationSpec};
use eit_core::montecarlo::{TrialRecord, TrialSummary};
use eit_core::{ElectrodeConfig, EllipseParams, MeasurementVector, N_MEAS, PAIRS};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Which electrode configuration a stage works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    /// The configured electrodes.
    Initial,
    /// The result of the design stage.
    Optimal,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Initial => "initial",
            Label::Optimal => "optimal",
        }
    }
}

pub fn forward_path(dir: &Path, label: Label) -> PathBuf {
    dir.join(format!("forward_{}.json", label.as_str()))
}

pub fn data_path(dir: &Path, label: Label) -> PathBuf {
    dir.join(format!("data_{}.json", label.as_str()))
}

pub fn inversion_path(dir: &Path, label: Label) -> PathBuf {
    dir.join(format!("inversion_{}.json", label.as_str()))
}

pub fn design_path(dir: &Path) -> PathBuf {
    dir.join("design.json")
}

pub fn trials_path(dir: &Path, label: Label) -> PathBuf {
    dir.join(format!("mc_{}.csv", label.as_str()))
}

pub fn summary_path(dir: &Path, label: Label) -> PathBuf {
    dir.join(format!("mc_{}_summary.json", label.as_str()))
}

pub fn report_json_path(dir: &Path) -> PathBuf {
    dir.join("report.json")
}

pub fn report_text_path(dir: &Path) -> PathBuf {
    dir.join("report.md")
}

pub fn oracle_path(dir: &Path) -> PathBuf {
    dir.join("oracle.json")
}

/// Noiseless forward map of the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardArtifact {
    pub label: Label,
    pub ground_truth: EllipseParams,
    pub electrodes: ElectrodeConfig,
    /// Electrode indices (into `electrodes.phi`) of each measurement.
    pub pairs: [(usize, usize); N_MEAS],
    pub values: [f64; N_MEAS],
}

impl ForwardArtifact {
    pub fn new(label: Label, t: EllipseParams, cfg: ElectrodeConfig, values: [f64; N_MEAS]) -> Self {
        Self {
            label,
            ground_truth: t,
            electrodes: cfg,
            pairs: PAIRS,
            values,
        }
    }
}

/// Synthesized measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataArtifact {
    pub label: Label,
    pub electrodes: ElectrodeConfig,
    pub seed: u64,
    pub epsilon: f64,
    pub values: [f64; N_MEAS],
}

impl DataArtifact {
    pub fn measurements(&self) -> MeasurementVector {
        MeasurementVector {
            values: self.values,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionArtifact {
    pub label: Label,
    pub electrodes: ElectrodeConfig,
    pub epsilon: f64,
    /// `epsilon |g|`; absent for noiseless data, which are fitted with
    /// `lambda = 0`.
    pub target: Option<f64>,
    pub result: InversionResult,
    pub trace: Vec<BisectionStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignArtifact {
    pub t_star: EllipseParams,
    pub lambda: f64,
    pub regularization: RegularizationSpec,
    /// Criterion at the electrodes of the inversion.
    pub initial_value: f64,
    pub result: DesignResult,
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn input_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::MissingInput {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| output_error(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| output_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| output_error(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| input_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| input_error(path, e))
}

/// One CSV row; field order fixes the column order.
#[derive(Debug, Serialize, Deserialize)]
struct TrialRow {
    trial: usize,
    seed: u64,
    b1: f64,
    b2: f64,
    #[serde(rename = "A")]
    area: f64,
    r: f64,
    xi: f64,
    residual: f64,
    converged: bool,
}

pub const CSV_HEADER: [&str; 9] = ["trial", "seed", "b1", "b2", "A", "r", "xi", "residual", "converged"];

pub fn write_trials(path: &Path, records: &[TrialRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    for r in records {
        let t = r.t_hat;
        w.serialize(TrialRow {
            trial: r.trial_index,
            seed: r.seed,
            b1: t.b1,
            b2: t.b2,
            area: t.area,
            r: t.aspect,
            xi: t.xi,
            residual: r.residual_norm,
            converged: r.converged,
        })
        .map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

pub fn read_trials(path: &Path) -> CliResult<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| input_error(path, e))?;
    let header = r.headers().map_err(|e| input_error(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(input_error(path, format!("unexpected header {header:?}")));
    }
    r.deserialize::<TrialRow>()
        .map(|row| {
            let row = row.map_err(|e| input_error(path, e))?;
            Ok(TrialRecord {
                trial_index: row.trial,
                seed: row.seed,
                t_hat: EllipseParams::new_unchecked(row.b1, row.b2, row.area, row.r, row.xi),
                residual_norm: row.residual,
                converged: row.converged,
            })
        })
        .collect()
}

pub fn read_summary(path: &Path) -> CliResult<TrialSummary> {
    read_json(path)
}
