//! Side-by-side comparison of the two designs, built only from files
//! already on disk.

use std::fmt::Write;
use std::path::Path;

use eit_core::montecarlo::{equivalence_distance, TrialRecord};
use eit_core::{ElectrodeConfig, EllipseParams, N_PARAMS, PARAM_NAMES};
use serde::{Deserialize, Serialize};

use crate::artifacts::{
    design_path, inversion_path, read_json, read_summary, read_trials, summary_path, trials_path,
    DesignArtifact, InversionArtifact, Label,
};
use crate::error::CliResult;
use crate::svg::{box_plot, BoxStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub std: f64,
    /// Mean over converged trials of the equivalence-aware absolute error.
    pub mean_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub label: Label,
    pub electrodes: ElectrodeConfig,
    pub lambda: f64,
    pub d_criterion: f64,
    pub n_trials: usize,
    pub n_converged: usize,
    pub degraded: bool,
    pub params: Vec<ParamRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub ground_truth: EllipseParams,
    pub designs: Vec<DesignRow>,
}

/// Mean equivalence distance to `truth` per parameter over converged trials.
pub fn mean_distances(records: &[TrialRecord], truth: &EllipseParams) -> [f64; N_PARAMS] {
    let converged: Vec<_> = records.iter().filter(|r| r.converged).collect();
    let mut acc = [0.0; N_PARAMS];
    for r in &converged {
        let d = equivalence_distance(&r.t_hat, truth);
        for k in 0..N_PARAMS {
            acc[k] += d[k];
        }
    }
    acc.map(|v| v / converged.len() as f64)
}

pub fn build_report(dir: &Path, truth: &EllipseParams) -> CliResult<Report> {
    let design: DesignArtifact = read_json(&design_path(dir))?;
    let mut designs = Vec::new();
    for label in [Label::Initial, Label::Optimal] {
        let inv: InversionArtifact = read_json(&inversion_path(dir, label))?;
        let summary = read_summary(&summary_path(dir, label))?;
        let records = read_trials(&trials_path(dir, label))?;
        let dist = mean_distances(&records, truth);
        let t = truth.to_array();
        let params = (0..N_PARAMS)
            .map(|k| ParamRow {
                name: PARAM_NAMES[k].to_string(),
                truth: t[k],
                mean: summary.stats.get(k).mean,
                std: summary.stats.get(k).std,
                mean_distance: dist[k],
            })
            .collect();
        designs.push(DesignRow {
            label,
            electrodes: inv.electrodes,
            lambda: inv.result.lambda,
            d_criterion: match label {
                Label::Initial => design.initial_value,
                Label::Optimal => design.result.objective_value,
            },
            n_trials: summary.n_trials,
            n_converged: summary.n_converged,
            degraded: summary.degraded,
            params,
        });
    }
    Ok(Report {
        ground_truth: *truth,
        designs,
    })
}

pub fn render_markdown(report: &Report) -> String {
    let mut s = String::from("# Design comparison\n\n");
    for d in &report.designs {
        let phi: Vec<String> = d.electrodes.phi.iter().map(|p| format!("{p:.4}")).collect();
        let _ = writeln!(
            s,
            "- {}: electrodes [{}], lambda {:.4e}, det {:.4e}, converged {}/{}{}",
            d.label.as_str(),
            phi.join(", "),
            d.lambda,
            d.d_criterion,
            d.n_converged,
            d.n_trials,
            if d.degraded { " (degraded)" } else { "" }
        );
    }
    s.push_str("\n| parameter | truth |");
    for d in &report.designs {
        let l = d.label.as_str();
        let _ = write!(s, " {l} mean | {l} std | {l} distance |");
    }
    s.push_str("\n|---|---|");
    for _ in &report.designs {
        s.push_str("---|---|---|");
    }
    s.push('\n');
    for k in 0..N_PARAMS {
        let _ = write!(s, "| {} | {:.4} |", PARAM_NAMES[k], report.ground_truth.to_array()[k]);
        for d in &report.designs {
            let p = &d.params[k];
            let _ = write!(s, " {:.4} | {:.4} | {:.4} |", p.mean, p.std, p.mean_distance);
        }
        s.push('\n');
    }
    s
}

fn box_of(values: &mut [f64]) -> BoxStats {
    values.sort_by(f64::total_cmp);
    let q = |p: f64| {
        if values.is_empty() {
            return f64::NAN;
        }
        let pos = p * (values.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        values[lo] + (pos - lo as f64) * (values[hi] - values[lo])
    };
    BoxStats {
        min: q(0.0),
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: q(1.0),
    }
}

/// One SVG per parameter, boxes drawn from the trial CSVs after aligning
/// each estimate with the truth's `(r, xi)` representative.
pub fn box_plots(dir: &Path, truth: &EllipseParams) -> CliResult<Vec<(String, String)>> {
    let mut aligned = Vec::new();
    for label in [Label::Initial, Label::Optimal] {
        let records = read_trials(&trials_path(dir, label))?;
        let rows: Vec<[f64; N_PARAMS]> = records
            .iter()
            .filter(|r| r.converged)
            .map(|r| r.t_hat.nearest_equivalent(truth).to_array())
            .collect();
        aligned.push((label, rows));
    }
    let t = truth.to_array();
    Ok((0..N_PARAMS)
        .map(|k| {
            let boxes: Vec<(&str, BoxStats)> = aligned
                .iter()
                .map(|(label, rows)| {
                    let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
                    (label.as_str(), box_of(&mut v))
                })
                .collect();
            let name = PARAM_NAMES[k];
            (
                format!("boxplot_{name}.svg"),
                box_plot(&format!("{name} estimates (dashed: truth)"), &boxes, Some(t[k])),
            )
        })
        .collect())
}
