//! The subcommands. Each stage reads its inputs from, and writes its
//! outputs to, the configured output directory, so stages can be run one
//! at a time or all together through [`cmd_pipeline`].

use std::path::{Path, PathBuf};

use eit_core::design::{d_criterion, optimize_design};
use eit_core::diagnostics::{compare_with_oracle, OracleComparison};
use eit_core::forward::forward_map;
use eit_core::inversion::{minimize, morozov_lambda, synthesize_data, Init};
use eit_core::montecarlo::{run_study, StudySpec, TrialSummary};
use eit_core::oracle::QuadratureSpec;
use eit_core::{ElectrodeConfig, MeasurementVector};

use crate::artifacts::{
    data_path, design_path, ensure_dir, forward_path, inversion_path, oracle_path, read_json,
    report_json_path, report_text_path, summary_path, trials_path, write_json, write_text,
    write_trials, DataArtifact, DesignArtifact, ForwardArtifact, InversionArtifact, Label,
};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{box_plots, build_report, render_markdown, Report};

/// Area scales of the oracle comparison.
pub const ORACLE_SCALES: [f64; 3] = [1e-2, 1e-3, 1e-4];

fn prepare(cfg: &RunConfig) -> CliResult<&Path> {
    cfg.validate()?;
    ensure_dir(&cfg.output_dir)?;
    Ok(&cfg.output_dir)
}

/// Electrodes of a stage: the configured ones, or those of `design.json`.
pub fn electrodes_for(cfg: &RunConfig, label: Label) -> CliResult<ElectrodeConfig> {
    match label {
        Label::Initial => Ok(cfg.initial_electrodes()),
        Label::Optimal => {
            let design: DesignArtifact = read_json(&design_path(&cfg.output_dir))?;
            Ok(design.result.phi_opt)
        }
    }
}

/// Noiseless forward map of the ground truth and noisy data from it.
pub fn cmd_forward(cfg: &RunConfig, label: Label) -> CliResult<(ForwardArtifact, DataArtifact)> {
    let dir = prepare(cfg)?;
    let electrodes = electrodes_for(cfg, label)?;
    let clean = forward_map(&cfg.ground_truth, &electrodes)?;
    let forward = ForwardArtifact::new(label, cfg.ground_truth, electrodes, clean.values);
    let g = synthesize_data(&cfg.ground_truth, &electrodes, cfg.epsilon, cfg.seeds.data)?;
    let data = DataArtifact {
        label,
        electrodes,
        seed: cfg.seeds.data,
        epsilon: cfg.epsilon,
        values: g.values,
    };
    write_json(&forward_path(dir, label), &forward)?;
    write_json(&data_path(dir, label), &data)?;
    Ok((forward, data))
}

/// Regularized inversion of a data file. Positive noise levels choose the
/// penalty weight by the discrepancy principle; noiseless data are fitted
/// with `lambda = 0`. The result file is written even when the optimizer
/// did not converge, which is then reported as a numerical failure.
pub fn cmd_invert(cfg: &RunConfig, label: Label, data: Option<&Path>) -> CliResult<InversionArtifact> {
    let dir = prepare(cfg)?;
    let path = data.map(Path::to_path_buf).unwrap_or_else(|| data_path(dir, label));
    let data: DataArtifact = read_json(&path)?;
    let electrodes = ElectrodeConfig::new(data.electrodes.phi)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let g: MeasurementVector = data.measurements();
    let artifact = if data.epsilon > 0.0 {
        let m = morozov_lambda(&g, &electrodes, data.epsilon, &cfg.regularization, &cfg.morozov_options())?;
        InversionArtifact {
            label,
            electrodes,
            epsilon: data.epsilon,
            target: Some(m.target),
            result: m.result,
            trace: m.trace,
        }
    } else {
        let result = minimize(&g, &electrodes, 0.0, &cfg.regularization, &Init::Multistart, &cfg.minimize_options())?;
        InversionArtifact {
            label,
            electrodes,
            epsilon: 0.0,
            target: None,
            result,
            trace: Vec::new(),
        }
    };
    write_json(&inversion_path(dir, label), &artifact)?;
    if !artifact.result.converged {
        return Err(CliError::Numerical(format!(
            "{label:?} inversion stopped with gradient norm {:e} above tolerance",
            artifact.result.gradient_norm
        )));
    }
    Ok(artifact)
}

/// D-optimal electrodes at the estimate of an inversion file.
pub fn cmd_design(cfg: &RunConfig, inversion: Option<&Path>) -> CliResult<DesignArtifact> {
    let dir = prepare(cfg)?;
    let path = inversion
        .map(Path::to_path_buf)
        .unwrap_or_else(|| inversion_path(dir, Label::Initial));
    let inv: InversionArtifact = read_json(&path)?;
    let t_star = inv.result.t_raw;
    let lambda = inv.result.lambda;
    let result = optimize_design(&t_star, lambda, &cfg.regularization, &cfg.design_options())?;
    let initial_value = d_criterion(&inv.electrodes, &t_star, lambda, &cfg.regularization)?;
    let artifact = DesignArtifact {
        t_star,
        lambda,
        regularization: cfg.regularization,
        initial_value,
        result,
    };
    write_json(&design_path(dir), &artifact)?;
    Ok(artifact)
}

/// Monte Carlo study at the electrodes and penalty weight of an inversion
/// file.
pub fn cmd_mc(cfg: &RunConfig, label: Label) -> CliResult<TrialSummary> {
    let dir = prepare(cfg)?;
    let inv: InversionArtifact = read_json(&inversion_path(dir, label))?;
    let study = run_study(&StudySpec {
        label: label.as_str().to_string(),
        t0: cfg.ground_truth,
        cfg: inv.electrodes,
        lambda: inv.result.lambda,
        epsilon: cfg.epsilon,
        n_trials: cfg.trials,
        base_seed: cfg.seeds.base,
        reg: cfg.regularization,
        minimize: cfg.minimize_options(),
        exec: cfg.execution,
    })?;
    write_trials(&trials_path(dir, label), &study.records)?;
    write_json(&summary_path(dir, label), &study.summary)?;
    Ok(study.summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Every stage in order: data and inversion at the initial electrodes,
/// design, data and inversion at the optimized electrodes, both Monte
/// Carlo studies and the comparison report. Stops at the first failing
/// stage; files already written stay in place.
pub fn cmd_pipeline(cfg: &RunConfig) -> CliResult<PipelineOutcome> {
    let dir = prepare(cfg)?.to_path_buf();
    cmd_forward(cfg, Label::Initial)?;
    cmd_invert(cfg, Label::Initial, None)?;
    cmd_design(cfg, None)?;
    cmd_forward(cfg, Label::Optimal)?;
    cmd_invert(cfg, Label::Optimal, None)?;
    cmd_mc(cfg, Label::Initial)?;
    cmd_mc(cfg, Label::Optimal)?;

    let report = build_report(&dir, &cfg.ground_truth)?;
    write_json(&report_json_path(&dir), &report)?;
    write_text(&report_text_path(&dir), &render_markdown(&report))?;
    let mut files = vec![design_path(&dir), report_json_path(&dir), report_text_path(&dir)];
    for label in [Label::Initial, Label::Optimal] {
        files.extend([
            forward_path(&dir, label),
            data_path(&dir, label),
            inversion_path(&dir, label),
            trials_path(&dir, label),
            summary_path(&dir, label),
        ]);
    }
    if cfg.emit_svg {
        for (name, svg) in box_plots(&dir, &cfg.ground_truth)? {
            let path = dir.join(name);
            write_text(&path, &svg)?;
            files.push(path);
        }
    }
    files.sort();
    Ok(PipelineOutcome { report, files })
}

/// Closed form against quadrature for the ground truth at shrinking areas,
/// using the first measurement pair of the configured electrodes.
pub fn cmd_diag_oracle(cfg: &RunConfig) -> CliResult<OracleComparison> {
    let dir = prepare(cfg)?;
    let (pp, pm) = cfg.initial_electrodes().pair(0);
    let cmp = compare_with_oracle(&cfg.ground_truth, pp, pm, &ORACLE_SCALES, &QuadratureSpec::default())?;
    write_json(&oracle_path(dir), &cmp)?;
    Ok(cmp)
}
