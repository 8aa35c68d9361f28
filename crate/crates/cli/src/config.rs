//! Run configuration, read from TOML.
//!
//! Every field has a default, so an empty file is a valid configuration
//! reproducing the reference study: anomaly `(0.452, -0.165, 0.025, 2.323,
//! 0.864)`, uniform electrodes, 1% noise and 100 trials per design.

use std::path::{Path, PathBuf};

use eit_core::design::{DesignOptions, SearchStrategy};
use eit_core::inversion::{BfgsSettings, MinimizeOptions, MorozovOptions, RegularizationSpec};
use eit_core::{ElectrodeConfig, EllipseParams, Execution};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub ground_truth: EllipseParams,
    /// Initial design; the optimized one comes from the design stage.
    pub electrodes: ElectrodeConfig,
    pub epsilon: f64,
    pub trials: usize,
    pub regularization: RegularizationSpec,
    pub seeds: Seeds,
    pub budgets: Budgets,
    pub execution: Execution,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    /// Noise of the data the estimates are computed from.
    pub data: u64,
    /// Trial `i` of a Monte Carlo study uses `base + i`.
    pub base: u64,
    pub design: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Multistart,
    BayesOpt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// BFGS iterations per start.
    pub max_iterations: usize,
    pub max_bisections: usize,
    /// Criterion evaluations of the design search.
    pub design_evaluations: usize,
    pub design_strategy: Strategy,
    /// Local searches (multistart) or initial samples (Bayesian).
    pub design_starts: usize,
    /// Random candidates scored by the acquisition per Bayesian step.
    pub design_candidates: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            ground_truth: EllipseParams::new_unchecked(0.452, -0.165, 0.025, 2.323, 0.864),
            electrodes: ElectrodeConfig::uniform(),
            epsilon: 0.01,
            trials: 100,
            regularization: RegularizationSpec::default(),
            seeds: Seeds::default(),
            budgets: Budgets::default(),
            execution: Execution::Parallel,
            output_dir: PathBuf::from("eit-out"),
            emit_svg: false,
        }
    }
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            data: 1,
            base: 1000,
            design: 0,
        }
    }
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            max_bisections: 60,
            design_evaluations: 4000,
            design_strategy: Strategy::Multistart,
            design_starts: 32,
            design_candidates: 2000,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub emit_svg: bool,
    pub trials: Option<usize>,
    pub epsilon: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, or the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text).map_err(|e| match e {
                    CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                    other => other,
                })
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable")
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(seed) = o.seed {
            self.seeds.data = seed;
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        self.emit_svg |= o.emit_svg;
        if let Some(n) = o.trials {
            self.trials = n;
        }
        if let Some(eps) = o.epsilon {
            self.epsilon = eps;
        }
        self
    }

    /// Checks every field, naming the first violated invariant.
    pub fn validate(&self) -> CliResult<()> {
        self.ground_truth
            .validate()
            .map_err(|e| CliError::Config(format!("ground_truth: {e}")))?;
        ElectrodeConfig::new(self.electrodes.phi)
            .map_err(|e| CliError::Config(format!("electrodes: {e}")))?;
        if !(self.epsilon >= 0.0 && self.epsilon < 1.0) {
            return Err(CliError::Config(format!(
                "epsilon = {} must lie in [0, 1)",
                self.epsilon
            )));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        self.regularization
            .validate()
            .map_err(|e| CliError::Config(format!("regularization: {e}")))?;
        let b = &self.budgets;
        if b.max_iterations == 0 || b.max_bisections == 0 || b.design_evaluations == 0 {
            return Err(CliError::Config("budgets must be positive".into()));
        }
        if b.design_starts == 0 || (b.design_strategy == Strategy::BayesOpt && b.design_candidates == 0) {
            return Err(CliError::Config(
                "design_starts and design_candidates must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Electrodes with angles wrapped into `[0, 2 pi)`.
    pub fn initial_electrodes(&self) -> ElectrodeConfig {
        ElectrodeConfig::new_unchecked(self.electrodes.phi)
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            bfgs: BfgsSettings {
                max_iterations: self.budgets.max_iterations,
                ..BfgsSettings::default()
            },
            exec: self.execution,
        }
    }

    pub fn morozov_options(&self) -> MorozovOptions {
        MorozovOptions {
            max_bisections: self.budgets.max_bisections,
            minimize: self.minimize_options(),
            ..MorozovOptions::default()
        }
    }

    pub fn design_options(&self) -> DesignOptions {
        let b = &self.budgets;
        DesignOptions {
            strategy: match b.design_strategy {
                Strategy::Multistart => SearchStrategy::Multistart {
                    starts: b.design_starts,
                },
                Strategy::BayesOpt => SearchStrategy::BayesOpt {
                    initial_points: b.design_starts,
                    candidates: b.design_candidates,
                },
            },
            budget: b.design_evaluations,
            seed: self.seeds.design,
            exec: self.execution,
        }
    }
}
