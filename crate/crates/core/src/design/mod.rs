//! Optimal placement of the four electrodes.
//!
//! A design is scored through the regularized information matrix
//! `M = J(t*, Phi)^T J(t*, Phi) + lambda W^T W` at a fixed anomaly estimate
//! `t*`. The D criterion is `det M`, the E criterion its smallest
//! eigenvalue.
//!
//! The search runs in the unit cube `z` in `[0, 1]^4`: `z0` fixes the first
//! angle, `(z1, z2, z3)` fix the four cyclic gaps through a smooth map onto
//! the simplex `{g_i >= delta_min, sum g_i = 2 pi}`. Sorted order and the
//! minimum separation are therefore plain box constraints.

mod bayesopt;
mod nelder_mead;

use std::f64::consts::TAU;

use nalgebra::{SMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EitError, Result};
use crate::exec::{map_indexed, Execution};
use crate::forward::{jacobian, jacobian_unchecked};
use crate::inversion::RegularizationSpec;
use crate::params::{ElectrodeConfig, EllipseParams, MIN_ELECTRODE_GAP, N_PARAMS};

pub use nelder_mead::{nelder_mead, NelderMeadReport};

type Mat5 = SMatrix<f64, N_PARAMS, N_PARAMS>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    D,
    E,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(EitError::InvalidArgument(format!(
            "penalty weight lambda = {lambda} must be finite and non-negative"
        )));
    }
    Ok(())
}

fn gram(jac: &crate::forward::Jacobian, lambda: f64, reg: &RegularizationSpec) -> Mat5 {
    let mut m = jac.transpose() * jac;
    for (i, w2) in reg.gram_diagonal().into_iter().enumerate() {
        m[(i, i)] += lambda * w2;
    }
    m
}

/// `J^T J + lambda W^T W` at `(t_star, cfg)`.
pub fn information_matrix(
    cfg: &ElectrodeConfig,
    t_star: &EllipseParams,
    lambda: f64,
    reg: &RegularizationSpec,
) -> Result<Mat5> {
    check_lambda(lambda)?;
    Ok(gram(&jacobian(t_star, cfg)?, lambda, reg))
}

fn determinant(m: &Mat5) -> f64 {
    match m.cholesky() {
        Some(chol) => chol.l_dirty().diagonal().iter().map(|d| d * d).product(),
        None => m.lu().determinant(),
    }
}

/// `det(J^T J + lambda W^T W)`.
pub fn d_criterion(
    cfg: &ElectrodeConfig,
    t_star: &EllipseParams,
    lambda: f64,
    reg: &RegularizationSpec,
) -> Result<f64> {
    Ok(determinant(&information_matrix(cfg, t_star, lambda, reg)?))
}

/// Smallest eigenvalue of `J^T J + lambda W^T W`.
pub fn e_criterion(
    cfg: &ElectrodeConfig,
    t_star: &EllipseParams,
    lambda: f64,
    reg: &RegularizationSpec,
) -> Result<f64> {
    let m = information_matrix(cfg, t_star, lambda, reg)?;
    Ok(SymmetricEigen::new(m).eigenvalues.min())
}

/// Angles from unit-cube coordinates, or `None` outside the cube.
pub fn angles_from_unit(z: &[f64; 4]) -> Option<[f64; 4]> {
    if !z.iter().all(|v| (0.0..=1.0).contains(v)) {
        return None;
    }
    // Uniform map of the cube onto the 3-simplex of gap fractions.
    let f1 = 1.0 - (1.0 - z[1]).cbrt();
    let f2 = (1.0 - f1) * (1.0 - (1.0 - z[2]).sqrt());
    let f3 = (1.0 - f1 - f2) * z[3];
    let free = TAU - 4.0 * MIN_ELECTRODE_GAP;
    let gaps = [f1, f2, f3].map(|f| MIN_ELECTRODE_GAP + free * f);
    let mut phi = [TAU * z[0]; 4];
    for k in 1..4 {
        phi[k] = phi[k - 1] + gaps[k - 1];
    }
    Some(phi)
}

/// Inverse of [`angles_from_unit`] for a valid configuration, taking its
/// smallest angle as the first electrode.
pub fn unit_from_angles(cfg: &ElectrodeConfig) -> [f64; 4] {
    let sorted = cfg.sorted().phi;
    let gaps = cfg.gaps();
    let free = TAU - 4.0 * MIN_ELECTRODE_GAP;
    let f = gaps.map(|g| ((g - MIN_ELECTRODE_GAP) / free).clamp(0.0, 1.0));
    let z1 = 1.0 - (1.0 - f[0]).powi(3);
    let rest = 1.0 - f[0];
    let z2 = if rest > 0.0 {
        1.0 - (1.0 - f[1] / rest).powi(2)
    } else {
        0.0
    };
    let rest = rest - f[1];
    let z3 = if rest > 0.0 { f[2] / rest } else { 0.0 };
    [sorted[0] / TAU, z1, z2, z3].map(|v| v.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SearchStrategy {
    /// Nelder-Mead from Latin-hypercube starts, budget shared evenly.
    Multistart { starts: usize },
    /// Gaussian-process surrogate with expected-improvement acquisition.
    BayesOpt {
        initial_points: usize,
        candidates: usize,
    },
}

impl Default for SearchStrategy {
    fn default() -> Self {
        SearchStrategy::Multistart { starts: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    pub strategy: SearchStrategy,
    /// Total criterion evaluations, including the uniform reference.
    pub budget: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            strategy: SearchStrategy::default(),
            budget: 4000,
            seed: 0,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub phi: [f64; 4],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    /// Best configuration, angles sorted.
    pub phi_opt: ElectrodeConfig,
    pub objective_value: f64,
    pub criterion: Criterion,
    /// Value at the uniform configuration, always the first trace entry.
    pub uniform_value: f64,
    pub evaluations: usize,
    pub seed: u64,
    pub trace: Vec<TraceEntry>,
}

/// Criterion evaluation shared by the search strategies.
struct Scorer<'a> {
    t_star: &'a EllipseParams,
    lambda: f64,
    reg: &'a RegularizationSpec,
}

impl Scorer<'_> {
    fn det_at(&self, phi: [f64; 4]) -> Option<f64> {
        let cfg = ElectrodeConfig::new_unchecked(phi);
        cfg.validate().ok()?;
        let d = determinant(&gram(
            &jacobian_unchecked(self.t_star, &cfg),
            self.lambda,
            self.reg,
        ));
        d.is_finite().then_some(d)
    }

    fn score_unit(&self, z: &[f64; 4]) -> Option<TraceEntry> {
        let phi = angles_from_unit(z)?;
        let value = self.det_at(phi)?;
        Some(TraceEntry { phi, value })
    }
}

/// Search objective: log-determinant, `-inf` for singular matrices.
fn log_score(value: f64) -> f64 {
    if value > 0.0 {
        value.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn latin_hypercube(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 4]> {
    let mut perms: [Vec<usize>; 4] = std::array::from_fn(|_| (0..n).collect());
    for p in perms.iter_mut() {
        p.shuffle(rng);
    }
    (0..n)
        .map(|i| std::array::from_fn(|d| (perms[d][i] as f64 + rng.random::<f64>()) / n as f64))
        .collect()
}

/// Maximizes the D criterion over electrode configurations at fixed
/// `t_star` and `lambda`.
///
/// The uniform configuration `(0, pi/2, pi, 3 pi/2)` is always evaluated
/// first and is returned when nothing better is found.
pub fn optimize_design(
    t_star: &EllipseParams,
    lambda: f64,
    reg: &RegularizationSpec,
    opts: &DesignOptions,
) -> Result<DesignResult> {
    check_lambda(lambda)?;
    t_star.validate()?;
    reg.validate()?;
    if opts.budget == 0 {
        return Err(EitError::InvalidArgument(
            "design budget must be at least one evaluation".into(),
        ));
    }
    let scorer = Scorer {
        t_star,
        lambda,
        reg,
    };
    let uniform = ElectrodeConfig::uniform();
    let uniform_value = scorer.det_at(uniform.phi).ok_or_else(|| {
        EitError::InvalidArgument("criterion undefined at the uniform configuration".into())
    })?;
    let mut trace = vec![TraceEntry {
        phi: uniform.phi,
        value: uniform_value,
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let remaining = opts.budget - 1;

    match opts.strategy {
        SearchStrategy::Multistart { starts } => {
            let n_starts = starts.min(remaining);
            if n_starts > 0 {
                let seeds = latin_hypercube(n_starts, &mut rng);
                let runs = map_indexed(opts.exec, n_starts, |i| {
                    let budget = remaining / n_starts + usize::from(i < remaining % n_starts);
                    let mut local = Vec::new();
                    nelder_mead(
                        |z| match scorer.score_unit(z) {
                            Some(e) => {
                                local.push(e);
                                -log_score(e.value)
                            }
                            None => f64::INFINITY,
                        },
                        seeds[i],
                        0.1,
                        budget,
                    );
                    local
                });
                trace.extend(runs.into_iter().flatten());
            }
        }
        SearchStrategy::BayesOpt {
            initial_points,
            candidates,
        } => {
            let mut observed: Vec<([f64; 4], f64)> = vec![(
                unit_from_angles(&uniform),
                log_score(uniform_value),
            )];
            let n_init = initial_points.min(remaining);
            for z in latin_hypercube(n_init, &mut rng) {
                if let Some(e) = scorer.score_unit(&z) {
                    observed.push((z, log_score(e.value)));
                    trace.push(e);
                }
            }
            for _ in n_init..remaining {
                let z = bayesopt::propose(&observed, candidates, &mut rng);
                if let Some(e) = scorer.score_unit(&z) {
                    observed.push((z, log_score(e.value)));
                    trace.push(e);
                }
            }
        }
    }

    // First occurrence of the maximum; the uniform entry wins ties.
    let best = trace
        .iter()
        .copied()
        .fold(trace[0], |b, e| if e.value > b.value { e } else { b });
    let phi_opt = ElectrodeConfig::new_unchecked(best.phi).sorted();
    let objective_value = scorer.det_at(phi_opt.phi).unwrap_or(best.value);
    Ok(DesignResult {
        phi_opt,
        objective_value,
        criterion: Criterion::D,
        uniform_value,
        evaluations: opts.budget,
        seed: opts.seed,
        trace,
    })
}

/// Configuration rotated by `angle`, in the same electrode order.
pub fn rotate_config(cfg: &ElectrodeConfig, angle: f64) -> ElectrodeConfig {
    ElectrodeConfig::new_unchecked(cfg.phi.map(|p| p + angle))
}
