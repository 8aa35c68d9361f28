//! Tikhonov-regularized least squares for the anomaly parameters.
//!
//! The estimate minimizes
//!
//! ```text
//! |F(t, Phi) - g|^2 + lambda |W (t - t_prior)|^2
//! ```
//!
//! where `W` is diagonal and by default penalizes only the poorly
//! determined shape parameters `r` and `xi`. The penalty weight is chosen
//! by the discrepancy principle: bisection on `log lambda` until the fitted
//! residual matches the asserted noise level `epsilon |g|`.
//!
//! The optimizer works in `u = (b1, b2, ln A, ln r, xi)` so positivity of
//! `A` and `r` holds automatically. Whether the ellipse lies inside the disk
//! is checked on each start's end point; starts ending outside are
//! discarded.
//!
//! Near the minimum the objective's rounding noise hides further decrease
//! from the line search while the gradient is still accurate, so each BFGS
//! run is finished by a few Newton steps on the gradient, with the Hessian
//! taken from central differences of the analytic gradient.

mod bfgs;

pub use bfgs::{minimize_bfgs, BfgsReport, BfgsSettings, Termination};

use std::f64::consts::FRAC_PI_4;

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{BracketEnd, EitError, Result};
use crate::exec::{map_indexed, Execution};
use crate::forward::{forward_map, forward_unchecked, jacobian_unchecked};
use crate::params::{ElectrodeConfig, EllipseParams, MeasurementVector, N_MEAS, N_PARAMS};

type Vec5 = SVector<f64, N_PARAMS>;
type Mat5 = SMatrix<f64, N_PARAMS, N_PARAMS>;

/// Diagonal penalty weights and prior values, both in `(b1, b2, A, r, xi)`
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationSpec {
    pub weights: [f64; N_PARAMS],
    pub t_prior: [f64; N_PARAMS],
}

impl Default for RegularizationSpec {
    fn default() -> Self {
        Self {
            weights: [0.0, 0.0, 0.0, 1.0, 1.0],
            t_prior: [0.0, 0.0, 0.0, 1.0, 0.0],
        }
    }
}

impl RegularizationSpec {
    pub fn validate(&self) -> Result<()> {
        if !self
            .weights
            .iter()
            .chain(&self.t_prior)
            .all(|v| v.is_finite())
        {
            return Err(EitError::InvalidArgument(
                "regularization weights and prior must be finite".into(),
            ));
        }
        Ok(())
    }

    /// `|W (t - t_prior)|^2`.
    pub fn penalty(&self, t: &EllipseParams) -> f64 {
        t.to_array()
            .iter()
            .zip(self.weights.iter().zip(&self.t_prior))
            .map(|(v, (w, p))| (w * (v - p)).powi(2))
            .sum()
    }

    /// Diagonal of `W^T W`.
    pub fn gram_diagonal(&self) -> [f64; N_PARAMS] {
        self.weights.map(|w| w * w)
    }
}

/// Outcome of a multistart minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionResult {
    /// Canonical representative (`r >= 1`, `xi` in `[0, pi)`).
    pub t_star: EllipseParams,
    /// Parameters exactly as the optimizer returned them.
    pub t_raw: EllipseParams,
    pub lambda: f64,
    pub residual_norm: f64,
    pub objective_value: f64,
    /// Norm of the gradient with respect to `(b1, b2, A, r, xi)`.
    pub gradient_norm: f64,
    /// Iterations of the winning start.
    pub iterations: usize,
    pub converged: bool,
    pub starts_used: usize,
    /// Starts whose end point was an admissible ellipse.
    pub admissible_starts: usize,
}

/// Starting points for [`minimize`].
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    /// Polar grid of centers, see [`default_starts`].
    #[default]
    Multistart,
    Single(EllipseParams),
    Starts(Vec<EllipseParams>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub bfgs: BfgsSettings,
    pub exec: Execution,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            bfgs: BfgsSettings::default(),
            exec: Execution::Parallel,
        }
    }
}

/// Area and shape of every default start.
pub const START_AREA: f64 = 0.01;

/// Origin plus centers on radii 0.2, 0.4, 0.6 at eight angles `k pi / 4`,
/// each with `A = 0.01`, `r = 1`, `xi = 0`: 25 starts.
pub fn default_starts() -> Vec<EllipseParams> {
    let mut starts = vec![EllipseParams::new_unchecked(0.0, 0.0, START_AREA, 1.0, 0.0)];
    for radius in [0.2, 0.4, 0.6] {
        for k in 0..8 {
            let (s, c) = (k as f64 * FRAC_PI_4).sin_cos();
            starts.push(EllipseParams::new_unchecked(
                radius * c,
                radius * s,
                START_AREA,
                1.0,
                0.0,
            ));
        }
    }
    starts
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(EitError::InvalidArgument(format!(
            "penalty weight lambda = {lambda} must be finite and non-negative"
        )));
    }
    Ok(())
}

/// `|F(t, Phi) - g|^2 + lambda |W (t - t_prior)|^2`.
pub fn objective(
    t: &EllipseParams,
    g: &MeasurementVector,
    cfg: &ElectrodeConfig,
    lambda: f64,
    reg: &RegularizationSpec,
) -> Result<f64> {
    check_lambda(lambda)?;
    let f = forward_map(t, cfg)?;
    let misfit: f64 = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(misfit + lambda * reg.penalty(t))
}

/// Gradient of [`objective`] with respect to `(b1, b2, A, r, xi)`:
/// `2 J^T (F - g) + 2 lambda W^T W (t - t_prior)`.
pub fn objective_gradient(
    t: &EllipseParams,
    g: &MeasurementVector,
    cfg: &ElectrodeConfig,
    lambda: f64,
    reg: &RegularizationSpec,
) -> Result<[f64; N_PARAMS]> {
    check_lambda(lambda)?;
    t.validate()?;
    cfg.validate()?;
    Ok(objective_and_gradient(t, &g.values, cfg, lambda, reg).1)
}

/// Objective and its gradient with respect to `t`, without validity checks.
pub(crate) fn objective_and_gradient(
    t: &EllipseParams,
    g: &[f64; N_MEAS],
    cfg: &ElectrodeConfig,
    lambda: f64,
    reg: &RegularizationSpec,
) -> (f64, [f64; N_PARAMS]) {
    let f = forward_unchecked(t, cfg);
    let jac = jacobian_unchecked(t, cfg);
    let res: SVector<f64, N_MEAS> = SVector::from_fn(|k, _| f[k] - g[k]);
    let grad_fit = jac.transpose() * res * 2.0;
    let tv = t.to_array();
    let w2 = reg.gram_diagonal();
    let grad = std::array::from_fn(|i| grad_fit[i] + 2.0 * lambda * w2[i] * (tv[i] - reg.t_prior[i]));
    (res.norm_squared() + lambda * reg.penalty(t), grad)
}

fn to_working(t: &EllipseParams) -> Vec5 {
    Vec5::new(t.b1, t.b2, t.area.ln(), t.aspect.ln(), t.xi)
}

fn from_working(u: &Vec5) -> EllipseParams {
    EllipseParams::new_unchecked(u[0], u[1], u[2].exp(), u[3].exp(), u[4])
}

/// `dt/du` for the working coordinates.
fn working_scale(t: &EllipseParams) -> Vec5 {
    Vec5::new(1.0, 1.0, t.area, t.aspect, 1.0)
}

struct Problem<'a> {
    g: &'a [f64; N_MEAS],
    cfg: &'a ElectrodeConfig,
    lambda: f64,
    reg: &'a RegularizationSpec,
}

impl Problem<'_> {
    fn eval(&self, u: &Vec5) -> Option<(f64, Vec5)> {
        let t = from_working(u);
        let (f, grad_t) = objective_and_gradient(&t, self.g, self.cfg, self.lambda, self.reg);
        let grad = Vec5::from(grad_t).component_mul(&working_scale(&t));
        (f.is_finite() && grad.iter().all(|v| v.is_finite())).then_some((f, grad))
    }

    /// Inverse of the damped Gauss-Newton Hessian in working coordinates.
    fn inverse_hessian(&self, u: &Vec5) -> Mat5 {
        let t = from_working(u);
        let scale = working_scale(&t);
        let jac = jacobian_unchecked(&t, self.cfg) * Mat5::from_diagonal(&scale);
        let w2 = Vec5::from(self.reg.gram_diagonal()).component_mul(&scale.component_mul(&scale));
        let mut m = (jac.transpose() * jac + Mat5::from_diagonal(&w2) * self.lambda) * 2.0;
        let damping = 1e-10 * m.trace().max(f64::MIN_POSITIVE);
        for i in 0..N_PARAMS {
            m[(i, i)] += damping;
        }
        if m.iter().all(|v| v.is_finite()) {
            if let Some(chol) = m.cholesky() {
                return chol.inverse();
            }
        }
        Mat5::identity()
    }
}

const POLISH_STEPS: usize = 12;
const POLISH_DIFF_STEP: f64 = 1e-6;

impl Problem<'_> {
    fn gradient_t(&self, u: &Vec5) -> Option<(f64, Vec5)> {
        let (f, grad) = self.eval(u)?;
        Some((f, grad.component_div(&working_scale(&from_working(u)))))
    }

    fn newton_step(&self, u: &Vec5, grad: &Vec5) -> Option<Vec5> {
        let mut h = Mat5::zeros();
        for j in 0..N_PARAMS {
            let mut up = *u;
            let mut um = *u;
            up[j] += POLISH_DIFF_STEP;
            um[j] -= POLISH_DIFF_STEP;
            let col = (self.eval(&up)?.1 - self.eval(&um)?.1) / (2.0 * POLISH_DIFF_STEP);
            h.set_column(j, &col);
        }
        let h = (h + h.transpose()) * 0.5;
        h.cholesky().map(|c| -c.solve(grad))
    }

    /// Newton iterations from a BFGS end point. A step is kept only if it
    /// lowers the gradient norm without raising the objective beyond its
    /// rounding level.
    fn polish(&self, u0: Vec5, tol: f64) -> Polished {
        let Some((mut f, mut grad_t)) = self.gradient_t(&u0) else {
            return Polished { u: u0, f: f64::NAN, grad_norm: f64::NAN, converged: false };
        };
        let mut u = u0;
        let done = |f: f64, g: &Vec5| g.norm() <= tol * (1.0 + f.abs());
        for _ in 0..POLISH_STEPS {
            if done(f, &grad_t) {
                break;
            }
            let grad_u = grad_t.component_mul(&working_scale(&from_working(&u)));
            let Some(step) = self.newton_step(&u, &grad_u) else {
                break;
            };
            let slack = 1e-12 * (1.0 + f.abs());
            let mut scale = 1.0;
            let mut moved = false;
            for _ in 0..20 {
                let trial = u + step * scale;
                if let Some((ft, gt)) = self.gradient_t(&trial) {
                    if ft <= f + slack && gt.norm() < grad_t.norm() {
                        u = trial;
                        f = ft;
                        grad_t = gt;
                        moved = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Polished { u, f, grad_norm: grad_t.norm(), converged: done(f, &grad_t) }
    }
}

struct Polished {
    u: Vec5,
    f: f64,
    grad_norm: f64,
    converged: bool,
}

struct StartOutcome {
    t: EllipseParams,
    report: BfgsReport<N_PARAMS>,
    polished: Polished,
}

/// Local minimization of the regularized objective from each start; the
/// admissible end point with the lowest objective wins.
pub fn minimize(
    g: &MeasurementVector,
    cfg: &ElectrodeConfig,
    lambda: f64,
    reg: &RegularizationSpec,
    init: &Init,
    opts: &MinimizeOptions,
) -> Result<InversionResult> {
    check_lambda(lambda)?;
    cfg.validate()?;
    reg.validate()?;
    if !g.values.iter().all(|v| v.is_finite()) {
        return Err(EitError::InvalidArgument("non-finite data".into()));
    }
    let starts = match init {
        Init::Multistart => default_starts(),
        Init::Single(t) => vec![*t],
        Init::Starts(v) => v.clone(),
    };
    for s in &starts {
        if !(s.area > 0.0 && s.aspect > 0.0) {
            return Err(EitError::InvalidArgument(
                "starting points need positive area and aspect ratio".into(),
            ));
        }
    }
    let problem = Problem {
        g: &g.values,
        cfg,
        lambda,
        reg,
    };
    let outcomes = map_indexed(opts.exec, starts.len(), |i| {
        let report = minimize_bfgs(
            |u| problem.eval(u),
            |u| problem.inverse_hessian(u),
            to_working(&starts[i]),
            &opts.bfgs,
        );
        let polished = problem.polish(report.x, opts.bfgs.grad_tol);
        StartOutcome {
            t: from_working(&polished.u),
            report,
            polished,
        }
    });

    let admissible: Vec<&StartOutcome> = outcomes
        .iter()
        .filter(|o| o.polished.f.is_finite() && o.t.is_admissible())
        .collect();
    let best = admissible
        .iter()
        .copied()
        .min_by(|a, b| a.polished.f.total_cmp(&b.polished.f))
        .ok_or(EitError::NoFeasibleStart)?;

    let f = forward_unchecked(&best.t, cfg);
    let residual_norm = f
        .iter()
        .zip(&g.values)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(InversionResult {
        t_star: best.t.canonical(),
        t_raw: best.t,
        lambda,
        residual_norm,
        objective_value: best.polished.f,
        gradient_norm: best.polished.grad_norm,
        iterations: best.report.iterations,
        converged: best.polished.converged,
        starts_used: starts.len(),
        admissible_starts: admissible.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorozovOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_bisections: usize,
    /// Bisection stops once `|residual - target| <= stop_tol * target`.
    pub stop_tol: f64,
    /// Largest relative mismatch accepted when bisection runs out.
    pub accept_tol: f64,
    pub minimize: MinimizeOptions,
}

impl Default for MorozovOptions {
    fn default() -> Self {
        Self {
            lambda_min: 1e-12,
            lambda_max: 1e2,
            max_bisections: 60,
            stop_tol: 1e-3,
            accept_tol: 0.05,
            minimize: MinimizeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub lambda: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorozovResult {
    pub lambda: f64,
    /// `epsilon |g|`.
    pub target: f64,
    pub result: InversionResult,
    /// Every solve in evaluation order, bracket ends first.
    pub trace: Vec<BisectionStep>,
}

/// Chooses `lambda` so the fitted residual equals `epsilon |g|`.
pub fn morozov_lambda(
    g: &MeasurementVector,
    cfg: &ElectrodeConfig,
    epsilon: f64,
    reg: &RegularizationSpec,
    opts: &MorozovOptions,
) -> Result<MorozovResult> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(EitError::InvalidArgument(format!(
            "noise level epsilon = {epsilon} must be positive"
        )));
    }
    let norm = g.norm();
    if norm == 0.0 {
        return Err(EitError::InvalidArgument("data vector is zero".into()));
    }
    let target = epsilon * norm;
    let mut trace = Vec::new();
    let mut solve = |lambda: f64, warm: Option<EllipseParams>| -> Result<InversionResult> {
        let mut starts = default_starts();
        starts.extend(warm);
        let r = minimize(g, cfg, lambda, reg, &Init::Starts(starts), &opts.minimize)?;
        trace.push(BisectionStep {
            lambda,
            residual_norm: r.residual_norm,
        });
        Ok(r)
    };

    let lower = solve(opts.lambda_min, None)?;
    if lower.residual_norm > target {
        return Err(EitError::BracketFailure {
            end: BracketEnd::Lower,
            residual: lower.residual_norm,
            target,
        });
    }
    let upper = solve(opts.lambda_max, Some(lower.t_raw))?;
    if upper.residual_norm < target {
        return Err(EitError::BracketFailure {
            end: BracketEnd::Upper,
            residual: upper.residual_norm,
            target,
        });
    }

    let (mut lo, mut hi) = (opts.lambda_min.ln(), opts.lambda_max.ln());
    let mut best = if (lower.residual_norm - target).abs() <= (upper.residual_norm - target).abs() {
        lower
    } else {
        upper
    };
    let mut warm = lower.t_raw;
    for _ in 0..opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        let r = solve(mid.exp(), Some(warm))?;
        warm = r.t_raw;
        if (r.residual_norm - target).abs() < (best.residual_norm - target).abs() {
            best = r;
        }
        if (r.residual_norm - target).abs() <= opts.stop_tol * target {
            break;
        }
        if r.residual_norm < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.residual_norm - target).abs() > opts.accept_tol * target {
        return Err(EitError::DiscrepancyNotAttained {
            residual: best.residual_norm,
            target,
        });
    }
    Ok(MorozovResult {
        lambda: best.lambda,
        target,
        result: best,
        trace,
    })
}

/// `F(t0, Phi) + n` with `n` a seeded Gaussian direction scaled to
/// `|n| = epsilon |F(t0, Phi)|` exactly.
pub fn synthesize_data(
    t0: &EllipseParams,
    cfg: &ElectrodeConfig,
    epsilon: f64,
    seed: u64,
) -> Result<MeasurementVector> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(EitError::InvalidArgument(format!(
            "noise level epsilon = {epsilon} must be non-negative"
        )));
    }
    let clean = forward_map(t0, cfg)?;
    if epsilon == 0.0 {
        return Ok(clean);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: [f64; N_MEAS] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let noise_norm = noise.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = epsilon * clean.norm() / noise_norm;
    Ok(MeasurementVector {
        values: std::array::from_fn(|k| clean.values[k] + scale * noise[k]),
        epsilon,
    })
}
