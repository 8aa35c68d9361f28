//! BFGS quasi-Newton minimization with Armijo backtracking.

use nalgebra::{SMatrix, SVector};

const STALL_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsSettings {
    pub max_iterations: usize,
    /// Converged when `|grad| <= grad_tol * (1 + |f|)`.
    pub grad_tol: f64,
    /// Longest trial step; longer search directions are shortened.
    pub max_step: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for BfgsSettings {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            grad_tol: 1e-9,
            max_step: 1.0,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    LineSearchFailed,
    /// Accepted steps stopped changing the objective.
    Stalled,
    InvalidStart,
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsReport<const N: usize> {
    pub x: SVector<f64, N>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
}

impl<const N: usize> BfgsReport<N> {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Minimizes `objective`, which returns the value and gradient or `None`
/// where it is undefined. `inverse_hessian` supplies the starting inverse
/// Hessian approximation at a point; it is also used to restart after a
/// failed line search.
pub fn minimize_bfgs<const N: usize, F, H>(
    mut objective: F,
    inverse_hessian: H,
    x0: SVector<f64, N>,
    settings: &BfgsSettings,
) -> BfgsReport<N>
where
    F: FnMut(&SVector<f64, N>) -> Option<(f64, SVector<f64, N>)>,
    H: Fn(&SVector<f64, N>) -> SMatrix<f64, N, N>,
{
    let Some((mut fx, mut grad)) = objective(&x0) else {
        return BfgsReport {
            x: x0,
            f: f64::NAN,
            grad_norm: f64::NAN,
            iterations: 0,
            termination: Termination::InvalidStart,
        };
    };
    let mut x = x0;
    let mut h_inv = inverse_hessian(&x);
    let mut fresh = true;
    let mut iterations = 0;
    let mut flat_steps = 0;
    let termination = loop {
        if grad.norm() <= settings.grad_tol * (1.0 + fx.abs()) {
            break Termination::Converged;
        }
        if iterations >= settings.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let mut dir = -(h_inv * grad);
        let mut slope = grad.dot(&dir);
        if !(slope < 0.0) {
            h_inv = inverse_hessian(&x);
            fresh = true;
            dir = -(h_inv * grad);
            slope = grad.dot(&dir);
            if !(slope < 0.0) {
                dir = -grad;
                slope = -grad.norm_squared();
            }
        }
        let len = dir.norm();
        if len > settings.max_step {
            dir *= settings.max_step / len;
            slope *= settings.max_step / len;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..settings.max_backtracks {
            let trial = x + dir * step;
            if let Some((ft, gt)) = objective(&trial) {
                if ft.is_finite() && ft <= fx + settings.armijo * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if fresh {
                break Termination::LineSearchFailed;
            }
            h_inv = inverse_hessian(&x);
            fresh = true;
            continue;
        };

        let s = x_new - x;
        let y = g_new - grad;
        let sy = s.dot(&y);
        if sy > 1e-14 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = h_inv * y;
            // H+ = H - rho (H y s^T + s y^T H) + (rho^2 y^T H y + rho) s s^T
            h_inv += (s * s.transpose()) * (rho * rho * y.dot(&hy) + rho)
                - (hy * s.transpose() + s * hy.transpose()) * rho;
        }
        if f_new >= fx {
            flat_steps += 1;
            if flat_steps >= STALL_STEPS {
                x = x_new;
                fx = f_new;
                grad = g_new;
                break Termination::Stalled;
            }
        } else {
            flat_steps = 0;
        }
        x = x_new;
        fx = f_new;
        grad = g_new;
        fresh = false;
    };
    BfgsReport {
        x,
        f: fx,
        grad_norm: grad.norm(),
        iterations,
        termination,
    }
}
