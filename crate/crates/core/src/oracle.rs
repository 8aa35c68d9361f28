//! Brute-force evaluation of the Calderon integral over the elliptical
//! anomaly, without the small-ellipse Taylor expansion.
//!
//! The integrand is assembled pointwise from the gradients of the two
//! background potentials; nothing from the analytic kernel in
//! [`crate::forward`] is used. The ellipse is mapped affinely onto the unit
//! disk and integrated in polar coordinates: Gauss-Legendre in the radius,
//! the periodic trapezoid rule in the angle.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{EitError, Result};
use crate::params::{wrap_full_turn, EllipseParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureScheme {
    /// Gauss-Legendre in radius, trapezoid in angle.
    PolarGaussTrapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    /// Radial Gauss points; the angular rule uses twice as many.
    pub points_per_axis: usize,
    pub target_rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: QuadratureScheme::PolarGaussTrapezoid,
            points_per_axis: 64,
            target_rel_tol: 1e-8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 8 {
            return Err(EitError::InvalidArgument(format!(
                "points_per_axis = {} must be at least 8",
                self.points_per_axis
            )));
        }
        if !(self.target_rel_tol > 0.0 && self.target_rel_tol <= 1e-3) {
            return Err(EitError::InvalidArgument(format!(
                "target_rel_tol = {} must lie in (0, 1e-3]",
                self.target_rel_tol
            )));
        }
        Ok(())
    }
}

/// Resolution is doubled at most this many times.
const MAX_REFINEMENTS: usize = 6;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn grad_log_dist_sq(x: f64, y: f64, angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    let (dx, dy) = (x - c, y - s);
    let d2 = dx * dx + dy * dy;
    [2.0 * dx / d2, 2.0 * dy / d2]
}

/// `grad U0 . grad w` for driving pair `phi` and measuring pair `theta`.
pub fn calderon_integrand(x: f64, y: f64, phi: (f64, f64), theta: (f64, f64)) -> f64 {
    let gp = grad_log_dist_sq(x, y, phi.0);
    let gm = grad_log_dist_sq(x, y, phi.1);
    let wp = grad_log_dist_sq(x, y, theta.0);
    let wm = grad_log_dist_sq(x, y, theta.1);
    let gu = [gp[0] - gm[0], gp[1] - gm[1]];
    let gw = [wp[0] - wm[0], wp[1] - wm[1]];
    gu[0] * gw[0] + gu[1] * gw[1]
}

fn integrate_once(t: &EllipseParams, phi_plus: f64, phi_minus: f64, n_radial: usize) -> f64 {
    let (a1, a2) = t.semi_axes();
    let (s, c) = t.xi.sin_cos();
    let (nodes, weights) = gauss_legendre_unit(n_radial);
    let n_angle = 2 * n_radial;
    let dtheta = TAU / n_angle as f64;
    let pair = (phi_plus, phi_minus);
    let mut total = 0.0;
    for (rho, w) in nodes.iter().zip(&weights) {
        let mut ring = 0.0;
        for k in 0..n_angle {
            let (st, ct) = (k as f64 * dtheta).sin_cos();
            let (u, v) = (a1 * rho * ct, a2 * rho * st);
            let x = t.b1 + c * u - s * v;
            let y = t.b2 + s * u + c * v;
            ring += calderon_integrand(x, y, pair, pair);
        }
        total += w * rho * ring * dtheta;
    }
    a1 * a2 * total
}

/// Integral of the Calderon integrand over the ellipse `t`, refined by
/// doubling until two successive resolutions agree to the target tolerance.
pub fn quadrature_voltage(
    t: &EllipseParams,
    phi_plus: f64,
    phi_minus: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    t.validate()?;
    if wrap_full_turn(phi_plus) == wrap_full_turn(phi_minus) {
        return Err(EitError::CoincidentElectrodes);
    }
    let mut n = spec.points_per_axis;
    let mut prev = integrate_once(t, phi_plus, phi_minus, n);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        n *= 2;
        let next = integrate_once(t, phi_plus, phi_minus, n);
        change = (next - prev).abs() / next.abs().max(f64::MIN_POSITIVE);
        if change < spec.target_rel_tol || next == prev {
            return Ok(next);
        }
        prev = next;
    }
    Err(EitError::QuadratureNotConverged {
        last_change: change,
        points: n,
    })
}
