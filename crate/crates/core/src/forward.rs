//! Linearized boundary voltages for a small elliptical anomaly.
//!
//! With coincident driving and measuring pairs the Calderon integrand is
//! `P = |grad U0|^2`, where `U0 = log(|z - e+|^2 / |z - e-|^2)`. Writing
//! `U0 = Re F` with `F(z) = 2 log(z - e+) - 2 log(z - e-)` and `h = F'`
//! gives `P = |h|^2`, and every derivative of `P` is a closed-form
//! rational function of `z` via the Wirtinger calculus:
//!
//! ```text
//! dP/dz      = h' conj(h)
//! d2P/dz2    = h'' conj(h)
//! d2P/dz dz* = |h'|^2
//! ```
//!
//! The measured voltage is the second-order moment expansion of the
//! integral of `P` over the ellipse, reparametrized by area and aspect
//! ratio:
//!
//! ```text
//! V = A P(b) + A^2 r / (2 pi) c^T H c + A^2 / (2 pi r) s^T H s
//! ```
//!
//! with `H` the Hessian of `P` at the center, `c = (cos xi, sin xi)` and
//! `s = (-sin xi, cos xi)`.

use std::f64::consts::PI;

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{EitError, Result};
use crate::params::{
    wrap_full_turn, ElectrodeConfig, EllipseParams, MeasurementVector, N_MEAS, N_PARAMS, PAIRS,
};

/// Jacobian of the six measurements with respect to `(b1, b2, A, r, xi)`.
pub type Jacobian = SMatrix<f64, N_MEAS, N_PARAMS>;

fn check_angles(phi_plus: f64, phi_minus: f64) -> Result<()> {
    if !phi_plus.is_finite() || !phi_minus.is_finite() {
        return Err(EitError::InvalidArgument("non-finite electrode angle".into()));
    }
    if wrap_full_turn(phi_plus) == wrap_full_turn(phi_minus) {
        return Err(EitError::CoincidentElectrodes);
    }
    Ok(())
}

/// Background potential of unit current from `phi_plus` to `phi_minus`.
pub fn background_potential(x: f64, y: f64, phi_plus: f64, phi_minus: f64) -> Result<f64> {
    check_angles(phi_plus, phi_minus)?;
    if x * x + y * y > 1.0 {
        return Err(EitError::OutsideDisk { x, y });
    }
    let (sp, cp) = phi_plus.sin_cos();
    let (sm, cm) = phi_minus.sin_cos();
    let dp = (x - cp).powi(2) + (y - sp).powi(2);
    let dm = (x - cm).powi(2) + (y - sm).powi(2);
    if dp <= f64::MIN_POSITIVE || dm <= f64::MIN_POSITIVE {
        return Err(EitError::AtElectrode { x, y });
    }
    Ok((dp / dm).ln())
}

/// `h = F'` and its first three derivatives at `z`.
#[derive(Debug, Clone, Copy)]
struct HolomorphicSeries {
    h: Complex64,
    h1: Complex64,
    h2: Complex64,
    h3: Complex64,
}

impl HolomorphicSeries {
    fn at(x: f64, y: f64, phi_plus: f64, phi_minus: f64) -> Self {
        let z = Complex64::new(x, y);
        let a = (z - Complex64::from_polar(1.0, phi_plus)).inv();
        let b = (z - Complex64::from_polar(1.0, phi_minus)).inv();
        let (a2, b2) = (a * a, b * b);
        let (a3, b3) = (a2 * a, b2 * b);
        let (a4, b4) = (a3 * a, b3 * b);
        Self {
            h: 2.0 * (a - b),
            h1: -2.0 * (a2 - b2),
            h2: 4.0 * (a3 - b3),
            h3: -12.0 * (a4 - b4),
        }
    }
}

/// `P`, its gradient and its Hessian at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelDerivatives {
    pub p: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl KernelDerivatives {
    fn from_series(s: &HolomorphicSeries) -> Self {
        let hc = s.h.conj();
        let d1 = s.h1 * hc;
        let d2 = s.h2 * hc;
        let lap = 2.0 * s.h1.norm_sqr();
        let pxy = -2.0 * d2.im;
        Self {
            p: s.h.norm_sqr(),
            grad: [2.0 * d1.re, -2.0 * d1.im],
            hess: [[2.0 * d2.re + lap, pxy], [pxy, -2.0 * d2.re + lap]],
        }
    }

    /// `u^T H u`.
    pub fn hess_form(&self, u: [f64; 2]) -> f64 {
        let h = &self.hess;
        h[0][0] * u[0] * u[0] + 2.0 * h[0][1] * u[0] * u[1] + h[1][1] * u[1] * u[1]
    }
}

/// Integrand `P = grad U0 . grad w` (with `w = U0`) and its first and
/// second derivatives at `(x, y)`.
pub fn kernel_and_derivatives(
    x: f64,
    y: f64,
    phi_plus: f64,
    phi_minus: f64,
) -> Result<KernelDerivatives> {
    check_angles(phi_plus, phi_minus)?;
    if x * x + y * y >= 1.0 || !x.is_finite() || !y.is_finite() {
        return Err(EitError::NotInterior { x, y });
    }
    Ok(KernelDerivatives::from_series(&HolomorphicSeries::at(
        x, y, phi_plus, phi_minus,
    )))
}

/// Linearized voltage difference between `phi_plus` and `phi_minus` caused
/// by the anomaly `t`.
pub fn linearized_voltage(t: &EllipseParams, phi_plus: f64, phi_minus: f64) -> Result<f64> {
    t.validate()?;
    check_angles(phi_plus, phi_minus)?;
    Ok(voltage_unchecked(t, phi_plus, phi_minus))
}

pub(crate) fn voltage_unchecked(t: &EllipseParams, phi_plus: f64, phi_minus: f64) -> f64 {
    let k = KernelDerivatives::from_series(&HolomorphicSeries::at(t.b1, t.b2, phi_plus, phi_minus));
    let (s, c) = t.xi.sin_cos();
    let major = k.hess_form([c, s]);
    let minor = k.hess_form([-s, c]);
    let a2 = t.area * t.area / (2.0 * PI);
    t.area * k.p + a2 * t.aspect * major + a2 / t.aspect * minor
}

/// Six measurements in `PAIRS` order.
pub fn forward_map(t: &EllipseParams, cfg: &ElectrodeConfig) -> Result<MeasurementVector> {
    t.validate()?;
    cfg.validate()?;
    Ok(MeasurementVector::noiseless(forward_unchecked(t, cfg)))
}

pub(crate) fn forward_unchecked(t: &EllipseParams, cfg: &ElectrodeConfig) -> [f64; N_MEAS] {
    std::array::from_fn(|k| {
        let (i, j) = PAIRS[k];
        voltage_unchecked(t, cfg.phi[i], cfg.phi[j])
    })
}

/// Gradient of one linearized voltage with respect to `(b1, b2, A, r, xi)`.
fn voltage_gradient(t: &EllipseParams, phi_plus: f64, phi_minus: f64) -> [f64; N_PARAMS] {
    let s = HolomorphicSeries::at(t.b1, t.b2, phi_plus, phi_minus);
    let (area, r) = (t.area, t.aspect);
    let k = area * area / (2.0 * PI);
    let rot = Complex64::from_polar(1.0, 2.0 * t.xi);
    let hc = s.h.conj();
    let h1c = s.h1.conj();
    let h2c = s.h2.conj();

    let grad_sq = s.h1.norm_sqr();
    let mixed = rot * s.h2 * hc;
    let sum = r + 1.0 / r;
    let diff = r - 1.0 / r;

    // V = A |h|^2 + k [2 (r + 1/r) |h'|^2 + 2 (r - 1/r) Re(e^{2i xi} h'' conj(h))]
    let dz = area * s.h1 * hc
        + k * (2.0 * sum * s.h2 * h1c + diff * (rot * s.h3 * hc + rot.conj() * h2c * s.h1));
    let d_b1 = 2.0 * dz.re;
    let d_b2 = -2.0 * dz.im;
    let d_area = s.h.norm_sqr() + area / PI * (2.0 * sum * grad_sq + 2.0 * diff * mixed.re);
    let inv_r2 = 1.0 / (r * r);
    let d_r = k * (2.0 * (1.0 - inv_r2) * grad_sq + 2.0 * (1.0 + inv_r2) * mixed.re);
    let d_xi = -4.0 * k * diff * mixed.im;
    [d_b1, d_b2, d_area, d_r, d_xi]
}

/// Jacobian of [`forward_map`] with columns ordered `(b1, b2, A, r, xi)`.
pub fn jacobian(t: &EllipseParams, cfg: &ElectrodeConfig) -> Result<Jacobian> {
    t.validate()?;
    cfg.validate()?;
    Ok(jacobian_unchecked(t, cfg))
}

pub(crate) fn jacobian_unchecked(t: &EllipseParams, cfg: &ElectrodeConfig) -> Jacobian {
    let mut jac = Jacobian::zeros();
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        let row = voltage_gradient(t, cfg.phi[i], cfg.phi[j]);
        for (c, v) in row.into_iter().enumerate() {
            jac[(k, c)] = v;
        }
    }
    jac
}
