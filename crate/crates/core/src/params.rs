//! Model and experiment parameter types.
//!
//! The anomaly is described by `t = (b1, b2, A, r, xi)`: center, area,
//! aspect ratio `a1 / a2` and orientation of the major axis. The forward
//! map depends on `(r, xi)` only through the equivalence
//! `(r, xi) ~ (1/r, xi + pi/2)` and is `pi`-periodic in `xi`, so every
//! parameter vector has a canonical representative with `r >= 1` and
//! `xi` in `[0, pi)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{EitError, Result};

/// Largest admissible distance of the anomaly center from the origin.
pub const CENTER_RADIUS_MAX: f64 = 0.9;

/// Smallest admissible angular separation between two electrodes (radians).
pub const MIN_ELECTRODE_GAP: f64 = 0.05;

/// Electrode pairs of the six measurements, in the fixed output order
/// (1,2), (1,3), (1,4), (2,3), (2,4), (3,4) with zero-based indices.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Number of model parameters.
pub const N_PARAMS: usize = 5;

/// Number of measurements produced by four electrodes.
pub const N_MEAS: usize = 6;

/// Parameter names in vector order.
pub const PARAM_NAMES: [&str; N_PARAMS] = ["b1", "b2", "A", "r", "xi"];

/// Elliptical anomaly `t = (b1, b2, A, r, xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseParams {
    pub b1: f64,
    pub b2: f64,
    #[serde(rename = "A")]
    pub area: f64,
    #[serde(rename = "r")]
    pub aspect: f64,
    pub xi: f64,
}

impl EllipseParams {
    /// Builds and validates an anomaly.
    pub fn new(b1: f64, b2: f64, area: f64, aspect: f64, xi: f64) -> Result<Self> {
        let t = Self::new_unchecked(b1, b2, area, aspect, xi);
        t.validate()?;
        Ok(t)
    }

    pub const fn new_unchecked(b1: f64, b2: f64, area: f64, aspect: f64, xi: f64) -> Self {
        Self {
            b1,
            b2,
            area,
            aspect,
            xi,
        }
    }

    pub fn from_array(v: [f64; N_PARAMS]) -> Self {
        Self::new_unchecked(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn to_array(&self) -> [f64; N_PARAMS] {
        [self.b1, self.b2, self.area, self.aspect, self.xi]
    }

    /// Semi-axes `(a1, a2)` implied by `A = pi a1 a2` and `r = a1 / a2`.
    pub fn semi_axes(&self) -> (f64, f64) {
        let a1 = (self.area * self.aspect / PI).sqrt();
        let a2 = (self.area / (PI * self.aspect)).sqrt();
        (a1, a2)
    }

    pub fn center_radius(&self) -> f64 {
        self.b1.hypot(self.b2)
    }

    /// Checks positivity, the center margin and that the ellipse lies inside
    /// the unit disk.
    pub fn validate(&self) -> Result<()> {
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return Err(EitError::InvalidEllipse("non-finite parameter".into()));
        }
        if self.area <= 0.0 {
            return Err(EitError::InvalidEllipse(format!(
                "area A = {} must be positive",
                self.area
            )));
        }
        if self.aspect <= 0.0 {
            return Err(EitError::InvalidEllipse(format!(
                "aspect ratio r = {} must be positive",
                self.aspect
            )));
        }
        let rho = self.center_radius();
        if rho > CENTER_RADIUS_MAX {
            return Err(EitError::InvalidEllipse(format!(
                "center radius {rho} exceeds {CENTER_RADIUS_MAX}"
            )));
        }
        let (a1, a2) = self.semi_axes();
        if rho + a1.max(a2) >= 1.0 {
            return Err(EitError::InvalidEllipse(format!(
                "ellipse reaches the boundary: center radius {rho} + semi-axis {} >= 1",
                a1.max(a2)
            )));
        }
        Ok(())
    }

    pub fn is_admissible(&self) -> bool {
        self.validate().is_ok()
    }

    /// The equivalent parameters `(1/r, xi + pi/2)`.
    pub fn swapped(&self) -> Self {
        Self {
            aspect: 1.0 / self.aspect,
            xi: self.xi + FRAC_PI_2,
            ..*self
        }
    }

    /// Canonical representative: `r >= 1` and `xi` in `[0, pi)`.
    pub fn canonical(&self) -> Self {
        let t = if self.aspect < 1.0 { self.swapped() } else { *self };
        Self {
            xi: wrap_half_turn(t.xi),
            ..t
        }
    }

    /// Representative of the equivalence class of `self` whose `(r, xi)` lies
    /// closest (Euclidean, with `xi` shifted by multiples of `pi`) to the
    /// reference's `(r, xi)`.
    pub fn nearest_equivalent(&self, reference: &Self) -> Self {
        let candidates = [*self, self.swapped()];
        let mut best = *self;
        let mut best_dist = f64::INFINITY;
        for c in candidates {
            let dxi = signed_half_turn_diff(c.xi, reference.xi);
            let xi = reference.xi + dxi;
            let dr = c.aspect - reference.aspect;
            let dist = dr * dr + dxi * dxi;
            if dist < best_dist {
                best_dist = dist;
                best = Self { xi, ..c };
            }
        }
        best
    }
}

/// Reduces an angle into `[0, pi)`.
pub fn wrap_half_turn(angle: f64) -> f64 {
    let w = angle.rem_euclid(PI);
    if w >= PI {
        0.0
    } else {
        w
    }
}

/// Difference `a - b` reduced modulo `pi` into `[-pi/2, pi/2)`.
pub fn signed_half_turn_diff(a: f64, b: f64) -> f64 {
    (a - b + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2
}

/// Four boundary electrodes at angles `phi`.
///
/// Angles are stored in `[0, 2 pi)` in the order given; measurement `k`
/// always uses the electrodes `PAIRS[k]` of that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeConfig {
    pub phi: [f64; 4],
}

impl ElectrodeConfig {
    /// Wraps the angles into `[0, 2 pi)` and validates separation.
    pub fn new(phi: [f64; 4]) -> Result<Self> {
        let cfg = Self::new_unchecked(phi);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn new_unchecked(phi: [f64; 4]) -> Self {
        Self {
            phi: phi.map(wrap_full_turn),
        }
    }

    /// Evenly spaced electrodes `(0, pi/2, pi, 3 pi/2)`.
    pub fn uniform() -> Self {
        Self {
            phi: [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2],
        }
    }

    /// Angles sorted increasingly.
    pub fn sorted(&self) -> Self {
        let mut phi = self.phi;
        phi.sort_by(f64::total_cmp);
        Self { phi }
    }

    /// Cyclic gaps between consecutive sorted electrodes; they sum to `2 pi`.
    pub fn gaps(&self) -> [f64; 4] {
        let s = self.sorted().phi;
        [s[1] - s[0], s[2] - s[1], s[3] - s[2], s[0] + TAU - s[3]]
    }

    pub fn min_gap(&self) -> f64 {
        self.gaps().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi.iter().all(|p| p.is_finite()) {
            return Err(EitError::InvalidElectrodes("non-finite angle".into()));
        }
        let min_gap = self.min_gap();
        if min_gap < MIN_ELECTRODE_GAP {
            return Err(EitError::InvalidElectrodes(format!(
                "electrode separation {min_gap:.6} rad is below delta_min = {MIN_ELECTRODE_GAP} rad"
            )));
        }
        Ok(())
    }

    /// Angles of measurement `k` as `(phi_plus, phi_minus)`.
    pub fn pair(&self, k: usize) -> (f64, f64) {
        let (i, j) = PAIRS[k];
        (self.phi[i], self.phi[j])
    }
}

/// Reduces an angle into `[0, 2 pi)`.
pub fn wrap_full_turn(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Six voltage differences in `PAIRS` order together with the relative
/// noise level they were generated with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementVector {
    pub values: [f64; N_MEAS],
    pub epsilon: f64,
}

impl MeasurementVector {
    pub fn noiseless(values: [f64; N_MEAS]) -> Self {
        Self {
            values,
            epsilon: 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t0() -> EllipseParams {
        EllipseParams::new(0.452, -0.165, 0.025, 2.323, 0.864).unwrap()
    }

    #[test]
    fn rejects_non_positive_area_and_aspect() {
        assert!(EllipseParams::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(EllipseParams::new(0.0, 0.0, 0.01, -1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_center_beyond_margin() {
        assert!(EllipseParams::new(0.91, 0.0, 1e-4, 1.0, 0.0).is_err());
        assert!(EllipseParams::new(0.89, 0.0, 1e-4, 1.0, 0.0).is_ok());
    }

    #[test]
    fn rejects_ellipse_crossing_boundary() {
        // a1 = sqrt(0.1 * 4 / pi) ~ 0.357
        assert!(EllipseParams::new(0.7, 0.0, 0.1, 4.0, 0.0).is_err());
    }

    #[test]
    fn canonical_form() {
        let t = EllipseParams::new_unchecked(0.1, 0.2, 0.01, 0.5, -0.3);
        let c = t.canonical();
        assert!((c.aspect - 2.0).abs() < 1e-15);
        assert!((c.xi - (-0.3 + FRAC_PI_2)).abs() < 1e-15);
        assert_eq!(c.canonical(), c);
        assert!((0.0..PI).contains(&t0().swapped().canonical().xi));
    }

    #[test]
    fn nearest_equivalent_matches_reference_convention() {
        let est = EllipseParams::new_unchecked(0.449, -0.166, 0.0251, 0.444, -0.693);
        let near = est.nearest_equivalent(&t0());
        assert!((near.aspect - 1.0 / 0.444).abs() < 1e-12);
        assert!((near.xi - (-0.693 + FRAC_PI_2)).abs() < 1e-12);
    }

    #[test]
    fn electrode_validation() {
        assert!(ElectrodeConfig::new([0.0, 0.0, 1.0, 2.0]).is_err());
        assert!(ElectrodeConfig::new([0.0, 0.04, 1.0, 2.0]).is_err());
        // wrap-around gap between 6.26 and 0.0 is ~0.023
        assert!(ElectrodeConfig::new([0.0, 1.0, 2.0, 6.26]).is_err());
        let u = ElectrodeConfig::uniform();
        assert!(u.validate().is_ok());
        let g: f64 = u.gaps().iter().sum();
        assert!((g - TAU).abs() < 1e-14);
    }

    #[test]
    fn electrode_angles_are_wrapped() {
        let c = ElectrodeConfig::new([-FRAC_PI_2, 0.0, FRAC_PI_2, PI]).unwrap();
        assert!((c.phi[0] - 3.0 * FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn half_turn_diff_range() {
        for k in -20..20 {
            let a = 0.37 * k as f64;
            let d = signed_half_turn_diff(a, 0.1);
            assert!((-FRAC_PI_2..FRAC_PI_2).contains(&d));
        }
    }
}
