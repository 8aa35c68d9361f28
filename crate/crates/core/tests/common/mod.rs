#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use eit_core::{ElectrodeConfig, EllipseParams, MIN_ELECTRODE_GAP};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const T0: EllipseParams = EllipseParams::new_unchecked(0.452, -0.165, 0.025, 2.323, 0.864);

/// Valid anomaly whose ellipse stays at least `margin` away from the boundary.
pub fn random_ellipse(rng: &mut ChaCha8Rng, margin: f64) -> EllipseParams {
    loop {
        let rho = 0.8 * rng.random::<f64>().sqrt();
        let angle = rng.random_range(0.0..TAU);
        let t = EllipseParams::new_unchecked(
            rho * angle.cos(),
            rho * angle.sin(),
            rng.random_range(1e-3..0.05),
            rng.random_range(0.3..3.5),
            rng.random_range(-PI..PI),
        );
        let (a1, a2) = t.semi_axes();
        if t.is_admissible() && t.center_radius() + a1.max(a2) < 1.0 - margin {
            return t;
        }
    }
}

/// Four random angles with every cyclic gap above `min_gap`.
pub fn random_electrodes(rng: &mut ChaCha8Rng, min_gap: f64) -> ElectrodeConfig {
    let min_gap = min_gap.max(MIN_ELECTRODE_GAP);
    loop {
        let phi: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
        let cfg = ElectrodeConfig::new_unchecked(phi);
        if cfg.min_gap() > min_gap {
            return cfg;
        }
    }
}
