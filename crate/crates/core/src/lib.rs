//! Linearized electrical impedance tomography for a small elliptical
//! anomaly in the unit disk.
//!
//! - [`forward`]: closed-form boundary voltages and their Jacobian.
//! - [`oracle`]: brute-force quadrature of the exact integral, for checks.
//! - [`inversion`]: regularized least squares with discrepancy-principle
//!   penalty selection.
//! - [`design`]: D-optimal electrode placement.
//! - [`montecarlo`]: repeated noisy inversions and summary statistics.

pub mod design;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod forward;
pub mod inversion;
pub mod montecarlo;
pub mod oracle;
pub mod params;

pub use error::{EitError, Result};
pub use exec::Execution;
pub use params::{
    ElectrodeConfig, EllipseParams, MeasurementVector, CENTER_RADIUS_MAX, MIN_ELECTRODE_GAP, N_MEAS,
    N_PARAMS, PAIRS, PARAM_NAMES,
};
