//! Comparison of the closed-form voltages with the quadrature oracle.
//!
//! Both share the `O(A)` term `A P(b)`, so their difference shrinks like
//! `A^2` as the anomaly is scaled down. The ratio of the oracle's
//! quadratic part to the closed form's quadratic part is reported as a
//! diagnostic; for an exact second moment of the ellipse it would be 1.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forward::{kernel_and_derivatives, linearized_voltage};
use crate::oracle::{quadrature_voltage, QuadratureSpec};
use crate::params::EllipseParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub scale: f64,
    pub area: f64,
    pub closed_form: f64,
    pub oracle: f64,
    pub difference: f64,
    /// `(oracle - A P) / (closed_form - A P)`.
    pub quadratic_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub t: EllipseParams,
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub samples: Vec<OracleSample>,
    /// Least-squares slope of `log |difference|` against `log scale`.
    pub slope: f64,
}

/// Evaluates both models for `t` with its area multiplied by each scale.
pub fn compare_with_oracle(
    t: &EllipseParams,
    phi_plus: f64,
    phi_minus: f64,
    scales: &[f64],
    spec: &QuadratureSpec,
) -> Result<OracleComparison> {
    let p = kernel_and_derivatives(t.b1, t.b2, phi_plus, phi_minus)?.p;
    let samples = scales
        .iter()
        .map(|&scale| {
            let ts = EllipseParams::new(t.b1, t.b2, t.area * scale, t.aspect, t.xi)?;
            let closed_form = linearized_voltage(&ts, phi_plus, phi_minus)?;
            let oracle = quadrature_voltage(&ts, phi_plus, phi_minus, spec)?;
            let leading = ts.area * p;
            Ok(OracleSample {
                scale,
                area: ts.area,
                closed_form,
                oracle,
                difference: (closed_form - oracle).abs(),
                quadratic_ratio: (oracle - leading) / (closed_form - leading),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = log_log_slope(
        &samples
            .iter()
            .map(|s| (s.scale, s.difference))
            .collect::<Vec<_>>(),
    );
    Ok(OracleComparison {
        t: *t,
        phi_plus,
        phi_minus,
        samples,
        slope,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<_> = [1e-2, 1e-3, 1e-4].iter().map(|&s| (s, 3.0 * s * s)).collect();
        assert!((log_log_slope(&pts) - 2.0).abs() < 1e-12);
    }
}
