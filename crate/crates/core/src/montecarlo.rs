//! Repeated noisy inversions at a fixed design and penalty weight.
//!
//! Trial `i` draws its noise from seed `base_seed + i` and is inverted with
//! the same `lambda`; no per-trial penalty re-fit. Summary statistics are
//! taken over converged trials after mapping each estimate to the member
//! of its `(r, xi)` equivalence class nearest a reference, so that the
//! shape parameters form one cluster instead of two.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{EitError, Result};
use crate::exec::{map_indexed, Execution};
use crate::inversion::{minimize, synthesize_data, Init, MinimizeOptions, RegularizationSpec};
use crate::params::{signed_half_turn_diff, ElectrodeConfig, EllipseParams, N_PARAMS};

/// Fraction of converged trials below which a summary is flagged.
pub const DEGRADED_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub seed: u64,
    /// Canonical estimate; NaN when the trial produced no admissible ellipse.
    pub t_hat: EllipseParams,
    pub residual_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    #[serde(deserialize_with = "nan_from_null")]
    pub mean: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub std: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub median: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub q1: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub q3: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub min: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub max: f64,
}

impl ParamStats {
    /// Sample statistics; quartiles by linear interpolation between order
    /// statistics. Returns NaN fields for an empty sample.
    pub fn from_sample(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                median: f64::NAN,
                q1: f64::NAN,
                q3: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            median: quantile_sorted(&v, 0.5),
            q1: quantile_sorted(&v, 0.25),
            q3: quantile_sorted(&v, 0.75),
            min: v[0],
            max: v[n - 1],
        }
    }
}

/// JSON has no NaN; serializers write `null` for it, read back here.
fn nan_from_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Per-parameter statistics, keyed like the CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub b1: ParamStats,
    pub b2: ParamStats,
    #[serde(rename = "A")]
    pub area: ParamStats,
    pub r: ParamStats,
    pub xi: ParamStats,
}

impl ParamSummary {
    pub fn get(&self, index: usize) -> &ParamStats {
        match index {
            0 => &self.b1,
            1 => &self.b2,
            2 => &self.area,
            3 => &self.r,
            4 => &self.xi,
            _ => panic!("parameter index {index} out of range"),
        }
    }
}

/// What the estimates' `(r, xi)` representatives are aligned to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Study mode: the known ground truth.
    Truth(EllipseParams),
    /// Field mode: the coordinate-wise median of the canonical estimates.
    SampleMedian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub label: String,
    pub n_trials: usize,
    pub n_converged: usize,
    pub degraded: bool,
    /// Reference the representatives were aligned to.
    pub reference: EllipseParams,
    pub stats: ParamSummary,
    #[serde(deserialize_with = "nan_from_null")]
    pub mean_residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub label: String,
    pub t0: EllipseParams,
    pub cfg: ElectrodeConfig,
    pub lambda: f64,
    pub epsilon: f64,
    pub n_trials: usize,
    pub base_seed: u64,
    pub reg: RegularizationSpec,
    pub minimize: MinimizeOptions,
    pub exec: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub records: Vec<TrialRecord>,
    pub summary: TrialSummary,
}

/// Runs `n_trials` independent noisy inversions and summarizes them
/// against the ground truth.
pub fn run_study(spec: &StudySpec) -> Result<Study> {
    if spec.n_trials == 0 {
        return Err(EitError::InvalidArgument("n_trials must be at least 1".into()));
    }
    spec.t0.validate()?;
    spec.cfg.validate()?;
    let records = map_indexed(spec.exec, spec.n_trials, |i| -> Result<TrialRecord> {
        let seed = spec.base_seed.wrapping_add(i as u64);
        let g = synthesize_data(&spec.t0, &spec.cfg, spec.epsilon, seed)?;
        let record = match minimize(
            &g,
            &spec.cfg,
            spec.lambda,
            &spec.reg,
            &Init::Multistart,
            &spec.minimize,
        ) {
            Ok(r) => TrialRecord {
                trial_index: i,
                seed,
                t_hat: r.t_star,
                residual_norm: r.residual_norm,
                converged: r.converged,
            },
            Err(EitError::NoFeasibleStart) => TrialRecord {
                trial_index: i,
                seed,
                t_hat: EllipseParams::from_array([f64::NAN; N_PARAMS]),
                residual_norm: f64::NAN,
                converged: false,
            },
            Err(e) => return Err(e),
        };
        Ok(record)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records, Reference::Truth(spec.t0), &spec.label);
    Ok(Study { records, summary })
}

/// Aggregates converged trials, aligning each estimate's `(r, xi)` to the
/// reference representative first.
pub fn summarize(records: &[TrialRecord], reference: Reference, label: &str) -> TrialSummary {
    let converged: Vec<&TrialRecord> = records.iter().filter(|r| r.converged).collect();
    let reference = match reference {
        Reference::Truth(t) => t,
        Reference::SampleMedian => {
            let cols: [ParamStats; N_PARAMS] = std::array::from_fn(|k| {
                let v: Vec<f64> = converged
                    .iter()
                    .map(|r| r.t_hat.canonical().to_array()[k])
                    .collect();
                ParamStats::from_sample(&v)
            });
            EllipseParams::from_array(cols.map(|s| s.median))
        }
    };
    let aligned: Vec<[f64; N_PARAMS]> = converged
        .iter()
        .map(|r| r.t_hat.nearest_equivalent(&reference).to_array())
        .collect();
    let stats: [ParamStats; N_PARAMS] = std::array::from_fn(|k| {
        let v: Vec<f64> = aligned.iter().map(|a| a[k]).collect();
        ParamStats::from_sample(&v)
    });
    let mean_residual_norm = if converged.is_empty() {
        f64::NAN
    } else {
        converged.iter().map(|r| r.residual_norm).sum::<f64>() / converged.len() as f64
    };
    let n_trials = records.len();
    let n_converged = converged.len();
    TrialSummary {
        label: label.to_string(),
        n_trials,
        n_converged,
        degraded: (n_converged as f64) < DEGRADED_THRESHOLD * n_trials as f64,
        reference,
        stats: ParamSummary {
            b1: stats[0],
            b2: stats[1],
            area: stats[2],
            r: stats[3],
            xi: stats[4],
        },
        mean_residual_norm,
    }
}

/// Componentwise absolute error of `a` against `b` after moving `a` to the
/// representative of its equivalence class nearest `b`; the `xi` error is
/// measured modulo `pi`.
pub fn equivalence_distance(a: &EllipseParams, b: &EllipseParams) -> [f64; N_PARAMS] {
    let near = a.nearest_equivalent(b);
    [
        (near.b1 - b.b1).abs(),
        (near.b2 - b.b2).abs(),
        (near.area - b.area).abs(),
        (near.aspect - b.aspect).abs(),
        signed_half_turn_diff(near.xi, b.xi).abs(),
    ]
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn t0() -> EllipseParams {
        EllipseParams::new(0.452, -0.165, 0.025, 2.323, 0.864).unwrap()
    }

    #[test]
    fn quartiles_and_std() {
        let s = ParamStats::from_sample(&[4.0, 1.0, 3.0, 2.0, 5.0]);
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        assert!((s.mean - 3.0).abs() < 1e-15);
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-15);
        let one = ParamStats::from_sample(&[7.0]);
        assert_eq!(one.std, 0.0);
        assert!(ParamStats::from_sample(&[]).mean.is_nan());
    }

    #[test]
    fn distance_to_self_and_equivalent() {
        assert_eq!(equivalence_distance(&t0(), &t0()), [0.0; 5]);
        let d = equivalence_distance(&t0().swapped(), &t0());
        assert!(d.iter().all(|v| *v < 1e-15), "{d:?}");
        let shifted = EllipseParams { xi: t0().xi + PI, ..t0() };
        assert!(equivalence_distance(&shifted, &t0())[4] < 1e-15);
    }

    #[test]
    fn distance_for_reported_optimal_estimate() {
        let est = EllipseParams::new_unchecked(0.449, -0.166, 0.0251, 0.444, -0.693);
        let d = equivalence_distance(&t0(), &est);
        assert!((d[3] - (1.0f64 / 2.323 - 0.444).abs()).abs() < 1e-12);
        let dxi = signed_half_turn_diff(0.864 - FRAC_PI_2, -0.693).abs();
        assert!((d[4] - dxi).abs() < 1e-12);
        assert!(d[3] < 0.02 && d[4] < 0.02);
    }

    #[test]
    fn degraded_flag() {
        let mk = |i: usize, converged: bool| TrialRecord {
            trial_index: i,
            seed: i as u64,
            t_hat: t0(),
            residual_norm: 0.0,
            converged,
        };
        let records: Vec<_> = (0..10).map(|i| mk(i, i < 8)).collect();
        let s = summarize(&records, Reference::Truth(t0()), "x");
        assert!(s.degraded);
        assert_eq!(s.n_converged, 8);
        let records: Vec<_> = (0..10).map(|i| mk(i, i < 9)).collect();
        assert!(!summarize(&records, Reference::Truth(t0()), "x").degraded);
    }

    #[test]
    fn field_mode_uses_sample_median() {
        let records: Vec<_> = (0..5)
            .map(|i| TrialRecord {
                trial_index: i,
                seed: i as u64,
                t_hat: t0().canonical(),
                residual_norm: 0.0,
                converged: true,
            })
            .collect();
        let s = summarize(&records, Reference::SampleMedian, "field");
        assert!((s.reference.aspect - 2.323).abs() < 1e-12);
        assert!(s.stats.r.std < 1e-12);
    }
}
