//! Gaussian-process surrogate with expected-improvement acquisition on the
//! unit-cube design coordinates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal as NormalSampler};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

const LENGTH_SCALES: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];
const NUGGET: f64 = 1e-6;

fn sq_dist(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

struct Gp<'a> {
    x: &'a [[f64; 4]],
    alpha: DVector<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    length: f64,
}

impl<'a> Gp<'a> {
    fn fit(x: &'a [[f64; 4]], y: &DVector<f64>, length: f64) -> Option<(Self, f64)> {
        let n = x.len();
        let k = DMatrix::from_fn(n, n, |i, j| {
            (-0.5 * sq_dist(&x[i], &x[j]) / (length * length)).exp() + if i == j { NUGGET } else { 0.0 }
        });
        let chol = k.cholesky()?;
        let alpha = chol.solve(y);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let log_ml = -0.5 * y.dot(&alpha) - 0.5 * log_det;
        Some((
            Self {
                x,
                alpha,
                chol,
                length,
            },
            log_ml,
        ))
    }

    fn predict(&self, z: &[f64; 4]) -> (f64, f64) {
        let kz = DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .map(|xi| (-0.5 * sq_dist(xi, z) / (self.length * self.length)).exp()),
        );
        let mean = kz.dot(&self.alpha);
        let v = self.chol.solve(&kz);
        let var = (1.0 - kz.dot(&v)).max(0.0);
        (mean, var.sqrt())
    }
}

fn expected_improvement(mean: f64, sd: f64, best: f64, std_normal: &Normal) -> f64 {
    if sd <= 1e-12 {
        return (mean - best).max(0.0);
    }
    let z = (mean - best) / sd;
    (mean - best) * std_normal.cdf(z) + sd * std_normal.pdf(z)
}

/// Next point to evaluate, maximizing expected improvement over random and
/// locally perturbed candidates.
pub(super) fn propose(
    observed: &[([f64; 4], f64)],
    candidates: usize,
    rng: &mut ChaCha8Rng,
) -> [f64; 4] {
    let uniform_draw = |rng: &mut ChaCha8Rng| -> [f64; 4] { std::array::from_fn(|_| rng.random()) };
    let finite_min = observed
        .iter()
        .map(|o| o.1)
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !finite_min.is_finite() {
        return uniform_draw(rng);
    }
    let x: Vec<[f64; 4]> = observed.iter().map(|o| o.0).collect();
    let raw: Vec<f64> = observed
        .iter()
        .map(|o| if o.1.is_finite() { o.1 } else { finite_min - 1.0 })
        .collect();
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let y = DVector::from_iterator(raw.len(), raw.iter().map(|v| (v - mean) / sd));
    let best_y = y.max();
    let best_x = x[y.imax()];

    let Some(gp) = LENGTH_SCALES
        .iter()
        .filter_map(|&l| Gp::fit(&x, &y, l))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(gp, _)| gp)
    else {
        return uniform_draw(rng);
    };

    let std_normal = Normal::standard();
    let jitter = NormalSampler::new(0.0, 0.05).expect("valid sd");
    let mut best = (f64::NEG_INFINITY, best_x);
    for i in 0..candidates.max(1) {
        let z = if i % 4 == 3 {
            std::array::from_fn(|k| (best_x[k] + jitter.sample(rng)).clamp(0.0, 1.0))
        } else {
            uniform_draw(rng)
        };
        let (m, s) = gp.predict(&z);
        let ei = expected_improvement(m, s, best_y, &std_normal);
        if ei > best.0 {
            best = (ei, z);
        }
    }
    best.1
}
