//! Derivative-free simplex search with a hard evaluation budget.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadReport<const N: usize> {
    pub x: [f64; N],
    pub f: f64,
    pub evaluations: usize,
}

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of size
/// `step`, stopping after `budget` evaluations or once the simplex has
/// collapsed. Points where `f` is infinite are simply never accepted.
pub fn nelder_mead<const N: usize, F>(
    mut f: F,
    x0: [f64; N],
    step: f64,
    budget: usize,
) -> NelderMeadReport<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let mut evals = 0;
    let mut eval = |x: &[f64; N], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if budget == 0 {
        return NelderMeadReport {
            x: x0,
            f: f64::INFINITY,
            evaluations: 0,
        };
    }

    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    let f0 = eval(&x0, &mut evals);
    simplex.push((x0, f0));
    for i in 0..N {
        if evals >= budget {
            break;
        }
        let mut x = x0;
        x[i] += step;
        let mut fx = eval(&x, &mut evals);
        if fx.is_infinite() && evals < budget {
            x[i] = x0[i] - step;
            fx = eval(&x, &mut evals);
        }
        simplex.push((x, fx));
    }
    if simplex.len() < N + 1 {
        let best = simplex
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .copied()
            .unwrap_or((x0, f0));
        return NelderMeadReport {
            x: best.0,
            f: best.1,
            evaluations: evals,
        };
    }

    let combine = |a: &[f64; N], b: &[f64; N], t: f64| -> [f64; N] {
        std::array::from_fn(|k| a[k] + t * (b[k] - a[k]))
    };

    while evals < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[N].1);
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if size < 1e-10 || (best.is_finite() && (worst - best).abs() <= 1e-14 * best.abs().max(1e-300)) {
            break;
        }

        let centroid: [f64; N] =
            std::array::from_fn(|k| simplex[..N].iter().map(|(x, _)| x[k]).sum::<f64>() / N as f64);
        let xw = simplex[N].0;
        let xr = combine(&centroid, &xw, -1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            if evals >= budget {
                simplex[N] = (xr, fr);
                break;
            }
            let xe = combine(&centroid, &xw, -2.0);
            let fe = eval(&xe, &mut evals);
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
            continue;
        }
        if evals >= budget {
            break;
        }
        let (xc, fc) = if fr < simplex[N].1 {
            let xc = combine(&centroid, &xr, 0.5);
            (xc, eval(&xc, &mut evals))
        } else {
            let xc = combine(&centroid, &xw, 0.5);
            (xc, eval(&xc, &mut evals))
        };
        if fc < simplex[N].1.min(fr) {
            simplex[N] = (xc, fc);
            continue;
        }
        // shrink toward the best vertex
        let x_best = simplex[0].0;
        for v in simplex.iter_mut().skip(1) {
            if evals >= budget {
                break;
            }
            let x = combine(&x_best, &v.0, 0.5);
            *v = (x, eval(&x, &mut evals));
        }
    }
    let best = simplex
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .copied()
        .expect("simplex is non-empty");
    NelderMeadReport {
        x: best.0,
        f: best.1,
        evaluations: evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic() {
        let r = nelder_mead(
            |x: &[f64; 3]| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + x[2] * x[2],
            [0.0; 3],
            0.5,
            2000,
        );
        assert!(r.f < 1e-12);
        assert!(r.evaluations <= 2000);
    }

    #[test]
    fn respects_budget_and_barrier() {
        let mut calls = 0;
        let r = nelder_mead(
            |x: &[f64; 2]| {
                calls += 1;
                if x[0] < 0.2 {
                    f64::INFINITY
                } else {
                    x[0] * x[0] + x[1] * x[1]
                }
            },
            [0.5, 0.5],
            0.1,
            57,
        );
        assert_eq!(calls, r.evaluations);
        assert!(r.evaluations <= 57);
        assert!(r.x[0] >= 0.2);
    }
}
