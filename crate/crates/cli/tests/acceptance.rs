//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::time::{Duration, Instant};

use eit_cli::artifacts::{read_json, DesignArtifact, InversionArtifact, Label};
use eit_cli::commands::{cmd_diag_oracle, cmd_pipeline};
use eit_cli::RunConfig;
use eit_core::forward::{forward_map, jacobian, linearized_voltage};
use eit_core::montecarlo::{equivalence_distance, TrialSummary};
use eit_core::{ElectrodeConfig, EllipseParams, N_MEAS, N_PARAMS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T0: EllipseParams = EllipseParams::new_unchecked(0.452, -0.165, 0.025, 2.323, 0.864);

const JACOBIAN_CASES: usize = 100;
const JACOBIAN_REL_TOL: f64 = 1e-5;
const SYMMETRY_CASES: usize = 1000;
const SYMMETRY_ABS_TOL: f64 = 1e-12;
const ORACLE_MIN_SLOPE: f64 = 1.8;
const MOROZOV_REL_TOL: f64 = 0.05;
const LAMBDA_UNIFORM_REF: f64 = 0.000594;
const LAMBDA_OPTIMAL_REF: f64 = 0.001028;
const LAMBDA_FACTOR: f64 = 10.0;
const NOISELESS_TOL: f64 = 1e-4;
const MEAN_REL_TOL: f64 = 0.10;

const LIMIT_JACOBIAN: Duration = Duration::from_secs(10);
const LIMIT_SYMMETRY: Duration = Duration::from_secs(10);
const LIMIT_ORACLE: Duration = Duration::from_secs(60);
const LIMIT_MOROZOV: Duration = Duration::from_secs(120);
const LIMIT_NOISELESS: Duration = Duration::from_secs(60);
const LIMIT_STUDY: Duration = Duration::from_secs(15 * 60);

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn random_ellipse(rng: &mut ChaCha8Rng, margin: f64) -> EllipseParams {
    loop {
        let rho = 0.8 * rng.random::<f64>().sqrt();
        let a = rng.random_range(0.0..TAU);
        let t = EllipseParams::new_unchecked(
            rho * a.cos(),
            rho * a.sin(),
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

fn random_electrodes(rng: &mut ChaCha8Rng, min_gap: f64) -> ElectrodeConfig {
    loop {
        let cfg = ElectrodeConfig::new_unchecked(std::array::from_fn(|_| rng.random_range(0.0..TAU)));
        if cfg.min_gap() > min_gap {
            return cfg;
        }
    }
}

fn criterion_jacobian() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..JACOBIAN_CASES {
        let t = random_ellipse(&mut rng, 0.02);
        let cfg = random_electrodes(&mut rng, 0.2);
        let j = jacobian(&t, &cfg).map_err(|e| e.to_string())?;
        let base = t.to_array();
        let mut err = 0.0;
        for c in 0..N_PARAMS {
            let h = 1e-6 * base[c].abs().max(1.0);
            let (mut up, mut dn) = (base, base);
            up[c] += h;
            dn[c] -= h;
            let fp = forward_map(&EllipseParams::from_array(up), &cfg).map_err(|e| e.to_string())?;
            let fm = forward_map(&EllipseParams::from_array(dn), &cfg).map_err(|e| e.to_string())?;
            for k in 0..N_MEAS {
                err += ((fp.values[k] - fm.values[k]) / (2.0 * h) - j[(k, c)]).powi(2);
            }
        }
        worst = worst.max(err.sqrt() / j.norm());
    }
    ensure(worst < JACOBIAN_REL_TOL, format!("worst relative error {worst:.2e}"))?;
    Ok(format!("{JACOBIAN_CASES} cases, worst relative Frobenius error {worst:.2e} < {JACOBIAN_REL_TOL:e}"))
}

fn criterion_symmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2025);
    let mut worst = [0.0f64; 5];
    let names = ["reciprocity", "aspect swap", "xi period", "rotation", "permutation"];
    for _ in 0..SYMMETRY_CASES {
        let t = random_ellipse(&mut rng, 0.0);
        let cfg = random_electrodes(&mut rng, 0.05);
        let base = forward_map(&t, &cfg).map_err(|e| e.to_string())?.values;
        let dev = |a: &[f64; N_MEAS], b: &[f64; N_MEAS]| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let recip: [f64; N_MEAS] = std::array::from_fn(|k| {
            let (pp, pm) = cfg.pair(k);
            linearized_voltage(&t, pm, pp).unwrap()
        });
        worst[0] = worst[0].max(dev(&recip, &base));
        worst[1] = worst[1].max(dev(&forward_map(&t.swapped(), &cfg).unwrap().values, &base));
        let shifted = EllipseParams { xi: t.xi + PI, ..t };
        worst[2] = worst[2].max(dev(&forward_map(&shifted, &cfg).unwrap().values, &base));
        let alpha = rng.random_range(-PI..PI);
        let (s, c) = alpha.sin_cos();
        let tr = EllipseParams { b1: c * t.b1 - s * t.b2, b2: s * t.b1 + c * t.b2, xi: t.xi + alpha, ..t };
        let cr = ElectrodeConfig::new_unchecked(cfg.phi.map(|p| p + alpha));
        worst[3] = worst[3].max(dev(&forward_map(&tr, &cr).unwrap().values, &base));
        let p = cfg.phi;
        let perm = ElectrodeConfig::new_unchecked([p[3], p[1], p[0], p[2]]);
        let mut a = base.map(f64::abs);
        let mut b = forward_map(&t, &perm).unwrap().values.map(f64::abs);
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        worst[4] = worst[4].max(dev(&a, &b));
    }
    let detail: Vec<String> = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    ensure(worst.iter().all(|w| *w <= SYMMETRY_ABS_TOL), detail.join(", "))?;
    Ok(format!("{SYMMETRY_CASES} cases, max deviations: {} (tol {SYMMETRY_ABS_TOL:e})", detail.join(", ")))
}

fn criterion_oracle(dir: &Path) -> Check {
    let cfg = RunConfig { output_dir: dir.to_path_buf(), ..RunConfig::default() };
    let cmp = cmd_diag_oracle(&cfg).map_err(|e| e.to_string())?;
    let ratios: Vec<String> = cmp.samples.iter().map(|s| format!("{:.4}", s.quadratic_ratio)).collect();
    ensure(cmp.slope >= ORACLE_MIN_SLOPE, format!("slope {:.4}", cmp.slope))?;
    Ok(format!(
        "log-log slope {:.4} >= {ORACLE_MIN_SLOPE}; quadratic-coefficient ratio (diagnostic) [{}]",
        cmp.slope,
        ratios.join(", ")
    ))
}

fn load_inversion(dir: &Path, label: Label) -> Result<InversionArtifact, String> {
    read_json(&eit_cli::artifacts::inversion_path(dir, label)).map_err(|e| e.to_string())
}

fn criterion_morozov(dir: &Path) -> Check {
    let mut parts = Vec::new();
    for (label, reference) in [(Label::Initial, LAMBDA_UNIFORM_REF), (Label::Optimal, LAMBDA_OPTIMAL_REF)] {
        let inv = load_inversion(dir, label)?;
        let target = inv.target.ok_or("missing discrepancy target")?;
        let mismatch = (inv.result.residual_norm - target).abs() / target;
        let lambda = inv.result.lambda;
        ensure(mismatch <= MOROZOV_REL_TOL, format!("{label:?}: residual mismatch {mismatch:.3}"))?;
        ensure(
            lambda >= reference / LAMBDA_FACTOR && lambda <= reference * LAMBDA_FACTOR,
            format!("{label:?}: lambda {lambda:.3e} vs {reference:e}"),
        )?;
        parts.push(format!(
            "{}: lambda {lambda:.3e} (ref {reference:e}), residual off target by {:.2}%",
            label.as_str(),
            100.0 * mismatch
        ));
    }
    Ok(parts.join("; "))
}

fn criterion_noiseless(dir: &Path) -> Check {
    let cfg = RunConfig { output_dir: dir.to_path_buf(), epsilon: 0.0, trials: 3, ..RunConfig::default() };
    cmd_pipeline(&cfg).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for label in [Label::Initial, Label::Optimal] {
        let inv = load_inversion(dir, label)?;
        let d = equivalence_distance(&inv.result.t_star, &T0);
        worst = d.iter().copied().fold(worst, f64::max);
    }
    ensure(worst < NOISELESS_TOL, format!("largest component error {worst:.2e}"))?;
    Ok(format!("both designs recover the truth, largest component error {worst:.2e} < {NOISELESS_TOL:e}"))
}

fn criterion_study(dir: &Path) -> Check {
    let design: DesignArtifact = read_json(&dir.join("design.json")).map_err(|e| e.to_string())?;
    let summary = |label: Label| -> Result<TrialSummary, String> {
        read_json(&eit_cli::artifacts::summary_path(dir, label)).map_err(|e| e.to_string())
    };
    let (uni, opt) = (summary(Label::Initial)?, summary(Label::Optimal)?);
    let mut failures = Vec::new();

    let ratio = design.result.objective_value / design.initial_value;
    if ratio <= 1.0 {
        failures.push(format!("(i) det ratio {ratio:.3}"));
    }
    for s in [&uni, &opt] {
        for (k, truth) in [(0, T0.b1), (1, T0.b2), (2, T0.area)] {
            let mean = s.stats.get(k).mean;
            if (mean - truth).abs() > MEAN_REL_TOL * truth.abs() {
                failures.push(format!("(ii) {} parameter {k} mean {mean:.4}", s.label));
            }
        }
    }
    let (ru, ro) = (uni.stats.r.mean, opt.stats.r.mean);
    if (ru - 1.0).abs() >= (ru - T0.aspect).abs() {
        failures.push(format!("(iii) initial mean r {ru:.3} not nearer the prior"));
    }
    if (ro - T0.aspect).abs() >= (ro - 1.0).abs() {
        failures.push(format!("(iii) optimal mean r {ro:.3} not nearer the truth"));
    }
    if !(opt.stats.r.std < uni.stats.r.std && opt.stats.xi.std < uni.stats.xi.std) {
        failures.push(format!(
            "(iv) std r {:.3}/{:.3}, std xi {:.3}/{:.3} (optimal/initial)",
            opt.stats.r.std, uni.stats.r.std, opt.stats.xi.std, uni.stats.xi.std
        ));
    }
    let detail = format!(
        "det ratio {ratio:.1}; converged {}/{} and {}/{}; mean r {ru:.3} (initial) vs {ro:.3} (optimal); \
         std r {:.3} -> {:.3}, std xi {:.3} -> {:.3}",
        uni.n_converged, uni.n_trials, opt.n_converged, opt.n_trials,
        uni.stats.r.std, opt.stats.r.std, uni.stats.xi.std, opt.stats.xi.std
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join("; ")))
    }
}

fn criterion_determinism(first: &Path, second: &Path) -> Check {
    let mut names: Vec<_> = std::fs::read_dir(first)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.file_name()))
        .collect();
    names.sort();
    let mut compared = 0;
    for name in &names {
        let a = std::fs::read(first.join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(second.join(name)).map_err(|e| format!("{name:?}: {e}"))?;
        ensure(a == b, format!("{name:?} differs between runs"))?;
        compared += 1;
    }
    ensure(compared >= 12, format!("only {compared} artifacts"))?;
    Ok(format!("{compared} artifacts byte-identical across two runs"))
}

struct Outcome {
    failed: usize,
}

impl Outcome {
    fn record(&mut self, n: u32, name: &str, limit: Duration, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > limit => Err(format!("took {elapsed:.1?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail} [{elapsed:.2?}]"),
            Err(detail) => {
                self.failed += 1;
                println!("FAIL criterion {n} ({name}): {detail} [{elapsed:.2?}]");
            }
        }
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let run_a = tmp.path().join("run-a");
    let run_b = tmp.path().join("run-b");
    let mut out = Outcome { failed: 0 };

    out.record(1, "jacobian vs finite differences", LIMIT_JACOBIAN, criterion_jacobian);
    out.record(2, "forward-map symmetries", LIMIT_SYMMETRY, criterion_symmetry);
    out.record(3, "quadrature oracle", LIMIT_ORACLE, || criterion_oracle(&tmp.path().join("oracle")));

    let study_start = Instant::now();
    let pipeline = |dir: &Path| {
        let cfg = RunConfig { output_dir: dir.to_path_buf(), emit_svg: true, ..RunConfig::default() };
        cmd_pipeline(&cfg).map(|_| ()).map_err(|e| e.to_string())
    };
    let first = pipeline(&run_a);
    let study_elapsed = study_start.elapsed();

    out.record(4, "discrepancy principle", LIMIT_MOROZOV, || {
        first.clone()?;
        criterion_morozov(&run_a)
    });
    out.record(5, "noiseless identifiability", LIMIT_NOISELESS, || {
        criterion_noiseless(&tmp.path().join("noiseless"))
    });
    out.record(6, "two-design study", LIMIT_STUDY.saturating_sub(study_elapsed), || {
        first.clone()?;
        criterion_study(&run_a)
    });
    out.record(7, "determinism", LIMIT_STUDY, || {
        first.clone()?;
        pipeline(&run_b)?;
        criterion_determinism(&run_a, &run_b)
    });

    println!("acceptance: {} of 7 criteria failed", out.failed);
    if out.failed > 0 {
        std::process::exit(1);
    }
}
