use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eit_cli::artifacts::Label;
use eit_cli::commands::{cmd_design, cmd_diag_oracle, cmd_forward, cmd_invert, cmd_mc, cmd_pipeline};
use eit_cli::{configure_threads, CliResult, Overrides, RunConfig, THREADS_ENV};
use eit_core::PARAM_NAMES;

/// Anomaly estimation and electrode design for linearized EIT.
#[derive(Debug, Parser)]
#[command(name = "eit", version)]
struct Cli {
    /// TOML run configuration; defaults are used for missing keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed of the synthesized data.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Write box-plot SVGs next to the pipeline report.
    #[arg(long, global = true)]
    emit_svg: bool,
    /// Monte Carlo trials per design.
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// Relative noise level.
    #[arg(long, global = true, value_name = "X")]
    epsilon: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Forward map of the ground truth and synthesized data.
    Forward {
        #[arg(long, value_enum, default_value = "initial")]
        label: Label,
    },
    /// Regularized inversion of a data file.
    Invert {
        #[arg(long, value_enum, default_value = "initial")]
        label: Label,
        /// Data file; defaults to the one `forward` writes.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// D-optimal electrode placement at an inversion estimate.
    Design {
        /// Inversion file; defaults to the initial-design inversion.
        #[arg(long, value_name = "PATH")]
        inversion: Option<PathBuf>,
    },
    /// Monte Carlo study of one electrode design.
    Mc {
        #[arg(long, value_enum, default_value = "initial")]
        label: Label,
    },
    /// All stages followed by the comparison report.
    Pipeline,
    /// Closed form against quadrature at shrinking anomaly areas.
    DiagOracle,
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads(std::env::var(THREADS_ENV).ok().as_deref())?;
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        emit_svg: cli.emit_svg,
        trials: cli.trials,
        epsilon: cli.epsilon,
    };
    let cfg = RunConfig::load(cli.config.as_deref())?.apply(&overrides);
    match cli.command {
        Command::Forward { label } => {
            let (f, d) = cmd_forward(&cfg, label)?;
            println!("forward map ({}): {:?}", label.as_str(), f.values);
            println!("data (epsilon {}, seed {}): {:?}", d.epsilon, d.seed, d.values);
        }
        Command::Invert { label, data } => {
            let inv = cmd_invert(&cfg, label, data.as_deref())?;
            let r = &inv.result;
            println!("lambda {:.6e}, residual {:.6e}", r.lambda, r.residual_norm);
            println!("estimate {:?}", r.t_star);
        }
        Command::Design { inversion } => {
            let d = cmd_design(&cfg, inversion.as_deref())?;
            println!("electrodes {:?}", d.result.phi_opt.phi);
            println!(
                "det {:.6e} (initial {:.6e}, ratio {:.3})",
                d.result.objective_value,
                d.initial_value,
                d.result.objective_value / d.initial_value
            );
        }
        Command::Mc { label } => {
            let s = cmd_mc(&cfg, label)?;
            println!("{}: {}/{} converged{}", s.label, s.n_converged, s.n_trials, if s.degraded { " (degraded)" } else { "" });
            for (k, name) in PARAM_NAMES.iter().enumerate() {
                let p = s.stats.get(k);
                println!("  {name:>2}: mean {:.5} std {:.5}", p.mean, p.std);
            }
        }
        Command::Pipeline => {
            let out = cmd_pipeline(&cfg)?;
            print!("{}", eit_cli::report::render_markdown(&out.report));
            println!("\nwrote {} files to {}", out.files.len(), cfg.output_dir.display());
        }
        Command::DiagOracle => {
            let cmp = cmd_diag_oracle(&cfg)?;
            for s in &cmp.samples {
                println!(
                    "scale {:.0e}: closed form {:.10e}, quadrature {:.10e}, difference {:.3e}, quadratic ratio {:.6}",
                    s.scale, s.closed_form, s.oracle, s.difference, s.quadratic_ratio
                );
            }
            println!("log-log slope of the difference: {:.4}", cmp.slope);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
