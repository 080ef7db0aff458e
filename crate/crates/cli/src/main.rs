//! Command-line front end: deficit and perimeter reports, approximant
//! fits, the inequality ledger, and stability curves, all driven by a JSON
//! experiment configuration. Exit codes: 0 success, 1 operational error,
//! 2 ledger assert failure.

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use isodef_core::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "isodef")]
#[command(version)]
#[command(about = "Gaussian isoperimetric deficit toolkit", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (JSON, schema_version 1).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Deficit of the named function or set target; writes deficit.json.
    Deficit(CommonArgs),
    /// Minkowski and semigroup boundary measures of a named set, with an
    /// agreement verdict; writes perimeter.json.
    Perimeter(CommonArgs),
    /// Nearest Phi-affine function or half-space for the target; writes
    /// fit.json.
    Fit(CommonArgs),
    /// Full inequality ledger; writes ledger.jsonl, ledger_summary.csv,
    /// ledger_statements.md, verify.json. Exits 2 on any assert failure.
    Verify(CommonArgs),
    /// Deficit-vs-distance curve for one family; writes stability.csv and
    /// stability.json.
    Stability(CommonArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_thread_pool()?;
    match cli.command {
        Command::Deficit(args) => {
            let config = load_config(&args)?;
            let (artifact, path) = isodef_core::cmd_deficit(&config)?;
            if let Some(r) = &artifact.function_report {
                println!(
                    "deficit[{}] = {:.6e} (mean {:.6}, error {:.1e}, rule {})",
                    artifact.target, r.deficit, r.mean, r.error_estimate, r.rule
                );
            }
            if let Some(r) = &artifact.set_report {
                println!(
                    "deficit[{}] = {:.6e} (measure {:.6}, perimeter {:.6}, route {})",
                    artifact.target, r.deficit, r.measure, r.perimeter, r.route
                );
            }
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Perimeter(args) => {
            let config = load_config(&args)?;
            let (artifact, path) = isodef_core::cmd_perimeter(&config)?;
            println!(
                "perimeter[{}]: minkowski {:.6} (err {:.1e}), semigroup {:.6} (err {:.1e})",
                artifact.target,
                artifact.minkowski.value,
                artifact.minkowski.error_estimate,
                artifact.semigroup.value,
                artifact.semigroup.error_estimate,
            );
            if let Some(c) = artifact.closed_form {
                println!("closed form {c:.6}");
            }
            println!(
                "difference {:.2e} against tolerance {:.2e}: {}",
                artifact.difference,
                artifact.tolerance,
                if artifact.agree { "agree" } else { "DISAGREE" }
            );
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit(args) => {
            let config = load_config(&args)?;
            let (artifact, path) = isodef_core::cmd_fit(&config)?;
            let a: Vec<String> = artifact
                .result
                .a
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect();
            println!(
                "fit[{}] {}: objective {:.6e}, a = [{}], b = {:.6}{}{}",
                artifact.target,
                artifact.kind,
                artifact.result.objective,
                a.join(", "),
                artifact.result.b,
                if artifact.result.converged {
                    ""
                } else {
                    ", NOT CONVERGED"
                },
                if artifact.result.degenerate {
                    ", constant limit"
                } else {
                    ""
                },
            );
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let config = load_config(&args)?;
            let artifact = isodef_core::cmd_verify(&config)?;
            println!(
                "{} checks, {} assert failures",
                artifact.total_checks,
                artifact.assert_failures.len()
            );
            for failure in &artifact.assert_failures {
                println!("FAIL {failure}");
            }
            for p in &artifact.outputs {
                println!("wrote {}", p.display());
            }
            if artifact.pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
        Command::Stability(args) => {
            let config = load_config(&args)?;
            let (curve, paths) = isodef_core::cmd_stability(&config)?;
            println!(
                "family {}: {} points kept, {} dropped at the deficit floor",
                curve.family,
                curve.points.len(),
                curve.dropped.len()
            );
            println!(
                "log-log slope {:.4} (95% CI [{:.4}, {:.4}]), spearman {:.4}",
                curve.slope, curve.slope_ci_low, curve.slope_ci_high, curve.spearman
            );
            println!(
                "shape bound C = {:.4} calibrated at parameter {}: {}",
                curve.bound_constant,
                curve.bound_calibrated_at,
                if curve.bound_satisfied {
                    "satisfied"
                } else {
                    "VIOLATED"
                }
            );
            for p in &paths {
                println!("wrote {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out_dir = Some(out.display().to_string());
    }
    Ok(config)
}

/// ISODEF_THREADS caps the rayon pool; unset leaves the rayon default.
fn init_thread_pool() -> Result<()> {
    let Ok(raw) = std::env::var("ISODEF_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .with_context(|| format!("ISODEF_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        anyhow::bail!("ISODEF_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("installing the global thread pool")?;
    Ok(())
}
