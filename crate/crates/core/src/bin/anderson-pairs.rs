use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anderson_pairs::commands::{cmd_correlation, cmd_density, cmd_figures, exit_code, BundleSummary, RunOptions};
use anderson_pairs::config::{preset_names, PresetOverrides, RunConfig};
use anderson_pairs::oracle::oracle_check;
use anderson_pairs::output::validate_bundle;
use anderson_pairs::Error;

/// Two-particle quantum walks on disordered lattices.
///
/// Exit codes: 0 success, 1 check failure, 2 configuration error,
/// 3 resource error.
#[derive(Parser)]
#[command(name = "anderson-pairs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Disorder-averaged single-particle density.
    Density(RunArgs),
    /// Disorder-averaged two-particle correlation matrices and metrics.
    Correlation(RunArgs),
    /// Data behind the figure presets, one directory per panel.
    Figures(FigureArgs),
    /// Compare the closed-form correlations with brute-force Fock evolution.
    OracleCheck(OracleArgs),
    /// Re-check the invariants of a written bundle, or parse a config.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides output.directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "ANDERSON_PAIRS_WORKERS")]
    workers: Option<usize>,
    /// Master seed (overrides ensemble.master_seed).
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            out: self.out.clone(),
            workers: self.workers,
            seed: self.seed,
            progress: true,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct FigureArgs {
    /// Preset name; repeat for several.
    #[arg(long = "preset", required = true)]
    presets: Vec<String>,
    /// Disorder strength for the disordered panels; 0 keeps only clean panels.
    #[arg(long)]
    disorder_strength: Option<f64>,
    /// Realizations for the averaged panels.
    #[arg(long)]
    realizations: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 7)]
    size: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Bundle directory written by `density` or `correlation`.
    bundle: Option<PathBuf>,
    /// Only parse and check a run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
}

enum Outcome {
    Ok,
    CheckFailed,
}

fn print_summary(s: &BundleSummary) {
    println!("wrote {} files to {}", s.files.len(), s.dir.display());
    for m in &s.density_metrics {
        let xi = m.localization.map_or("-".to_string(), |f| format!("{:.3}", f.xi));
        println!("t={} total={:.12} leakage={:.3e} xi={xi}", m.time, m.total, m.edge_leakage);
    }
    for m in &s.pair_metrics {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        println!(
            "t={} total={:.12} diagonal={:.4} parity={} parity_core={} largest={}",
            m.time,
            m.total,
            m.diagonal_fraction,
            opt(m.parity_contrast),
            opt(m.parity_contrast_core),
            m.largest_class.as_deref().unwrap_or("-"),
        );
    }
}

fn execute(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Density(a) => {
            print_summary(&cmd_density(&RunConfig::load(&a.config)?, &a.common.options())?);
        }
        Command::Correlation(a) => {
            print_summary(&cmd_correlation(&RunConfig::load(&a.config)?, &a.common.options())?);
        }
        Command::Figures(a) => {
            let overrides = PresetOverrides {
                disorder_strength: a.disorder_strength,
                realizations: a.realizations,
                master_seed: a.common.seed,
            };
            for dir in cmd_figures(&a.presets, &overrides, &a.common.options())? {
                println!("{}", dir.display());
            }
        }
        Command::OracleCheck(a) => {
            let report = oracle_check(a.size, a.trials, a.seed)?;
            let verdict = if report.passed() { "pass" } else { "FAIL" };
            println!(
                "oracle check N={} trials={}: max error {:.3e} (tolerance {:.0e}) {verdict}",
                report.size,
                report.trials,
                report.max_error(),
                report.tolerance
            );
            if let Some(w) = report.worst.as_ref().filter(|_| !report.passed()) {
                println!(
                    "worst: trial {} q={} r={} t={} variant={} error={:.3e}",
                    w.trial, w.q, w.r, w.time, w.variant, w.error
                );
                return Ok(Outcome::CheckFailed);
            }
        }
        Command::Validate(a) => {
            if a.bundle.is_none() && a.config.is_none() {
                return Err(Error::Config("give a bundle directory or --config".into()));
            }
            if let Some(path) = &a.config {
                RunConfig::load(path)?.to_ensemble()?;
                println!("{}: ok", path.display());
            }
            if let Some(dir) = &a.bundle {
                let report = validate_bundle(dir)?;
                for f in &report.failures {
                    println!("{f}");
                }
                println!(
                    "{}: {} files checked, {} failures",
                    dir.display(),
                    report.files_checked,
                    report.failures.len()
                );
                if !report.passed() {
                    return Ok(Outcome::CheckFailed);
                }
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config(ref m) if m.starts_with("unknown preset")) {
                eprintln!("presets: {}", preset_names().join(", "));
            }
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
