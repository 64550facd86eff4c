//! `magic-bullet`: optimize, sweep, profile, sample and validate the
//! two-target photon state from the command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or config error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{ConfigError, Overrides, Settings};
use report::{artifact_version, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Model(#[from] magic_bullet::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Parser)]
#[command(
    name = "magic-bullet",
    version,
    about = "Two-target photon state: probabilities, profiles, sampling and validation"
)]
struct Cli {
    /// TOML file with flat keys (g, L, plane, variant, window, n, seed, shots, ...).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV files and the JSON report.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Overlap g = <A|B>.
    #[arg(long, global = true, allow_negative_numbers = true)]
    g: Option<f64>,

    /// Slit scale L.
    #[arg(long = "L", visible_alias = "l", global = true)]
    l: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maximize the magic-bullet fraction over g.
    Optimize {
        /// `full` or `approx`.
        #[arg(long)]
        formula: Option<String>,
    },
    /// Tabulate the probabilities on a grid of g values.
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        g_min: Option<f64>,
        #[arg(long)]
        g_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Export the density profile at one plane.
    Profile(ProfileArgs),
    /// Count simulated detections at the targets.
    Sample {
        /// `planeA`, `planeB` or `both`.
        #[arg(long)]
        plane: Option<String>,
        /// `modal_subtraction` or `hard_screen`.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the oracle suite.
    Validate {
        /// `standard` or `conjugate` (a wrong-sign kernel for negative tests).
        #[arg(long)]
        kernel: Option<String>,
        /// Include the quadrature-sigma discrepancy.
        #[arg(long)]
        exact_sigma: bool,
    },
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// `source`, `planeA` or `planeB`.
    #[arg(long)]
    plane: Option<String>,
    /// `modal_subtraction` or `hard_screen`.
    #[arg(long)]
    variant: Option<String>,
    /// Half-width of the export window in units of L.
    #[arg(long)]
    window: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    n: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Optimize { .. } => "optimize",
            Command::Sweep { .. } => "sweep",
            Command::Profile(_) => "profile",
            Command::Sample { .. } => "sample",
            Command::Validate { .. } => "validate",
        }
    }

    fn default_plane(&self) -> &'static str {
        match self {
            Command::Sample { .. } => "both",
            _ => "planeA",
        }
    }

    fn overrides(&self) -> Overrides {
        let mut o = Overrides::default();
        match self {
            Command::Optimize { formula } => o.formula = formula.clone(),
            Command::Sweep { g_min, g_max, steps } => {
                (o.g_min, o.g_max, o.steps) = (*g_min, *g_max, *steps);
            }
            Command::Profile(p) => {
                (o.plane, o.variant, o.window, o.n) = (p.plane.clone(), p.variant.clone(), p.window, p.n);
            }
            Command::Sample { plane, variant, shots, seed } => {
                (o.plane, o.variant, o.shots, o.seed) = (plane.clone(), variant.clone(), *shots, *seed);
            }
            Command::Validate { kernel, exact_sigma } => {
                o.kernel = kernel.clone();
                o.exact_sigma = exact_sigma.then_some(true);
            }
        }
        o
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let file = match &cli.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    let flags = Overrides { g: cli.g, l: cli.l, out_dir: cli.out_dir.clone(), ..cli.command.overrides() };
    let settings = Settings::resolve(flags.over(file), cli.command.default_plane())?;

    let started_at = chrono::Utc::now().to_rfc3339();
    commands::ensure_dir(&settings.out_dir)?;
    let done = match &cli.command {
        Command::Optimize { .. } => commands::optimize(&settings)?,
        Command::Sweep { .. } => commands::sweep_cmd(&settings)?,
        Command::Profile(_) => commands::profile(&settings)?,
        Command::Sample { .. } => commands::sample(&settings)?,
        Command::Validate { .. } => commands::validate_cmd(&settings)?,
    };
    let report = RunReport {
        command: cli.command.name().to_string(),
        config: serde_json::to_value(&settings).expect("serializable"),
        version: artifact_version(),
        outputs: done.outputs,
        tolerances: done.tolerances,
        generator: done.generator,
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
    };
    let path =
        report.write(&settings.out_dir).map_err(|e| CliError::Io { path: settings.out_dir.clone(), source: e })?;
    for line in &done.summary {
        println!("{line}");
    }
    println!("report: {}", path.display());
    Ok(if done.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
