//! `chiralflow` command-line runner.
//!
//! Exit codes: 0 ok, 1 criteria verdict false or oracle mismatch, 2 bad
//! configuration or arguments, 3 numeric or I/O failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_profile, Angle, Gauge, ModelName, ModelOverrides, StudyKind};

#[derive(Parser, Debug)]
#[command(name = "chiralflow", version, about = "Chiral excitation flow in synthetic-gauge-field networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelName>,
    /// Ring size (sgf, asgf, chiral) or copy count (ladder; maximum copy count for studies).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Total ring flux, e.g. 1.5pi.
    #[arg(long, global = true, allow_hyphen_values = true)]
    flux: Option<String>,
    /// Auxiliary coupling.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Comma-separated ladder couplings from the end copies inwards.
    #[arg(long, global = true)]
    profile: Option<String>,
    #[arg(long, global = true, value_enum)]
    gauge: Option<Gauge>,
    /// Use two-level sites instead of bosonic modes.
    #[arg(long, global = true)]
    spin: bool,
    /// 1-based node holding the initial excitation.
    #[arg(long, global = true)]
    initial: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (CSV, or JSON for `criteria`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// SVG plot of populations (simulate only).
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Number of time samples.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// End of the time window in units of 1/J₀.
    #[arg(long, global = true)]
    tmax: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve one initial state and write site populations.
    Simulate,
    /// Eigenvalues of the Hamiltonian in the initial state's excitation sector.
    Spectrum,
    /// Check the spectral and chiral-mode criteria; exit 1 if the verdict is false.
    Criteria,
    /// Run a parameter study and write its CSV table.
    Study {
        #[arg(value_enum)]
        kind: StudyKind,
    },
    /// Compare numeric evolution with every closed-form result; exit 1 on mismatch.
    OracleCheck,
    /// Print the resolved configuration, flags applied, as JSON.
    Config,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl From<chiralflow::Error> for Failure {
    fn from(e: chiralflow::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o: {e}"))
    }
}

impl Common {
    pub fn overrides(&self) -> Result<ModelOverrides, Failure> {
        let flux = self
            .flux
            .as_deref()
            .map(|s| s.parse::<Angle>())
            .transpose()
            .map_err(|e| Failure::Config(format!("--flux: {e}")))?;
        let profile = self
            .profile
            .as_deref()
            .map(parse_profile)
            .transpose()
            .map_err(|e| Failure::Config(format!("--profile: {e}")))?;
        Ok(ModelOverrides {
            model: self.model,
            n: self.n,
            flux,
            beta: self.beta,
            profile,
            gauge: self.gauge,
        })
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CHIRALFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("CHIRALFLOW_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Simulate => commands::simulate(&cli.common),
        Command::Spectrum => commands::spectrum(&cli.common),
        Command::Criteria => commands::criteria(&cli.common),
        Command::Study { kind } => commands::study(&cli.common, kind),
        Command::OracleCheck => commands::oracle_check(&cli.common),
        Command::Config => commands::show_config(&cli.common),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
