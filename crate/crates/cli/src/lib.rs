//! Command-line front end: analytical and Monte Carlo outage runs, parameter
//! sweeps written as CSV with a reproducible manifest, and cross-validation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod config;
pub mod run;
pub mod validate;

use config::{Engine, ExperimentSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Engine(#[from] uav_outage::Error),
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Engine(uav_outage::Error::InvalidConfig { .. }) => EXIT_CONFIG,
            _ => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "uav-outage",
    version,
    about = "Outage probability of multi-tier UAV networks with beam misalignment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment file (TOML). Missing keys take the reference defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo drops per sweep point.
    #[arg(long, global = true)]
    pub drops: Option<u64>,
    /// CSV output; a `<out>.manifest.toml` is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub engine: Option<Engine>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Monte Carlo window radius in metres.
    #[arg(long, global = true)]
    pub window: Option<f64>,
    /// Fill the wall_time_s column. Off by default so reruns are byte-identical.
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Analytical outage of the configured network.
    Analyze,
    /// Monte Carlo outage of the configured network.
    Simulate,
    /// Run the `[sweep]` section of the experiment file.
    Sweep,
    /// Compare the analytical engine with Monte Carlo and report each check.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Validate => "validate",
        }
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentSpec, CliError> {
    let mut spec = match &cli.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    spec.manifest = None;
    if let Some(seed) = cli.seed {
        spec.run.seed = seed;
    }
    if let Some(drops) = cli.drops {
        spec.run.drops = drops;
    }
    if let Some(w) = cli.window {
        spec.run.window_m = w;
    }
    if cli.command == Command::Sweep && spec.sweep.is_none() {
        return Err(CliError::config(
            "sweep",
            "the experiment file has no [sweep] section",
        ));
    }
    spec.validate()?;
    Ok(spec)
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let spec = resolve(cli)?;
    if cli.command == Command::Validate {
        let report = validate::validate(&spec)?;
        println!("{report}");
        return Ok(if report.passed() {
            EXIT_OK
        } else {
            EXIT_VALIDATION
        });
    }
    let engine = match cli.command {
        Command::Analyze => Engine::Analytical,
        Command::Simulate => Engine::Mc,
        _ => cli.engine.unwrap_or(spec.run.engine),
    };
    let rows = run::run_experiment(&spec, engine);
    match &cli.out {
        Some(out) => {
            run::write_outputs(&rows, &spec, engine, cli.command.name(), cli.timings, out)?
        }
        None => {
            let stdout = std::io::stdout();
            run::write_csv(&rows, cli.timings, stdout.lock())?;
        }
    }
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        log::warn!(
            "{failed} of {} rows failed; see the ERROR markers",
            rows.len()
        );
    }
    Ok(EXIT_OK)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.workers {
        Some(0) => Err(CliError::config("--workers", "must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(CliError::config("--workers", e.to_string())),
        },
        None => execute(&cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
