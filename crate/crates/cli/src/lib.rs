//! The `cs2` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 computation
//! error, 3 I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod sigfile;


#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Computation(#[from] cs2::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Computation(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cs2", version, about = "Blind deconvolution and envelope estimation for CS2 signals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a measurement: x.sig, q_true.sig, tf.csv, meta.json.
    Simulate(Common),
    /// Estimate and apply the deconvolution filter: g.csv, y.sig, report.json.
    Deconv(WithInput),
    /// Estimate the envelope of an already whitened signal: q_hat.sig,
    /// spectrum.csv, report.json.
    Envelope(WithInput),
    /// Full pipeline from a raw measurement: g.csv, q_hat.sig, report.json,
    /// spectrum.csv.
    Pipeline(WithInput),
    /// Monte Carlo R² versus SNR sweep: sweep.csv, runs.csv, sweep.svg.
    Sweep(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat JSON configuration; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Known noise variance; omit to fall back to min-subtraction.
    #[arg(long = "sigma-w2", allow_negative_numbers = true)]
    pub sigma_w2: Option<f64>,
    /// Also export signals as CSV.
    #[arg(long)]
    pub csv: bool,
    /// Record wall-clock timing in report files (breaks byte-identical reruns).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct WithInput {
    #[command(flatten)]
    pub common: Common,
    /// Input signal (.sig).
    #[arg(long)]
    pub input: PathBuf,
    /// Ground-truth envelope (.sig); adds R² to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

/// Parses `CS2_THREADS`; unset means one worker per available processor.
fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var("CS2_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("CS2_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let threads = thread_count()?;
    cs2::par::install(threads, move || match cli.command {
        Command::Simulate(c) => commands::simulate(&c),
        Command::Deconv(a) => commands::deconv(&a),
        Command::Envelope(a) => commands::envelope(&a),
        Command::Pipeline(a) => commands::pipeline(&a),
        Command::Sweep(c) => commands::sweep(&c),
    })
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
