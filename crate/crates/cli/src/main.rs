// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod format;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} of the compared entries lie outside the agreement band")]
    Validation(usize),
}

impl From<fsk_energy::Error> for CliError {
    fn from(e: fsk_energy::Error) -> Self {
        match e {
            fsk_energy::Error::Numerical(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fsk-energy",
    version,
    about = "Achievable rates and minimum bit energy of energy-detected FSK and on-off FSK"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rate, spectral efficiency and bit energy over an SNR grid.
    Curve(CurveArgs),
    /// Minimum bit energy for each alphabet size and duty cycle.
    Minbe(MinbeArgs),
    /// Monte Carlo check of the analytic transition probabilities.
    Mc(McArgs),
    /// Vanishing duty-cycle schedule over a (descending) SNR grid.
    Schedule(ScheduleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Modulation {
    Fsk,
    Oofsk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Awgn,
    CoherentRician,
    NoncoherentRician,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long, value_enum, default_value = "fsk")]
    pub modulation: Modulation,
    #[arg(long, value_enum, default_value = "awgn")]
    pub channel: ChannelArg,
    /// Rician factor K (fading channels only); 0 is Rayleigh.
    #[arg(long)]
    pub rician_k: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[arg(long)]
    pub m: u32,
    /// Duty cycle in (0, 1]; required for OOFSK.
    #[arg(long)]
    pub duty: Option<f64>,
    /// SNR grid in dB as start:stop:step.
    #[arg(long, default_value = "-10:20:0.5", allow_hyphen_values = true)]
    pub snr_db: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MinbeArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    /// Comma-separated alphabet sizes.
    #[arg(long)]
    pub m_list: String,
    /// Comma-separated duty cycles (OOFSK only).
    #[arg(long)]
    pub duty_list: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub duty: Option<f64>,
    /// Single SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: f64,
    /// Transmissions per input symbol (at least 10000).
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub epsilon: f64,
    /// SNR grid in dB as start:stop:step; descending grids use a negative step.
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: String,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Curve(a) => emit(a.output.as_ref(), &commands::curve(&a)?),
        Command::Minbe(a) => emit(a.output.as_ref(), &commands::minbe(&a)?),
        Command::Schedule(a) => emit(a.output.as_ref(), &commands::schedule(&a)?),
        Command::Mc(a) => {
            let (report, outside) = commands::mc(&a)?;
            emit(a.output.as_ref(), &report)?;
            if outside > 0 {
                return Err(CliError::Validation(outside));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fsk-energy: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
