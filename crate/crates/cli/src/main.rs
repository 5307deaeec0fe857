//! `specprobe` — batch front end for spectrum-service characterization:
//! curve fitting, probe sweeps, margin derivation, depletion
//! verification, and ground-truth dumps from the built-in simulator.

mod commands;
mod context;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use specprobe::ErrorClass;

#[derive(Parser)]
#[command(
    name = "specprobe",
    version,
    about = "Channel probing toolkit for optical spectrum services"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario manifest (TOML)
    #[arg(long, global = true, value_name = "FILE")]
    pub scenario: Option<PathBuf>,

    /// Override the scenario seed
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,

    /// Output directory (default: scenario out_dir, then ./out)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Profile documents directory
    #[arg(long, global = true, value_name = "DIR")]
    pub profiles: Option<PathBuf>,

    /// Stdout summary format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Delimited,
}

#[derive(Subcommand)]
pub enum Command {
    /// Fit a Q-over-OSNR curve from a sample file and write a profile document
    Characterize {
        /// Delimited samples: `osnr_db,q_db` with a header
        samples: PathBuf,
        /// Profile id (e.g. sl2p1)
        #[arg(long)]
        id: String,
        /// Modulation format (DP-QPSK, DP-8QAM, DP-16QAM)
        #[arg(long)]
        modulation: String,
        /// Symbol rate in GBd
        #[arg(long)]
        symbol_rate: f64,
        /// OSA integration bandwidth in GHz (default: built-in table)
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Curve provenance (transceiver-specific, type-average, vendor-supplied)
        #[arg(long, default_value = "transceiver-specific")]
        provenance: String,
    },
    /// Run the probe sweep and emit estimation tables
    Probe,
    /// Derive neighbor, end-of-life and implementation margins
    Margins,
    /// Verify near-zero margins by power depletion to the Q threshold
    Deplete,
    /// Dump simulator ground truth and OSA captures
    Simulate,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 = input/parse error, 2 = methodological error, 3 = internal.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<specprobe::Error>() {
        Some(err) => match err.class() {
            ErrorClass::Input => 1,
            ErrorClass::Methodological => 2,
            ErrorClass::Internal => 3,
        },
        None => 1,
    }
}
