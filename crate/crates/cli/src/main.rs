//! `shortlink` command-line driver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit status 2.
    Usage(String),
    /// Failure while running; exit status 1.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "shortlink", version, about = "Short-packet OFDM link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// BER/PER sweep over an Eb/N0 grid, written as CSV.
    Sweep(RunArgs),
    /// Framed sweep with packet-detection / SIGNAL / data error shares.
    Classify(RunArgs),
    /// Normal-approximation rate curves versus blocklength.
    Bounds(BoundsArgs),
    /// Packet durations for the IEEE 802.11 numerologies.
    Latency(LatencyArgs),
    /// Available codes and hashes of their constructions.
    Codes,
}

/// Every key can also come from `--config`; flags win.
#[derive(Args, Debug)]
struct RunArgs {
    /// File of `key = value` lines using the key names below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Payload code: polar, ldpc, cc or none [default: polar]
    #[arg(long)]
    code: Option<String>,
    /// Message bits per frame; 64, 128, 256 or 512 for coded runs [default: 256]
    #[arg(long)]
    k: Option<String>,
    /// Modulation: bpsk, qpsk, qam16 or qam64 [default: bpsk]
    #[arg(long = "mod")]
    modulation: Option<String>,
    /// Eb/N0 grid in dB: start:step:end, start:end with --ebn0-step, or a
    /// comma list [default: 0:0.5:4]
    #[arg(long, allow_hyphen_values = true)]
    ebn0: Option<String>,
    /// Grid step in dB when --ebn0 is start:end
    #[arg(long)]
    ebn0_step: Option<String>,
    /// Frame limit per point [default: 1000000]
    #[arg(long)]
    frames_max: Option<String>,
    /// Stop a point once this many bit errors are seen [default: 100]
    #[arg(long)]
    min_errors: Option<String>,
    /// Base seed of all random streams [default: 1]
    #[arg(long)]
    seed: Option<String>,
    /// Simulate preamble, SIGNAL field and packet detection [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    framed: Option<String>,
    /// Channel bandwidth in MHz [default: 20]
    #[arg(long)]
    bandwidth_mhz: Option<String>,
    /// Worker threads [default: 1]
    #[arg(long, env = "SHORTLINK_WORKERS")]
    workers: Option<String>,
    /// CSV destination; the manifest goes next to it [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Manifest destination when the CSV goes to stdout [default: stderr]
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Write one noiseless transmitted waveform as little-endian f32 I/Q
    #[arg(long)]
    dump_waveform: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// SNR in dB
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    snr_db: f64,
    /// Target packet error rate, in (0, 1)
    #[arg(long, default_value_t = 1e-5)]
    per: f64,
    /// Channel kind: gaussian, biawgn or all
    #[arg(long, default_value = "all")]
    kind: String,
    /// Blocklengths as start:end or start:step:end
    #[arg(long, default_value = "50:2000")]
    n_range: String,
    /// CSV destination [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LatencyArgs {
    /// Payload length in bits
    #[arg(long, default_value_t = 100)]
    payload: u64,
    /// Standard rows to print: all, or a name such as 802.11a
    #[arg(long, default_value = "all")]
    standard: String,
    /// Print T = L / (2 B S) over a bandwidth grid instead
    #[arg(long)]
    eq1: bool,
    /// Bandwidths in MHz for --eq1
    #[arg(long, value_delimiter = ',', default_value = "20,40,80,160")]
    bandwidth: Vec<f64>,
    /// Spectral efficiency S in bits per channel use for --eq1
    #[arg(long, default_value_t = 0.5)]
    efficiency: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => commands::sweep(a, false),
        Command::Classify(a) => commands::sweep(a, true),
        Command::Bounds(a) => commands::bounds(a),
        Command::Latency(a) => commands::latency(a),
        Command::Codes => commands::codes(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shortlink: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
