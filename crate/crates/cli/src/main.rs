//! `spreadfract`: bid-ask spread memory and multifractality from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod input;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spreadfract::SignalKind;

use crate::error::{CliError, Result};

const THREADS_ENV: &str = "SPREADFRACT_THREADS";
const DEFAULT_CALENDAR: &str = "09:30-11:30,13:00-15:00";

#[derive(Debug, Parser)]
#[command(
    name = "spreadfract",
    version,
    about = "Memory and multifractal analysis of bid-ask spreads"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rescale tick quotes to a per-interval mean spread series.
    Ingest(IngestArgs),
    /// Autocorrelation of raw returns, raw volatility and adjusted volatility.
    Acf(AcfArgs),
    /// Detrended fluctuation analysis with a power-law fit.
    Dfa(DfaArgs),
    /// Multifractal DFA: h(q), tau(q) and the singularity spectrum.
    Mfdfa(MfdfaArgs),
    /// Write a synthetic series with known scaling.
    Synth(SynthArgs),
    /// Shuffle a series, keeping its values and destroying its order.
    Surrogate(SurrogateArgs),
}

#[derive(Debug, Args)]
struct IoArgs {
    /// Tick CSV, spread CSV, signal CSV, or `synth:KIND[:key=value,...]`.
    #[arg(long)]
    input: String,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SessionArgs {
    /// Trading sessions as `HH:MM-HH:MM[,HH:MM-HH:MM...]`.
    #[arg(long, default_value = DEFAULT_CALENDAR)]
    calendar: String,
    /// Sampling interval in minutes; must divide the trading day.
    #[arg(long, default_value_t = 1)]
    delta_t: u32,
    /// Fail on the first malformed or crossed tick instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Compute returns across within-day gaps and count ACF lags in elements.
    #[arg(long)]
    bridge_gaps: bool,
    /// Seed for `synth:` inputs without an explicit `seed=`; also the
    /// permutation seed of `surrogate`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ScalingArgs {
    /// Series analysed when the input is ticks or spreads.
    #[arg(long, default_value = "adjusted_return", value_parser = parse_kind)]
    series: SignalKind,
    /// Window sizes: `log:N`, `log:MIN:MAX:N`, or a comma list.
    #[arg(long, default_value = "log:20")]
    windows: String,
    /// Window-size range of the power-law fit, `MIN:MAX`.
    #[arg(long)]
    fit_range: Option<String>,
    /// Also search for a two-segment crossover.
    #[arg(long)]
    crossover: bool,
    /// Add the backward window pass so the tail of the profile is used.
    #[arg(long)]
    bidirectional: bool,
    /// Polynomial order removed from each window.
    #[arg(long, default_value_t = 1)]
    detrend_order: usize,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Debug, Args)]
struct AcfArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    session: SessionArgs,
    /// Largest lag; defaults to min(len/4, 10 trading days).
    #[arg(long)]
    max_lag: Option<usize>,
}

#[derive(Debug, Args)]
struct DfaArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    scaling: ScalingArgs,
}

#[derive(Debug, Args)]
struct MfdfaArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    scaling: ScalingArgs,
    /// Orders q: `MIN:MAX:STEP` or a comma list.
    #[arg(long, default_value = "-6:6:0.5", allow_hyphen_values = true)]
    q_grid: String,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Generator, `synth:KIND[:key=value,...]`.
    #[arg(long)]
    input: String,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Seed used when the generator spec has no `seed=`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SurrogateArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    session: SessionArgs,
    /// Series shuffled when the input is ticks or spreads.
    #[arg(long, default_value = "adjusted_return", value_parser = parse_kind)]
    series: SignalKind,
}

fn parse_kind(s: &str) -> std::result::Result<SignalKind, String> {
    s.parse().map_err(|e: spreadfract::Error| e.to_string())
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV}={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let written = match cli.command {
        Command::Ingest(a) => commands::ingest(a)?,
        Command::Acf(a) => commands::acf(a)?,
        Command::Dfa(a) => commands::dfa(a)?,
        Command::Mfdfa(a) => commands::mfdfa(a)?,
        Command::Synth(a) => commands::synth(a)?,
        Command::Surrogate(a) => commands::surrogate(a)?,
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
