use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qkd_pulseopt::cli::{run, CliCommand};
use qkd_pulseopt::config::{parse_config, Overrides};
use qkd_pulseopt::optimize::Method;
use qkd_pulseopt::security::NuFormula;

/// Mode-mismatch analysis and transmitter tap optimization for
/// Gaussian-modulated CV-QKD links.
#[derive(Parser)]
#[command(name = "qkd-pulseopt", version, about)]
struct Cli {
    /// JSON run-configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (falls back to QKD_PULSEOPT_THREADS, then to the
    /// available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(flatten)]
    overrides: OverrideArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OverrideArgs {
    /// Seed for every random stream in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Signal mean photon number per symbol.
    #[arg(long, global = true)]
    n_bar: Option<f64>,
    /// Channel excess noise (photon units).
    #[arg(long, global = true)]
    n_ch: Option<f64>,
    /// Reconciliation efficiency in [0, 1].
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// RRC roll-off factor in [0, 1].
    #[arg(long, global = true)]
    roll_off: Option<f64>,
    /// Link distance in km (single-point commands).
    #[arg(long, global = true)]
    distance_km: Option<f64>,
    /// Fiber attenuation in dB/km.
    #[arg(long, global = true)]
    attenuation_db_per_km: Option<f64>,
    /// Conditional-eigenvalue formula variant.
    #[arg(long, global = true, value_enum)]
    nu_formula: Option<NuFormula>,
    /// Trainable transmitter tap count (odd).
    #[arg(long, global = true)]
    tx_num_taps: Option<usize>,
    /// Fixed receiver tap count (odd).
    #[arg(long, global = true)]
    rx_num_taps: Option<usize>,
    /// Samples per symbol.
    #[arg(long, global = true)]
    sps: Option<u32>,
    /// Distance grid for sweeps, e.g. 0,10,20 (km).
    #[arg(long, global = true, value_delimiter = ',')]
    distances_km: Option<Vec<f64>>,
    /// Roll-off grid for sweeps.
    #[arg(long, global = true, value_delimiter = ',')]
    roll_offs: Option<Vec<f64>>,
    /// Mean-photon-number grid for sweeps.
    #[arg(long, global = true, value_delimiter = ',')]
    n_bars: Option<Vec<f64>>,
    /// Channel-noise grid for sweeps.
    #[arg(long, global = true, value_delimiter = ',')]
    n_chs: Option<Vec<f64>>,
    /// Skip the optimized variant in sweeps.
    #[arg(long, global = true)]
    no_optimize: bool,
    /// Re-optimize every sweep point from the truncated-RRC start instead
    /// of warm-starting from the neighboring distance.
    #[arg(long, global = true)]
    cold_start: bool,
    /// Optimizer choice.
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    /// Optimizer iteration budget.
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    /// Symbols per Monte Carlo run.
    #[arg(long, global = true)]
    num_symbols: Option<usize>,
    /// DFT length for frequency responses.
    #[arg(long, global = true)]
    num_points: Option<usize>,
    /// Clamp negative skr/kse at zero in CSV output (library values stay raw).
    #[arg(long, global = true)]
    clamp_negative_skr: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a root-raised-cosine tap file.
    Rrc {
        /// Tap count (odd); defaults to rx_num_taps.
        #[arg(long)]
        taps: Option<usize>,
        /// Output path; defaults to <output-dir>/rrc_a<α>_s<sps>_n<taps>.json.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate one transmitter/receiver pair; prints a CSV row.
    Evaluate {
        /// Transmitter tap file.
        #[arg(long)]
        tx: PathBuf,
        /// Receiver tap file.
        #[arg(long)]
        rx: PathBuf,
    },
    /// Optimize transmitter taps against the configured receiver.
    Optimize,
    /// Key rate vs distance for bound/unoptimized/optimized variants.
    Sweep,
    /// Key spectral efficiency over the (n̄, α) grid at one distance.
    KseGrid,
    /// Frequency-response table for tap files (default: tx and rx RRC pair).
    Freqresp {
        /// Tap files; repeatable.
        #[arg(long = "taps")]
        taps: Vec<PathBuf>,
    },
    /// Validate the analytic excess-noise budget by simulation.
    Montecarlo {
        /// Transmitter tap file (default: truncated receiver RRC).
        #[arg(long)]
        tx: Option<PathBuf>,
        /// Receiver tap file (default: configured RRC).
        #[arg(long)]
        rx: Option<PathBuf>,
        /// Optional per-symbol CSV dump path.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn thread_count(cli_threads: Option<usize>) -> Option<usize> {
    cli_threads.or_else(|| {
        std::env::var("QKD_PULSEOPT_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = thread_count(cli.threads) {
        // a failure here only means a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> qkd_pulseopt::Result<()> {
    let o = &cli.overrides;
    let overrides = Overrides {
        seed: o.seed,
        output_dir: o.output_dir.clone(),
        n_bar: o.n_bar,
        n_ch: o.n_ch,
        beta: o.beta,
        roll_off: o.roll_off,
        distance_km: o.distance_km,
        attenuation_db_per_km: o.attenuation_db_per_km,
        nu_formula: o.nu_formula,
        tx_num_taps: o.tx_num_taps,
        rx_num_taps: o.rx_num_taps,
        sps: o.sps,
        distances_km: o.distances_km.clone(),
        roll_offs: o.roll_offs.clone(),
        n_bars: o.n_bars.clone(),
        n_chs: o.n_chs.clone(),
        optimize: o.no_optimize.then_some(false),
        warm_start: o.cold_start.then_some(false),
        method: o.method,
        max_iterations: o.max_iterations,
        num_symbols: o.num_symbols,
        num_points: o.num_points,
        clamp_negative_skr: o.clamp_negative_skr.then_some(true),
    };
    let file_contents = match &cli.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
            qkd_pulseopt::Error::Io {
                path: path.clone(),
                source: e,
            }
        })?),
        None => None,
    };
    let cfg = parse_config(file_contents.as_deref(), &overrides)?;
    let cmd = match cli.command {
        Command::Rrc { taps, output } => CliCommand::Rrc {
            num_taps: taps,
            output,
        },
        Command::Evaluate { tx, rx } => CliCommand::Evaluate { tx, rx },
        Command::Optimize => CliCommand::Optimize,
        Command::Sweep => CliCommand::Sweep,
        Command::KseGrid => CliCommand::KseGrid,
        Command::Freqresp { taps } => CliCommand::Freqresp { taps },
        Command::Montecarlo { tx, rx, dump } => CliCommand::Montecarlo { tx, rx, dump },
    };
    run(&cmd, &cfg)
}
