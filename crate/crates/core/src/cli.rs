//! Subcommand implementations behind the binary. Standard output carries
//! either data (`evaluate`, `montecarlo` report) or progress lines prefixed
//! with `# `, so piped CSV stays clean.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io;
use crate::montecarlo::{simulate_transmission, SimConfig};
use crate::optimize::{optimize_gradient, optimize_reinforce, Method};
use crate::overlap::mode_overlap;
use crate::pulse_shaping::{rrc_taps, TapVector};
use crate::security::secret_key_rate;
use crate::sweep::{filter_response_report, sweep_distance, sweep_kse_grid};

/// Relative tolerance for the Monte Carlo vs analytic excess-noise check.
pub const MONTECARLO_TOLERANCE: f64 = 0.05;

/// A parsed subcommand with its file arguments.
#[derive(Debug, Clone)]
pub enum CliCommand {
    /// Generate an RRC tap file.
    Rrc {
        num_taps: Option<usize>,
        output: Option<PathBuf>,
    },
    /// Evaluate one link and print a CSV row to stdout.
    Evaluate { tx: PathBuf, rx: PathBuf },
    /// Optimize transmitter taps; write tap JSON + trace CSV.
    Optimize,
    /// Distance sweep; write figure CSVs.
    Sweep,
    /// KSE grid at one distance.
    KseGrid,
    /// Frequency-response table for a set of tap files.
    Freqresp { taps: Vec<PathBuf> },
    /// Monte Carlo validation of the analytic excess-noise budget.
    Montecarlo {
        tx: Option<PathBuf>,
        rx: Option<PathBuf>,
        dump: Option<PathBuf>,
    },
}

impl CliCommand {
    pub fn name(&self) -> &'static str {
        match self {
            CliCommand::Rrc { .. } => "rrc",
            CliCommand::Evaluate { .. } => "evaluate",
            CliCommand::Optimize => "optimize",
            CliCommand::Sweep => "sweep",
            CliCommand::KseGrid => "kse-grid",
            CliCommand::Freqresp { .. } => "freqresp",
            CliCommand::Montecarlo { .. } => "montecarlo",
        }
    }
}

fn ensure_output_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn clamp_row_values(line: &str, indices: &[usize]) -> String {
    let mut parts: Vec<String> = line.split(',').map(str::to_string).collect();
    for &i in indices {
        if let Some(cell) = parts.get_mut(i) {
            if let Ok(v) = cell.parse::<f64>() {
                if v < 0.0 {
                    *cell = "0".to_string();
                }
            }
        }
    }
    parts.join(",")
}

/// Optionally clamps negative values in the named CSV columns (plot support;
/// the library always returns raw rates).
fn maybe_clamp(cfg: &RunConfig, csv: String, columns: &[&str]) -> String {
    if !cfg.clamp_negative_skr {
        return csv;
    }
    let mut lines = csv.lines();
    let Some(header) = lines.next() else {
        return csv;
    };
    let indices: Vec<usize> = header
        .split(',')
        .enumerate()
        .filter(|(_, name)| columns.contains(name))
        .map(|(i, _)| i)
        .collect();
    let mut out = String::from(header);
    out.push('\n');
    for line in lines {
        out.push_str(&clamp_row_values(line, &indices));
        out.push('\n');
    }
    out
}

/// Runs one subcommand against a validated configuration. If the config
/// file named a command it must match the invoked one.
pub fn run(cmd: &CliCommand, cfg: &RunConfig) -> Result<()> {
    if let Some(file_cmd) = &cfg.command {
        if file_cmd != cmd.name() {
            return Err(Error::Config {
                path: "command".into(),
                reason: format!(
                    "config file names command {file_cmd:?} but {:?} was invoked",
                    cmd.name()
                ),
            });
        }
    }
    match cmd {
        CliCommand::Rrc { num_taps, output } => run_rrc(cfg, *num_taps, output.as_deref()),
        CliCommand::Evaluate { tx, rx } => run_evaluate(cfg, tx, rx),
        CliCommand::Optimize => run_optimize(cfg),
        CliCommand::Sweep => run_sweep(cfg),
        CliCommand::KseGrid => run_kse_grid(cfg),
        CliCommand::Freqresp { taps } => run_freqresp(cfg, taps),
        CliCommand::Montecarlo { tx, rx, dump } => {
            run_montecarlo(cfg, tx.as_deref(), rx.as_deref(), dump.as_deref())
        }
    }
}

fn run_rrc(cfg: &RunConfig, num_taps: Option<usize>, output: Option<&Path>) -> Result<()> {
    let n = num_taps.unwrap_or(cfg.rx_num_taps());
    let v = rrc_taps(cfg.link.roll_off(), cfg.sps(), n)?;
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            ensure_output_dir(cfg)?;
            cfg.output_dir.join(format!(
                "rrc_a{}_s{}_n{}.json",
                cfg.link.roll_off(),
                cfg.sps(),
                n
            ))
        }
    };
    io::write_taps(&path, &v)?;
    println!("# wrote {}", path.display());
    Ok(())
}

fn run_evaluate(cfg: &RunConfig, tx_path: &Path, rx_path: &Path) -> Result<()> {
    let tx = io::read_taps(tx_path)?;
    let rx = io::read_taps(rx_path)?;
    let ov = mode_overlap(&tx, &rx)?;
    let report = secret_key_rate(&ov, &cfg.link)?;
    let row = io::evaluation_row(cfg.distance_km, cfg.link.tau_ch(), &report);
    let mut table = String::from(io::EVALUATION_HEADER);
    table.push('\n');
    table.push_str(&row);
    table.push('\n');
    print!("{}", maybe_clamp(cfg, table, &["skr", "kse"]));
    Ok(())
}

fn run_optimize(cfg: &RunConfig) -> Result<()> {
    ensure_output_dir(cfg)?;
    let rx = rrc_taps(cfg.link.roll_off(), cfg.sps(), cfg.rx_num_taps())?;
    let opt = &cfg.sweep.optimizer;
    println!(
        "# optimizing {} taps against {}-tap receiver ({:?}, seed {})",
        opt.num_taps,
        rx.len(),
        opt.method,
        opt.seed
    );
    let trace = match opt.method {
        Method::Gradient => optimize_gradient(opt, &rx, &cfg.link)?,
        Method::Reinforce => optimize_reinforce(opt, &rx, &cfg.link)?,
    };
    let taps_path = cfg.output_dir.join("optimized_taps.json");
    let trace_path = cfg.output_dir.join("optimize_trace.csv");
    io::write_taps(&taps_path, &trace.final_taps)?;
    write_file(&trace_path, &io::trace_to_csv(&trace))?;
    println!(
        "# final skr {} bits/symbol after {} iterations ({:?})",
        trace.final_skr(),
        trace.iterations.len(),
        trace.status
    );
    println!("# wrote {}", taps_path.display());
    println!("# wrote {}", trace_path.display());
    Ok(())
}

fn run_sweep(cfg: &RunConfig) -> Result<()> {
    ensure_output_dir(cfg)?;
    let rows = sweep_distance(&cfg.sweep)?;
    let csv = maybe_clamp(cfg, io::sweep_to_csv(&rows), &["skr", "kse"]);
    // single noise value → the plain distance figure; a noise grid → the
    // noise-penalty figure
    let name = if cfg.sweep.n_chs.len() == 1 {
        "fig1_skr_vs_distance.csv"
    } else {
        "fig2_skr_vs_distance_noise.csv"
    };
    let path = cfg.output_dir.join(name);
    write_file(&path, &csv)?;
    println!("# wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

fn run_kse_grid(cfg: &RunConfig) -> Result<()> {
    ensure_output_dir(cfg)?;
    let (rows, argmax) = sweep_kse_grid(&cfg.sweep, cfg.distance_km)?;
    let csv = maybe_clamp(cfg, io::kse_to_csv(&rows, &argmax), &["skr", "kse"]);
    let path = cfg.output_dir.join("fig3_kse_grid.csv");
    write_file(&path, &csv)?;
    println!("# wrote {} ({} rows + argmax)", path.display(), rows.len());
    println!(
        "# argmax: n_bar={} roll_off={} kse={}",
        argmax.n_bar, argmax.roll_off, argmax.kse
    );
    Ok(())
}

fn run_freqresp(cfg: &RunConfig, tap_files: &[PathBuf]) -> Result<()> {
    ensure_output_dir(cfg)?;
    let filters: Vec<TapVector> = if tap_files.is_empty() {
        let rx = rrc_taps(cfg.link.roll_off(), cfg.sps(), cfg.rx_num_taps())?;
        let tx = rrc_taps(cfg.link.roll_off(), cfg.sps(), cfg.tx_num_taps())?;
        vec![tx, rx]
    } else {
        tap_files
            .iter()
            .map(|p| io::read_taps(p))
            .collect::<Result<_>>()?
    };
    let table = filter_response_report(&filters, cfg.num_points)?;
    let path = cfg.output_dir.join("fig4_freq_response.csv");
    write_file(&path, &io::response_to_csv(&table))?;
    println!("# wrote {} ({} filters)", path.display(), table.columns.len());
    Ok(())
}

fn run_montecarlo(
    cfg: &RunConfig,
    tx_path: Option<&Path>,
    rx_path: Option<&Path>,
    dump: Option<&Path>,
) -> Result<()> {
    let rx = match rx_path {
        Some(p) => io::read_taps(p)?,
        None => rrc_taps(cfg.link.roll_off(), cfg.sps(), cfg.rx_num_taps())?,
    };
    let tx = match tx_path {
        Some(p) => io::read_taps(p)?,
        None => rx.truncate_centered(cfg.tx_num_taps())?,
    };
    let ov = mode_overlap(&tx, &rx)?;
    let predicted = cfg.link.tau_ch() * cfg.link.n_bar() * ov.isi_power();
    let sim = SimConfig {
        num_symbols: cfg.num_symbols,
        seed: cfg.seed,
        tx,
        rx,
        params: cfg.link,
    };
    let report = simulate_transmission(&sim)?;
    if let Some(p) = dump {
        write_file(p, &io::symbols_to_csv(&report))?;
        println!("# wrote {}", p.display());
    }
    let measured = report.isi_variance;
    let rel = if predicted > 0.0 {
        (measured - predicted).abs() / predicted
    } else {
        measured.abs()
    };
    let verdict = if rel <= MONTECARLO_TOLERANCE {
        "PASS"
    } else {
        "FAIL"
    };
    println!(
        "# montecarlo: {} symbols, seed {}, gain {} (predicted {})",
        cfg.num_symbols,
        cfg.seed,
        report.gain,
        cfg.link.tau_ch().sqrt() * ov.c0()
    );
    println!("predicted_isi_variance,measured_isi_variance,relative_error,tolerance,verdict");
    println!("{predicted},{measured},{rel},{MONTECARLO_TOLERANCE},{verdict}");
    if verdict == "FAIL" {
        return Err(Error::InvalidParameter {
            name: "montecarlo",
            reason: format!(
                "empirical ISI variance {measured} deviates {rel:.3} from analytic {predicted} \
                 (tolerance {MONTECARLO_TOLERANCE})"
            ),
        });
    }
    Ok(())
}
