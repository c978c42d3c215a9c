//! Run configuration: JSON file + command-line overrides → one validated
//! [`RunConfig`]. No computation starts until every field has passed its
//! owning type's range checks; unknown keys are rejected rather than
//! silently ignored, and every error names the offending field path.

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::optimize::{GradientParams, Method, OptimizerConfig, ReinforceParams};
use crate::security::{LinkParams, NuFormula};
use crate::sweep::SweepSpec;

/// Built-in defaults: 13 trainable transmitter taps against a fixed 101-tap
/// receiver at 4 samples per symbol, 0.2 dB/km fiber, β = 0.95.
pub mod defaults {
    pub const SEED: u64 = 1;
    pub const BETA: f64 = 0.95;
    pub const N_BAR: f64 = 10.0;
    pub const N_CH: f64 = 0.0;
    pub const ROLL_OFF: f64 = 0.1;
    pub const DISTANCE_KM: f64 = 50.0;
    pub const ATTENUATION_DB_PER_KM: f64 = 0.2;
    pub const TX_NUM_TAPS: usize = 13;
    pub const RX_NUM_TAPS: usize = 101;
    pub const SPS: u32 = 4;
    pub const NUM_SYMBOLS: usize = 100_000;
    pub const NUM_POINTS: usize = 4096;
    pub const MAX_ITERATIONS: usize = 2000;

    pub fn distances_km() -> Vec<f64> {
        vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0]
    }
    pub fn roll_offs() -> Vec<f64> {
        vec![0.1, 0.5, 0.9]
    }
    pub fn n_bars() -> Vec<f64> {
        vec![10.0]
    }
    pub fn n_chs() -> Vec<f64> {
        vec![0.0]
    }
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    method: Option<Method>,
    num_taps: Option<usize>,
    max_iterations: Option<usize>,
    reinforce: Option<RawReinforce>,
    gradient: Option<RawGradient>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReinforce {
    population: Option<usize>,
    sigma_init: Option<f64>,
    sigma_decay: Option<f64>,
    baseline_momentum: Option<f64>,
    step_size: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGradient {
    step_size: Option<f64>,
    fd_epsilon: Option<f64>,
    tolerance: Option<f64>,
}

/// The configuration file as written: everything optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<String>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    n_bar: Option<f64>,
    n_ch: Option<f64>,
    beta: Option<f64>,
    roll_off: Option<f64>,
    distance_km: Option<f64>,
    attenuation_db_per_km: Option<f64>,
    nu_formula: Option<NuFormula>,
    tx_num_taps: Option<usize>,
    rx_num_taps: Option<usize>,
    sps: Option<u32>,
    distances_km: Option<Vec<f64>>,
    roll_offs: Option<Vec<f64>>,
    n_bars: Option<Vec<f64>>,
    n_chs: Option<Vec<f64>>,
    optimize: Option<bool>,
    warm_start: Option<bool>,
    optimizer: Option<RawOptimizer>,
    num_symbols: Option<usize>,
    num_points: Option<usize>,
    clamp_negative_skr: Option<bool>,
}

/// Command-line overrides, applied on top of the file values.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub n_bar: Option<f64>,
    pub n_ch: Option<f64>,
    pub beta: Option<f64>,
    pub roll_off: Option<f64>,
    pub distance_km: Option<f64>,
    pub attenuation_db_per_km: Option<f64>,
    pub nu_formula: Option<NuFormula>,
    pub tx_num_taps: Option<usize>,
    pub rx_num_taps: Option<usize>,
    pub sps: Option<u32>,
    pub distances_km: Option<Vec<f64>>,
    pub roll_offs: Option<Vec<f64>>,
    pub n_bars: Option<Vec<f64>>,
    pub n_chs: Option<Vec<f64>>,
    pub optimize: Option<bool>,
    pub warm_start: Option<bool>,
    pub method: Option<Method>,
    pub max_iterations: Option<usize>,
    pub num_symbols: Option<usize>,
    pub num_points: Option<usize>,
    pub clamp_negative_skr: Option<bool>,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Command named in the config file, if any (cross-checked by the CLI).
    pub command: Option<String>,
    /// Every random stream in a run derives from this one seed.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Scalar link for single-point commands (evaluate, optimize, montecarlo).
    pub link: LinkParams,
    pub distance_km: f64,
    pub attenuation_db_per_km: f64,
    pub sweep: SweepSpec,
    pub num_symbols: usize,
    pub num_points: usize,
    pub clamp_negative_skr: bool,
}

impl RunConfig {
    pub fn tx_num_taps(&self) -> usize {
        self.sweep.tx_num_taps
    }
    pub fn rx_num_taps(&self) -> usize {
        self.sweep.rx_num_taps
    }
    pub fn sps(&self) -> u32 {
        self.sweep.sps
    }
}

fn config_err(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Parses (optional) file contents, applies overrides, validates everything.
pub fn parse_config(file_contents: Option<&str>, overrides: &Overrides) -> Result<RunConfig> {
    let raw: RawConfig = match file_contents {
        Some(text) => serde_json::from_str(text)?,
        None => RawConfig::default(),
    };
    let ov = overrides;

    if let Some(cmd) = &raw.command {
        const KNOWN: [&str; 7] = [
            "rrc",
            "evaluate",
            "optimize",
            "sweep",
            "kse-grid",
            "freqresp",
            "montecarlo",
        ];
        if !KNOWN.contains(&cmd.as_str()) {
            return Err(config_err(
                "command",
                format!("unknown command {cmd:?}; expected one of {KNOWN:?}"),
            ));
        }
    }

    let seed = ov.seed.or(raw.seed).unwrap_or(defaults::SEED);
    let n_bar = ov.n_bar.or(raw.n_bar).unwrap_or(defaults::N_BAR);
    let n_ch = ov.n_ch.or(raw.n_ch).unwrap_or(defaults::N_CH);
    let beta = ov.beta.or(raw.beta).unwrap_or(defaults::BETA);
    let roll_off = ov.roll_off.or(raw.roll_off).unwrap_or(defaults::ROLL_OFF);
    let distance_km = ov
        .distance_km
        .or(raw.distance_km)
        .unwrap_or(defaults::DISTANCE_KM);
    let attenuation = ov
        .attenuation_db_per_km
        .or(raw.attenuation_db_per_km)
        .unwrap_or(defaults::ATTENUATION_DB_PER_KM);
    let nu_formula = ov.nu_formula.or(raw.nu_formula).unwrap_or_default();

    if !(distance_km >= 0.0) || !distance_km.is_finite() {
        return Err(config_err(
            "distance_km",
            format!("must be >= 0, got {distance_km}"),
        ));
    }
    if !(attenuation >= 0.0) || !attenuation.is_finite() {
        return Err(config_err(
            "attenuation_db_per_km",
            format!("must be >= 0, got {attenuation}"),
        ));
    }
    let tau_ch = crate::security::channel_transmittance(distance_km, attenuation);
    let link = LinkParams::new(n_bar, tau_ch, n_ch, beta, roll_off)
        .map_err(|e| match e {
            Error::InvalidParameter { name, reason } => config_err(name, reason),
            other => other,
        })?
        .with_nu_formula(nu_formula);

    let tx_num_taps = ov
        .tx_num_taps
        .or(raw.tx_num_taps)
        .unwrap_or(defaults::TX_NUM_TAPS);
    let rx_num_taps = ov
        .rx_num_taps
        .or(raw.rx_num_taps)
        .unwrap_or(defaults::RX_NUM_TAPS);
    let sps = ov.sps.or(raw.sps).unwrap_or(defaults::SPS);
    for (name, v) in [("tx_num_taps", tx_num_taps), ("rx_num_taps", rx_num_taps)] {
        if v == 0 || v % 2 == 0 {
            return Err(config_err(name, format!("must be odd and positive, got {v}")));
        }
    }
    if tx_num_taps > rx_num_taps {
        return Err(config_err(
            "tx_num_taps",
            format!("must not exceed rx_num_taps ({tx_num_taps} > {rx_num_taps})"),
        ));
    }
    if sps == 0 {
        return Err(config_err("sps", "must be >= 1"));
    }

    let raw_opt = raw.optimizer.unwrap_or_default();
    let raw_re = raw_opt.reinforce.unwrap_or_default();
    let raw_gr = raw_opt.gradient.unwrap_or_default();
    let re_defaults = ReinforceParams::default();
    let gr_defaults = GradientParams::default();
    let optimizer = OptimizerConfig {
        method: ov.method.or(raw_opt.method).unwrap_or(Method::Gradient),
        num_taps: raw_opt.num_taps.unwrap_or(tx_num_taps),
        max_iterations: ov
            .max_iterations
            .or(raw_opt.max_iterations)
            .unwrap_or(defaults::MAX_ITERATIONS),
        seed,
        init: None,
        reinforce: ReinforceParams {
            population: raw_re.population.unwrap_or(re_defaults.population),
            sigma_init: raw_re.sigma_init.unwrap_or(re_defaults.sigma_init),
            sigma_decay: raw_re.sigma_decay.unwrap_or(re_defaults.sigma_decay),
            baseline_momentum: raw_re
                .baseline_momentum
                .unwrap_or(re_defaults.baseline_momentum),
            step_size: raw_re.step_size.unwrap_or(re_defaults.step_size),
        },
        gradient: GradientParams {
            step_size: raw_gr.step_size.unwrap_or(gr_defaults.step_size),
            fd_epsilon: raw_gr.fd_epsilon.unwrap_or(gr_defaults.fd_epsilon),
            tolerance: raw_gr.tolerance.unwrap_or(gr_defaults.tolerance),
        },
    };
    if optimizer.num_taps != tx_num_taps {
        return Err(config_err(
            "optimizer.num_taps",
            format!(
                "disagrees with tx_num_taps ({} vs {tx_num_taps})",
                optimizer.num_taps
            ),
        ));
    }
    optimizer.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => config_err(name, reason),
        other => other,
    })?;

    let sweep = SweepSpec {
        distances_km: ov
            .distances_km
            .clone()
            .or(raw.distances_km)
            .unwrap_or_else(defaults::distances_km),
        roll_offs: ov
            .roll_offs
            .clone()
            .or(raw.roll_offs)
            .unwrap_or_else(defaults::roll_offs),
        n_bars: ov.n_bars.clone().or(raw.n_bars).unwrap_or_else(defaults::n_bars),
        n_chs: ov.n_chs.clone().or(raw.n_chs).unwrap_or_else(defaults::n_chs),
        attenuation_db_per_km: attenuation,
        tx_num_taps,
        rx_num_taps,
        sps,
        beta,
        nu_formula,
        optimize: ov.optimize.or(raw.optimize).unwrap_or(true),
        warm_start: ov.warm_start.or(raw.warm_start).unwrap_or(true),
        optimizer,
    };
    sweep.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => config_err(name, reason),
        other => other,
    })?;
    for (name, list) in [
        ("distances_km", &sweep.distances_km),
        ("roll_offs", &sweep.roll_offs),
        ("n_bars", &sweep.n_bars),
        ("n_chs", &sweep.n_chs),
    ] {
        for (i, v) in list.iter().enumerate() {
            if !v.is_finite() {
                return Err(config_err(
                    &format!("{name}[{i}]"),
                    format!("must be finite, got {v}"),
                ));
            }
        }
    }

    let num_symbols = ov
        .num_symbols
        .or(raw.num_symbols)
        .unwrap_or(defaults::NUM_SYMBOLS);
    if num_symbols == 0 {
        return Err(config_err("num_symbols", "must be >= 1"));
    }
    let num_points = ov
        .num_points
        .or(raw.num_points)
        .unwrap_or(defaults::NUM_POINTS);
    if num_points == 0 {
        return Err(config_err("num_points", "must be >= 1"));
    }

    Ok(RunConfig {
        command: raw.command,
        seed,
        output_dir: ov
            .output_dir
            .clone()
            .or(raw.output_dir)
            .unwrap_or_else(|| PathBuf::from(".")),
        link,
        distance_km,
        attenuation_db_per_km: attenuation,
        sweep,
        num_symbols,
        num_points,
        clamp_negative_skr: ov
            .clamp_negative_skr
            .or(raw.clamp_negative_skr)
            .unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = parse_config(Some(r#"{"command":"sweep"}"#), &Overrides::default()).unwrap();
        assert_eq!(cfg.command.as_deref(), Some("sweep"));
        assert_eq!(cfg.tx_num_taps(), 13);
        assert_eq!(cfg.rx_num_taps(), 101);
        assert_eq!(cfg.sps(), 4);
        assert_eq!(cfg.attenuation_db_per_km, 0.2);
        assert_eq!(cfg.link.beta(), 0.95);
    }

    #[test]
    fn flag_overrides_file() {
        let ov = Overrides {
            n_bar: Some(100.0),
            ..Overrides::default()
        };
        let cfg = parse_config(Some(r#"{"n_bar": 10.0}"#), &ov).unwrap();
        assert_eq!(cfg.link.n_bar(), 100.0);
    }

    #[test]
    fn negative_n_bar_names_the_field() {
        let err = parse_config(Some(r#"{"n_bar": -1.0}"#), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_bar"), "message was: {msg}");
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = parse_config(Some(r#"{"n_barr": 10.0}"#), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_barr"), "message was: {msg}");
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_config(Some("{\n  \"n_bar\": ,\n}"), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "message was: {msg}");
    }

    #[test]
    fn unknown_command_is_rejected() {
        let err = parse_config(Some(r#"{"command":"explode"}"#), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("explode"));
    }

    #[test]
    fn nested_optimizer_fields_apply() {
        let text = r#"{
            "optimizer": {
                "method": "reinforce",
                "max_iterations": 123,
                "reinforce": {"population": 8, "sigma_init": 0.01},
                "gradient": {"tolerance": 1e-6}
            }
        }"#;
        let cfg = parse_config(Some(text), &Overrides::default()).unwrap();
        assert_eq!(cfg.sweep.optimizer.method, Method::Reinforce);
        assert_eq!(cfg.sweep.optimizer.max_iterations, 123);
        assert_eq!(cfg.sweep.optimizer.reinforce.population, 8);
        assert_eq!(cfg.sweep.optimizer.reinforce.sigma_init, 0.01);
        assert_eq!(cfg.sweep.optimizer.gradient.tolerance, 1e-6);
        // untouched fields keep defaults
        assert_eq!(
            cfg.sweep.optimizer.reinforce.sigma_decay,
            ReinforceParams::default().sigma_decay
        );
    }

    #[test]
    fn optimizer_seed_follows_run_seed() {
        let ov = Overrides {
            seed: Some(77),
            ..Overrides::default()
        };
        let cfg = parse_config(None, &ov).unwrap();
        assert_eq!(cfg.seed, 77);
        assert_eq!(cfg.sweep.optimizer.seed, 77);
    }

    #[test]
    fn even_tap_count_rejected() {
        let err = parse_config(Some(r#"{"tx_num_taps": 12}"#), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("tx_num_taps"));
    }

    #[test]
    fn nu_formula_parses() {
        let cfg = parse_config(
            Some(r#"{"nu_formula": "published"}"#),
            &Overrides::default(),
        )
        .unwrap();
        assert_eq!(cfg.link.nu_formula(), NuFormula::Published);
        let cfg = parse_config(None, &Overrides::default()).unwrap();
        assert_eq!(cfg.link.nu_formula(), NuFormula::PhotonScaled);
    }
}
