//! Persistence: tap-vector JSON files, trace/report/sweep CSV tables.
//!
//! Numbers are written in Rust's shortest round-trip decimal form (both in
//! JSON via serde_json and in CSV via `{}` formatting), so write-then-read
//! reproduces every f64 bit-exactly and repeated runs with equal inputs
//! produce byte-identical artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::SimReport;
use crate::optimize::OptimizationTrace;
use crate::overlap::OverlapCoefficients;
use crate::pulse_shaping::TapVector;
use crate::security::SkrReport;
use crate::sweep::{KseRow, ResponseTable, SweepRow};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TapFile {
    label: String,
    sps: u32,
    roll_off: Option<f64>,
    taps: Vec<f64>,
}

/// Serializes a tap vector to the canonical JSON document.
pub fn taps_to_json(v: &TapVector) -> String {
    let f = TapFile {
        label: v.label().to_string(),
        sps: v.sps(),
        roll_off: v.roll_off(),
        taps: v.taps().to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&f).expect("tap file serialization cannot fail");
    s.push('\n');
    s
}

/// Parses a tap vector from its JSON document, validating structure.
pub fn taps_from_json(text: &str) -> Result<TapVector> {
    let f: TapFile = serde_json::from_str(text)?;
    TapVector::from_parts(f.taps, f.sps, f.label, f.roll_off)
}

pub fn write_taps(path: &Path, v: &TapVector) -> Result<()> {
    fs::write(path, taps_to_json(v)).map_err(|e| Error::io(path, e))
}

pub fn read_taps(path: &Path) -> Result<TapVector> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    taps_from_json(&text)
}

/// Header for single-evaluation CSV rows.
pub const EVALUATION_HEADER: &str =
    "distance_km,tau_ch,c0_sq,isi_power,n_ex,mutual_info,holevo,nu_plus,nu_minus,nu,skr,kse";

/// One evaluation as a CSV row matching [`EVALUATION_HEADER`].
pub fn evaluation_row(distance_km: f64, tau_ch: f64, r: &SkrReport) -> String {
    format!(
        "{distance_km},{tau_ch},{},{},{},{},{},{},{},{},{},{}",
        r.c0_sq,
        r.isi_power,
        r.n_ex,
        r.mutual_info_bits,
        r.holevo_bits,
        r.nu_plus,
        r.nu_minus,
        r.nu,
        r.skr_bits_per_symbol,
        r.kse_bits_per_symbol
    )
}

/// Optimizer trace as CSV (`iteration,best_skr,mean_skr,sigma`).
pub fn trace_to_csv(trace: &OptimizationTrace) -> String {
    let mut out = String::from("iteration,best_skr,mean_skr,sigma\n");
    for p in &trace.iterations {
        let _ = writeln!(out, "{},{},{},{}", p.iteration, p.best_skr, p.mean_skr, p.sigma);
    }
    out
}

/// Overlap coefficients as CSV (`lag,c`).
pub fn overlap_to_csv(ov: &OverlapCoefficients) -> String {
    let mut out = String::from("lag,c\n");
    for (j, v) in ov.iter() {
        let _ = writeln!(out, "{j},{v}");
    }
    out
}

/// Distance-sweep rows as CSV, one row per (grid point, variant).
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "distance_km,roll_off,n_bar,n_ch,variant,tau_ch,c0_sq,isi_power,n_ex,\
         mutual_info,holevo,nu_plus,nu_minus,nu,skr,kse,status\n",
    );
    for r in rows {
        let p = &r.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.distance_km,
            r.roll_off,
            r.n_bar,
            r.n_ch,
            r.variant.as_str(),
            r.tau_ch,
            p.c0_sq,
            p.isi_power,
            p.n_ex,
            p.mutual_info_bits,
            p.holevo_bits,
            p.nu_plus,
            p.nu_minus,
            p.nu,
            p.skr_bits_per_symbol,
            p.kse_bits_per_symbol,
            r.status
        );
    }
    out
}

/// KSE grid as CSV; the argmax summary row carries status "argmax".
pub fn kse_to_csv(rows: &[KseRow], argmax: &KseRow) -> String {
    let mut out = String::from("n_bar,roll_off,distance_km,tau_ch,skr,kse,status\n");
    for r in rows.iter().chain(std::iter::once(argmax)) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n_bar, r.roll_off, r.distance_km, r.tau_ch, r.skr, r.kse, r.status
        );
    }
    out
}

/// Frequency-response table as CSV: `fT` then one dB column per filter.
pub fn response_to_csv(t: &ResponseTable) -> String {
    let mut out = String::from("fT");
    for (label, _) in &t.columns {
        let _ = write!(out, ",{}", label.replace(',', ";"));
    }
    out.push('\n');
    for (i, f) in t.normalized_frequency.iter().enumerate() {
        let _ = write!(out, "{f}");
        for (_, col) in &t.columns {
            let _ = write!(out, ",{}", col[i]);
        }
        out.push('\n');
    }
    out
}

/// Per-symbol Monte Carlo dump (`sent_re,sent_im,received_re,received_im`).
pub fn symbols_to_csv(report: &SimReport) -> String {
    let mut out = String::from("sent_re,sent_im,received_re,received_im\n");
    for (a, y) in report.sent.iter().zip(&report.received) {
        let _ = writeln!(out, "{},{},{},{}", a.re, a.im, y.re, y.im);
    }
    out
}

/// Complex helper for tests that parse the symbol dump back.
pub fn parse_symbol_csv(text: &str) -> Result<Vec<(Complex64, Complex64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let mut parts = line.split(',');
        let mut next = || -> Result<f64> {
            parts
                .next()
                .ok_or_else(|| Error::Config {
                    path: format!("line {}", i + 1),
                    reason: "short row".into(),
                })?
                .parse()
                .map_err(|e| Error::Config {
                    path: format!("line {}", i + 1),
                    reason: format!("{e}"),
                })
        };
        let (sr, si, rr, ri) = (next()?, next()?, next()?, next()?);
        out.push((Complex64::new(sr, si), Complex64::new(rr, ri)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse_shaping::rrc_taps;

    #[test]
    fn taps_roundtrip_bit_exact() {
        let v = rrc_taps(0.1, 4, 101).unwrap();
        let text = taps_to_json(&v);
        let back = taps_from_json(&text).unwrap();
        assert_eq!(v.taps(), back.taps());
        assert_eq!(v.sps(), back.sps());
        assert_eq!(v.label(), back.label());
        assert_eq!(v.roll_off(), back.roll_off());
        // serialization is a fixed point
        assert_eq!(text, taps_to_json(&back));
    }

    #[test]
    fn truncated_file_is_an_error() {
        let v = rrc_taps(0.1, 4, 13).unwrap();
        let text = taps_to_json(&v);
        let cut = &text[..text.len() / 2];
        assert!(taps_from_json(cut).is_err());
    }

    #[test]
    fn unknown_key_is_an_error() {
        let bad = r#"{"label":"x","sps":4,"roll_off":null,"taps":[1.0],"extra":1}"#;
        assert!(taps_from_json(bad).is_err());
    }

    #[test]
    fn evaluation_row_matches_header_arity() {
        let p = crate::security::LinkParams::new(10.0, 0.5, 0.0, 1.0, 0.1).unwrap();
        let r = crate::security::secret_key_rate_from_scalars(1.0, 0.0, &p).unwrap();
        let row = evaluation_row(25.0, 0.5, &r);
        assert_eq!(
            row.split(',').count(),
            EVALUATION_HEADER.split(',').count()
        );
    }
}
