//! Finite FIR pulse-shaping filters, principally root-raised-cosine.
//!
//! All filters live on a common sample grid with `sps` samples per symbol
//! period `T`. Tap vectors are plain real sequences; unit-energy
//! normalization (`Σ taps² = 1`) is the convention the rest of the crate
//! assumes, so that the mean photon number of the modulated signal keeps its
//! meaning irrespective of filter shape.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerance used when checking that a tap vector is unit-energy.
pub const UNIT_ENERGY_TOL: f64 = 1e-9;

/// A real-valued FIR filter together with its sampling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TapVector {
    taps: Vec<f64>,
    sps: u32,
    label: String,
    roll_off: Option<f64>,
}

impl TapVector {
    /// Builds a tap vector, validating structure: at least one tap, `sps >= 1`
    /// and every value finite.
    pub fn new(taps: Vec<f64>, sps: u32, label: impl Into<String>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidFilter("tap vector is empty".into()));
        }
        if sps == 0 {
            return Err(Error::InvalidFilter("sps must be >= 1".into()));
        }
        if let Some((k, v)) = taps.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidFilter(format!(
                "tap {k} is not finite ({v})"
            )));
        }
        Ok(Self {
            taps,
            sps,
            label: label.into(),
            roll_off: None,
        })
    }

    /// Same as [`TapVector::new`] but records the roll-off factor the taps
    /// were designed with (kept through persistence for provenance).
    pub fn with_roll_off(mut self, roll_off: f64) -> Self {
        self.roll_off = Some(roll_off);
        self
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn sps(&self) -> u32 {
        self.sps
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn roll_off(&self) -> Option<f64> {
        self.roll_off
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Index of the center tap. Meaningful for odd-length filters.
    pub fn center(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// `Σ taps²`.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    pub fn is_unit_energy(&self) -> bool {
        (self.energy() - 1.0).abs() <= UNIT_ENERGY_TOL
    }

    /// Returns a unit-energy copy of this filter. Idempotent.
    ///
    /// Rejects the all-zero vector, which has no direction to preserve.
    pub fn normalize_energy(&self) -> Result<TapVector> {
        let energy = self.energy();
        if energy <= 0.0 || !energy.is_finite() {
            return Err(Error::InvalidFilter(
                "cannot normalize a zero-energy tap vector".into(),
            ));
        }
        let scale = energy.sqrt();
        let mut out = self.clone();
        for t in &mut out.taps {
            *t /= scale;
        }
        Ok(out)
    }

    /// Flips the overall sign so the center tap is nonnegative. The objective
    /// in this crate is invariant to a global sign, so this fixes the gauge
    /// and makes optimizer outputs comparable.
    pub fn canonicalize_sign(&self) -> TapVector {
        let mut out = self.clone();
        if out.taps[out.center()] < 0.0 {
            for t in &mut out.taps {
                *t = -*t;
            }
        }
        out
    }

    pub(crate) fn from_parts(
        taps: Vec<f64>,
        sps: u32,
        label: String,
        roll_off: Option<f64>,
    ) -> Result<TapVector> {
        let mut v = TapVector::new(taps, sps, label)?;
        v.roll_off = roll_off;
        Ok(v)
    }

    /// Center `num_taps` taps of this filter, renormalized to unit energy.
    /// The standard initialization for a short trainable transmitter filter.
    pub fn truncate_centered(&self, num_taps: usize) -> Result<TapVector> {
        if num_taps % 2 == 0 {
            return Err(Error::InvalidFilter(format!(
                "truncation length must be odd, got {num_taps}"
            )));
        }
        if num_taps > self.len() {
            return Err(Error::InvalidFilter(format!(
                "truncation length {num_taps} exceeds filter length {}",
                self.len()
            )));
        }
        let half = (num_taps - 1) / 2;
        let mid = self.center();
        let taps = self.taps[mid - half..=mid + half].to_vec();
        let mut v = TapVector::new(
            taps,
            self.sps,
            format!("{}|truncated{}", self.label, num_taps),
        )?;
        v.roll_off = self.roll_off;
        v.normalize_energy()
    }
}

/// Magnitude response of a filter on a dense normalized-frequency grid.
///
/// `normalized_frequency[k] = k * sps / num_points`, i.e. the axis is `f·T`
/// over one full DFT period `[0, sps)`; the symbol-rate Nyquist edge sits at
/// `f·T = sps/2`. `magnitude_db` holds `20·log10 |U(f)|` of the zero-padded
/// transform, so the DC entry equals `20·log10 |Σ taps|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub normalized_frequency: Vec<f64>,
    pub magnitude_db: Vec<f64>,
}

/// Root-raised-cosine impulse response sampled at `t_k = (k - (N-1)/2)/sps`
/// symbol periods, truncated to `num_taps` and normalized to unit energy.
///
/// The closed form has removable singularities at `t = 0` and
/// `t = ±T/(4α)`; both are evaluated from their analytic limits. The filter
/// is generated symmetric by construction (upper half mirrored), so
/// `taps[k] == taps[N-1-k]` holds exactly.
pub fn rrc_taps(roll_off: f64, sps: u32, num_taps: usize) -> Result<TapVector> {
    if !(0.0..=1.0).contains(&roll_off) || !roll_off.is_finite() {
        return Err(Error::InvalidParameter {
            name: "roll_off",
            reason: format!("must be in [0, 1], got {roll_off}"),
        });
    }
    if sps == 0 {
        return Err(Error::InvalidParameter {
            name: "sps",
            reason: "must be >= 1".into(),
        });
    }
    if num_taps == 0 || num_taps % 2 == 0 {
        return Err(Error::InvalidParameter {
            name: "num_taps",
            reason: format!("must be odd and positive, got {num_taps}"),
        });
    }
    let raw = rrc_impulse(roll_off, sps, num_taps);
    let v = TapVector::new(
        raw,
        sps,
        format!("rrc(alpha={roll_off},sps={sps},taps={num_taps})"),
    )?;
    Ok(v.normalize_energy()?.with_roll_off(roll_off))
}

/// Unnormalized RRC samples (symbol period T = 1, unit amplitude scale).
/// Exposed to the tests that measure truncation energy loss.
pub(crate) fn rrc_impulse(roll_off: f64, sps: u32, num_taps: usize) -> Vec<f64> {
    let mid = (num_taps - 1) / 2;
    let mut taps = vec![0.0; num_taps];
    for k in mid..num_taps {
        let t = (k - mid) as f64 / sps as f64;
        let h = rrc_sample(roll_off, t);
        taps[k] = h;
        taps[num_taps - 1 - k] = h; // mirror: symmetry exact by construction
    }
    taps
}

fn rrc_sample(alpha: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0 + alpha * (4.0 / PI - 1.0);
    }
    // t = ±T/(4α) zeroes the denominator; use the analytic limit there.
    if alpha > 0.0 && ((4.0 * alpha * t).abs() - 1.0).abs() < 1e-9 {
        let a = PI / (4.0 * alpha);
        return alpha / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - alpha)).sin() + 4.0 * alpha * t * (PI * t * (1.0 + alpha)).cos();
    let den = PI * t * (1.0 - (4.0 * alpha * t).powi(2));
    num / den
}

/// Magnitude of the zero-padded DFT of `filter` on `num_points` bins.
///
/// `num_points` must be at least the filter length (otherwise bins alias and
/// the response is ambiguous).
pub fn frequency_response(filter: &TapVector, num_points: usize) -> Result<FrequencyResponse> {
    if num_points < filter.len() {
        return Err(Error::InvalidParameter {
            name: "num_points",
            reason: format!(
                "must be >= filter length {}, got {num_points}",
                filter.len()
            ),
        });
    }
    let n = num_points as f64;
    let mut freq = Vec::with_capacity(num_points);
    let mut mag = Vec::with_capacity(num_points);
    for k in 0..num_points {
        let w = -2.0 * PI * k as f64 / n;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (i, &t) in filter.taps().iter().enumerate() {
            let (s, c) = (w * i as f64).sin_cos();
            re += t * c;
            im += t * s;
        }
        let m = (re * re + im * im).sqrt().max(f64::MIN_POSITIVE);
        freq.push(k as f64 * filter.sps() as f64 / n);
        mag.push(20.0 * m.log10());
    }
    Ok(FrequencyResponse {
        normalized_frequency: freq,
        magnitude_db: mag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tap_is_unit() {
        let v = rrc_taps(0.1, 4, 1).unwrap();
        assert_eq!(v.taps(), &[1.0]);
    }

    #[test]
    fn zero_roll_off_reduces_to_sinc() {
        // α = 0 → sinc(t/T): exact zeros at every nonzero multiple of T.
        let v = rrc_taps(0.0, 4, 101).unwrap();
        let mid = v.center();
        for j in 1..=12usize {
            let tap = v.taps()[mid + 4 * j];
            assert!(tap.abs() < 1e-12, "sinc zero at t={j}T: {tap}");
        }
    }

    #[test]
    fn symmetry_is_exact() {
        let v = rrc_taps(0.1, 4, 101).unwrap();
        let n = v.len();
        for k in 0..n / 2 {
            assert_eq!(v.taps()[k], v.taps()[n - 1 - k], "tap {k} not mirrored");
        }
    }

    #[test]
    fn singularity_matches_nearby_limit() {
        // α = 0.25 puts the singular point at t = T, which lies on the sps=4
        // grid. The special-case value must agree with the general formula
        // approached from either side.
        let alpha = 0.25;
        let exact = rrc_sample(alpha, 1.0);
        for side in [1.0 + 1e-7, 1.0 - 1e-7] {
            let near = rrc_sample(alpha, side);
            let rel = ((near - exact) / exact).abs();
            assert!(rel < 1e-5, "limit mismatch at t={side}: rel={rel:e}");
        }
    }

    #[test]
    fn unit_energy_after_normalization() {
        for (alpha, n) in [(0.1, 13), (0.1, 101), (0.5, 101), (0.9, 1001), (0.25, 33)] {
            let v = rrc_taps(alpha, 4, n).unwrap();
            assert!((v.energy() - 1.0).abs() < 1e-12, "alpha={alpha} n={n}");
        }
    }

    #[test]
    fn truncation_energy_loss_is_small_for_long_filters() {
        // RRC tails decay as 1/t²; for num_taps >= 25·sps the raw truncated
        // energy must be within 1e-3 of the (numerically) full energy.
        let sps = 4;
        let reference: f64 = rrc_impulse(0.1, sps, 8001).iter().map(|t| t * t).sum();
        for num_taps in [101usize, 201, 401] {
            assert!(num_taps >= 25 * sps as usize);
            let e: f64 = rrc_impulse(0.1, sps, num_taps).iter().map(|t| t * t).sum();
            let deficit = 1.0 - e / reference;
            assert!(deficit < 1e-3, "deficit {deficit:e} at {num_taps} taps");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(rrc_taps(-0.1, 4, 101).is_err());
        assert!(rrc_taps(1.1, 4, 101).is_err());
        assert!(rrc_taps(0.1, 4, 100).is_err(), "even tap count");
        assert!(rrc_taps(0.1, 4, 0).is_err());
        assert!(rrc_taps(0.1, 0, 101).is_err());
    }

    #[test]
    fn normalize_three_four_five() {
        let v = TapVector::new(vec![3.0, 4.0], 1, "t").unwrap();
        let n = v.normalize_energy().unwrap();
        assert_eq!(n.taps(), &[0.6, 0.8]);
    }

    #[test]
    fn normalize_is_idempotent() {
        let v = rrc_taps(0.3, 2, 51).unwrap();
        let again = v.normalize_energy().unwrap();
        for (a, b) in v.taps().iter().zip(again.taps()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_rejects_zero_vector() {
        let v = TapVector::new(vec![0.0, 0.0], 1, "z").unwrap();
        assert!(v.normalize_energy().is_err());
    }

    #[test]
    fn rejects_non_finite_taps() {
        assert!(TapVector::new(vec![1.0, f64::NAN], 1, "bad").is_err());
        assert!(TapVector::new(vec![f64::INFINITY], 1, "bad").is_err());
        assert!(TapVector::new(vec![], 1, "empty").is_err());
    }

    #[test]
    fn delta_filter_response_is_flat() {
        let v = TapVector::new(vec![1.0], 1, "delta").unwrap();
        let r = frequency_response(&v, 64).unwrap();
        for m in &r.magnitude_db {
            assert!(m.abs() < 1e-12);
        }
    }

    #[test]
    fn dc_bin_equals_tap_sum() {
        let v = rrc_taps(0.1, 4, 101).unwrap();
        let r = frequency_response(&v, 512).unwrap();
        let dc = 20.0 * v.taps().iter().sum::<f64>().abs().log10();
        assert!((r.magnitude_db[0] - dc).abs() < 1e-9);
        assert_eq!(r.normalized_frequency[0], 0.0);
    }

    #[test]
    fn rrc_stopband_is_deep() {
        // stopband starts at f·T = (1+α)/2 = 0.55; by 0.7 the 101-tap filter
        // is below -40 dB.
        let v = rrc_taps(0.1, 4, 101).unwrap();
        let n = 8192;
        let r = frequency_response(&v, n).unwrap();
        let k = (0.7 / 4.0 * n as f64).round() as usize;
        assert!(
            r.magnitude_db[k] < -40.0,
            "got {} dB at fT={}",
            r.magnitude_db[k],
            r.normalized_frequency[k]
        );
    }

    #[test]
    fn parseval_consistency() {
        for (alpha, n, pad) in [(0.1, 101usize, 256usize), (0.5, 13, 64), (0.9, 33, 4096)] {
            let v = rrc_taps(alpha, 4, n).unwrap();
            let r = frequency_response(&v, pad).unwrap();
            let mean_power: f64 = r
                .magnitude_db
                .iter()
                .map(|db| 10f64.powf(db / 10.0))
                .sum::<f64>()
                / pad as f64;
            assert!(
                (mean_power - v.energy()).abs() < 1e-9,
                "parseval off: {mean_power} vs {}",
                v.energy()
            );
        }
    }

    #[test]
    fn num_points_must_cover_filter() {
        let v = rrc_taps(0.1, 4, 101).unwrap();
        assert!(frequency_response(&v, 100).is_err());
        assert!(frequency_response(&v, 101).is_ok());
    }

    #[test]
    fn truncate_centered_picks_central_window() {
        let long = rrc_taps(0.1, 4, 101).unwrap();
        let short = long.truncate_centered(13).unwrap();
        assert_eq!(short.len(), 13);
        assert!((short.energy() - 1.0).abs() < 1e-12);
        // rescaled copy of the central window: tap ratios survive
        let r_short = short.taps()[6] / short.taps()[5];
        let r_long = long.taps()[50] / long.taps()[49];
        assert!((r_short - r_long).abs() < 1e-12);
        assert!(long.truncate_centered(14).is_err());
        assert!(long.truncate_centered(103).is_err());
    }

    #[test]
    fn canonicalize_flips_negative_center() {
        let v = TapVector::new(vec![0.0, -1.0, 0.0], 1, "t").unwrap();
        let c = v.canonicalize_sign();
        assert_eq!(c.taps(), &[0.0, 1.0, 0.0]);
        assert_eq!(c.canonicalize_sign().taps(), c.taps());
    }
}
