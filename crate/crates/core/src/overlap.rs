//! Discrete transmitter–receiver mode-overlap coefficients.
//!
//! `c_j` is the inner product between the receiver filter delayed by `j`
//! symbol periods and the transmitter pulse, both on the common sample grid
//! with their center taps aligned at lag zero. For a matched ideal pair the
//! family is orthonormal and `c_j = δ_j0`; finite filters leak energy into
//! neighboring lags, and `Σ_{j≠0} c_j²` is the intersymbol-interference power
//! that feeds the excess-noise budget.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pulse_shaping::TapVector;

/// Overlap coefficients keyed by symbol lag, plus the derived ISI metrics.
///
/// Lags without support overlap are absent and read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapCoefficients {
    c: BTreeMap<i32, f64>,
    c0: f64,
    isi_power: f64,
}

impl OverlapCoefficients {
    /// Overlap at lag zero (the retained signal amplitude).
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `Σ_{j≠0} c_j²`.
    pub fn isi_power(&self) -> f64 {
        self.isi_power
    }

    /// Overlap at an arbitrary lag; zero outside the stored support.
    pub fn at(&self, lag: i32) -> f64 {
        self.c.get(&lag).copied().unwrap_or(0.0)
    }

    /// All stored `(lag, c)` pairs in ascending lag order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.c.iter().map(|(&j, &v)| (j, v))
    }

    pub fn min_lag(&self) -> i32 {
        self.c.keys().next().copied().unwrap_or(0)
    }

    pub fn max_lag(&self) -> i32 {
        self.c.keys().next_back().copied().unwrap_or(0)
    }

    /// Builds the structure from precomputed coefficients (test support).
    pub fn from_map(c: BTreeMap<i32, f64>) -> Self {
        let c0 = c.get(&0).copied().unwrap_or(0.0);
        let isi_power = c
            .iter()
            .filter(|(&j, _)| j != 0)
            .map(|(_, v)| v * v)
            .sum();
        Self { c, c0, isi_power }
    }
}

/// Computes `c_j = Σ_k rx[k] · tx[k + j·sps + Δ]` for every lag with nonzero
/// support overlap, where `Δ` aligns the two filters' center taps.
///
/// Both filters must share the sample rate, be odd-length (so the center is
/// unambiguous) and be unit-energy; non-normalized inputs are rejected to
/// force an explicit [`TapVector::normalize_energy`].
pub fn mode_overlap(tx: &TapVector, rx: &TapVector) -> Result<OverlapCoefficients> {
    if tx.sps() != rx.sps() {
        return Err(Error::IncompatibleFilters(format!(
            "sps mismatch: tx {} vs rx {}",
            tx.sps(),
            rx.sps()
        )));
    }
    if tx.len() % 2 == 0 || rx.len() % 2 == 0 {
        return Err(Error::IncompatibleFilters(
            "both filters must be odd-length for center alignment".into(),
        ));
    }
    for (name, f) in [("tx", tx), ("rx", rx)] {
        if !f.is_unit_energy() {
            return Err(Error::InvalidFilter(format!(
                "{name} filter is not unit-energy (Σtaps² = {}); normalize first",
                f.energy()
            )));
        }
    }
    Ok(overlap_unchecked(tx.taps(), rx.taps(), tx.sps()))
}

/// Overlap without the validation preamble; shared with the optimizer's hot
/// path where the inputs are normalized immediately beforehand.
pub(crate) fn overlap_unchecked(tx: &[f64], rx: &[f64], sps: u32) -> OverlapCoefficients {
    let sps = sps as i64;
    let ctx = (tx.len() as i64 - 1) / 2;
    let crx = (rx.len() as i64 - 1) / 2;
    let delta = ctx - crx;
    // support overlaps exactly for |j| <= (ctx + crx) / sps
    let jmax = ((ctx + crx) / sps) as i32;
    let mut c = BTreeMap::new();
    for j in -jmax..=jmax {
        let shift = j as i64 * sps + delta;
        let m_lo = (-shift).max(0);
        let m_hi = (tx.len() as i64 - shift).min(rx.len() as i64);
        if m_lo >= m_hi {
            continue;
        }
        let mut acc = 0.0;
        for m in m_lo..m_hi {
            acc += rx[m as usize] * tx[(m + shift) as usize];
        }
        c.insert(j, acc);
    }
    OverlapCoefficients::from_map(c)
}

/// The two scalars the security formulas consume: `(c0², Σ_{j≠0} c_j²)`.
pub fn isi_summary(overlap: &OverlapCoefficients) -> (f64, f64) {
    (overlap.c0() * overlap.c0(), overlap.isi_power())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse_shaping::rrc_taps;
    use proptest::prelude::*;

    /// Naive double-loop oracle: for each lag, slide the zero-padded rx
    /// across tx sample-by-sample and pick out the symbol-spaced lags.
    fn brute_force(tx: &[f64], rx: &[f64], sps: i64) -> BTreeMap<i32, f64> {
        let ctx = (tx.len() as i64 - 1) / 2;
        let crx = (rx.len() as i64 - 1) / 2;
        let mut out = BTreeMap::new();
        let jmax = ((ctx + crx) / sps) as i32 + 2;
        for j in -jmax..=jmax {
            let mut acc = 0.0;
            let mut hit = false;
            for (m, &r) in rx.iter().enumerate() {
                // rx index m sits at time (m - crx); tx index at the same
                // time shifted by j symbols is m - crx + j*sps + ctx.
                let k = m as i64 - crx + j as i64 * sps + ctx;
                if k >= 0 && (k as usize) < tx.len() {
                    acc += r * tx[k as usize];
                    hit = true;
                }
            }
            if hit {
                out.insert(j, acc);
            }
        }
        out
    }

    #[test]
    fn delta_filters() {
        let d = TapVector::new(vec![1.0], 1, "d").unwrap();
        let c = mode_overlap(&d, &d).unwrap();
        assert_eq!(c.at(0), 1.0);
        assert_eq!(c.iter().count(), 1);
        assert_eq!(isi_summary(&c), (1.0, 0.0));
    }

    #[test]
    fn matched_filter_gives_unit_c0() {
        for n in [13usize, 101, 257] {
            let h = rrc_taps(0.1, 4, n).unwrap();
            let c = mode_overlap(&h, &h).unwrap();
            assert!((c.c0() - 1.0).abs() < 1e-12, "n={n}: c0={}", c.c0());
        }
    }

    #[test]
    fn long_matched_rrc_pair_has_no_isi() {
        let h = rrc_taps(0.1, 4, 1001).unwrap();
        let c = mode_overlap(&h, &h).unwrap();
        assert!((c.c0() - 1.0).abs() < 1e-3);
        assert!(c.isi_power() < 1e-4, "isi={}", c.isi_power());
    }

    #[test]
    fn truncated_tx_introduces_isi() {
        let tx = rrc_taps(0.1, 4, 13).unwrap();
        let rx = rrc_taps(0.1, 4, 101).unwrap();
        let c = mode_overlap(&tx, &rx).unwrap();
        assert!(c.isi_power() > 0.0);
        // frozen from the brute-force inner-product oracle
        assert!((c.c0() - 0.9830038340396641).abs() < 1e-12);
        assert!((c.isi_power() - 0.009917968320026513).abs() < 1e-12);
        // Bessel-type bound: rx shifts are near-orthonormal at 101 taps
        let (c0_sq, isi) = isi_summary(&c);
        assert!(c0_sq + isi <= 1.0 + 1e-4);
    }

    #[test]
    fn matched_truncated_pair_bessel_slack() {
        // 101-tap rx against itself: Σ_j c_j² may exceed 1 by the
        // non-orthonormality of the truncated shifts (measured ~2e-5).
        let h = rrc_taps(0.1, 4, 101).unwrap();
        let c = mode_overlap(&h, &h).unwrap();
        let (c0_sq, isi) = isi_summary(&c);
        assert!(c0_sq + isi <= 1.0 + 1e-4, "sum={}", c0_sq + isi);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let a = rrc_taps(0.1, 4, 13).unwrap();
        let b = rrc_taps(0.1, 2, 13).unwrap();
        assert!(mode_overlap(&a, &b).is_err(), "sps mismatch");
        let unnorm = TapVector::new(vec![1.0, 1.0, 1.0], 4, "u").unwrap();
        assert!(mode_overlap(&a, &unnorm).is_err(), "non-normalized");
        let even = TapVector::new(vec![0.5; 4], 4, "e").unwrap();
        assert!(mode_overlap(&even.normalize_energy().unwrap(), &a).is_err());
    }

    #[test]
    fn isi_summary_arithmetic() {
        let mut m = BTreeMap::new();
        m.insert(-1, 0.1);
        m.insert(0, 0.9);
        m.insert(1, 0.1);
        let c = OverlapCoefficients::from_map(m);
        let (c0_sq, isi) = isi_summary(&c);
        assert!((c0_sq - 0.81).abs() < 1e-15);
        assert!((isi - 0.02).abs() < 1e-15);
    }

    fn unit_filter(len: usize, sps: u32) -> impl Strategy<Value = TapVector> {
        proptest::collection::vec(-1.0f64..1.0, len).prop_filter_map("nonzero", move |taps| {
            TapVector::new(taps, sps, "rand")
                .ok()
                .and_then(|v| v.normalize_energy().ok())
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            tx_len in (0usize..16).prop_map(|k| 2 * k + 1),
            rx_len in (0usize..16).prop_map(|k| 2 * k + 1),
            sps in 1u32..5,
            seed in any::<u64>(),
        ) {
            // deterministic filters from the seed, then compare every lag
            let gen = |n: usize, salt: u64| -> Vec<f64> {
                let mut state = seed ^ salt;
                (0..n)
                    .map(|_| {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                    })
                    .collect()
            };
            let mk = |taps: Vec<f64>| {
                TapVector::new(taps, sps, "r").unwrap().normalize_energy()
            };
            let (Ok(tx), Ok(rx)) = (mk(gen(tx_len, 1)), mk(gen(rx_len, 2))) else {
                return Ok(()); // degenerate all-zero draw
            };
            let fast = mode_overlap(&tx, &rx).unwrap();
            let slow = brute_force(tx.taps(), rx.taps(), sps as i64);
            for (j, v) in slow {
                prop_assert!((fast.at(j) - v).abs() < 1e-12, "lag {j}: {} vs {v}", fast.at(j));
            }
            // Cauchy-Schwarz on unit-energy pairs
            for (_, v) in fast.iter() {
                prop_assert!(v.abs() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn swap_mirrors_lags(pair in (0usize..12, 0usize..12, 1u32..4, any::<u64>())) {
            let (a, b, sps, seed) = pair;
            let (tx_len, rx_len) = (2 * a + 1, 2 * b + 1);
            let gen = |n: usize, salt: u64| -> Vec<f64> {
                let mut state = seed ^ salt;
                (0..n)
                    .map(|_| {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                    })
                    .collect()
            };
            let mk = |taps: Vec<f64>| TapVector::new(taps, sps, "r").unwrap().normalize_energy();
            let (Ok(tx), Ok(rx)) = (mk(gen(tx_len, 3)), mk(gen(rx_len, 4))) else { return Ok(()); };
            let ab = mode_overlap(&tx, &rx).unwrap();
            let ba = mode_overlap(&rx, &tx).unwrap();
            for (j, v) in ab.iter() {
                prop_assert!((ba.at(-j) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_filters_give_symmetric_lags() {
        let tx = rrc_taps(0.25, 4, 13).unwrap();
        let rx = rrc_taps(0.1, 4, 101).unwrap();
        let c = mode_overlap(&tx, &rx).unwrap();
        for (j, v) in c.iter() {
            assert!((c.at(-j) - v).abs() < 1e-12, "lag {j}");
        }
    }
}
