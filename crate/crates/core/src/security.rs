//! Asymptotic security figures for a Gaussian-modulated CV-QKD link with
//! heterodyne detection and reverse reconciliation.
//!
//! The chain is: mode-overlap coefficients → excess noise → symplectic
//! eigenvalues → secret key rate → key spectral efficiency. Everything is a
//! pure scalar function, in photon-number units (vacuum = 1 in the
//! denominators below).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::overlap::{isi_summary, OverlapCoefficients};

/// Which conditional-eigenvalue formula the Holevo term uses.
///
/// The two variants differ in whether the loss term of the numerator is
/// scaled by the mean photon number:
///
/// * [`NuFormula::Published`]: `ν = (1 − τ + n_ex·n̄) / (τ·n̄ + n_ex + 1)`.
///   Kept verbatim for reference, but it fails physical sanity checks — with
///   it the key rate is not monotone in the channel noise and comes out
///   negative on configurations that are known to be secure.
/// * [`NuFormula::PhotonScaled`] (default): `ν = (1 − τ + n_ex)·n̄ /
///   (τ·n̄ + n_ex + 1)`, which is what heterodyne conditioning of the
///   two-mode Gaussian covariance matrix yields in photon-number units (the
///   same algebra that produces `ν±` below), and which restores
///   monotonicity. The published form appears to have dropped the `n̄`
///   factor.
///
/// Both satisfy the `τ = 1, n_ex = 0 → ν = 0` limit, so that check cannot
/// distinguish them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NuFormula {
    Published,
    #[default]
    PhotonScaled,
}

/// Link-level parameters for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    n_bar: f64,
    tau_ch: f64,
    n_ch: f64,
    beta: f64,
    roll_off: f64,
    nu_formula: NuFormula,
}

impl LinkParams {
    /// Validates every field against its range:
    /// `n_bar > 0`, `tau_ch ∈ (0, 1]`, `n_ch ≥ 0`, `beta ∈ [0, 1]`,
    /// `roll_off ∈ [0, 1]`, all finite.
    pub fn new(n_bar: f64, tau_ch: f64, n_ch: f64, beta: f64, roll_off: f64) -> Result<Self> {
        let check = |name: &'static str, v: f64, ok: bool, range: &str| -> Result<()> {
            if !v.is_finite() || !ok {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be {range}, got {v}"),
                });
            }
            Ok(())
        };
        check("n_bar", n_bar, n_bar > 0.0, "> 0")?;
        check("tau_ch", tau_ch, tau_ch > 0.0 && tau_ch <= 1.0, "in (0, 1]")?;
        check("n_ch", n_ch, n_ch >= 0.0, ">= 0")?;
        check("beta", beta, (0.0..=1.0).contains(&beta), "in [0, 1]")?;
        check(
            "roll_off",
            roll_off,
            (0.0..=1.0).contains(&roll_off),
            "in [0, 1]",
        )?;
        Ok(Self {
            n_bar,
            tau_ch,
            n_ch,
            beta,
            roll_off,
            nu_formula: NuFormula::default(),
        })
    }

    pub fn with_nu_formula(mut self, f: NuFormula) -> Self {
        self.nu_formula = f;
        self
    }

    pub fn n_bar(&self) -> f64 {
        self.n_bar
    }
    pub fn tau_ch(&self) -> f64 {
        self.tau_ch
    }
    pub fn n_ch(&self) -> f64 {
        self.n_ch
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn roll_off(&self) -> f64 {
        self.roll_off
    }
    pub fn nu_formula(&self) -> NuFormula {
        self.nu_formula
    }
}

/// Everything one link evaluation produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkrReport {
    pub c0_sq: f64,
    pub isi_power: f64,
    /// Total excess noise `n_ch + τ_ch·n̄·Σ_{j≠0}c_j²`.
    pub n_ex: f64,
    /// Effective transmittance `τ_ch·c0²`.
    pub tau: f64,
    pub mutual_info_bits: f64,
    pub holevo_bits: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub nu: f64,
    /// Raw key rate; negative values are returned as-is.
    pub skr_bits_per_symbol: f64,
    pub kse_bits_per_symbol: f64,
}

/// Bosonic entropy `g(x) = (x+1)·log2(x+1) − x·log2(x)`, the von Neumann
/// entropy of a thermal state with mean photon number `x`.
///
/// `g(0) = 0` by the `x·log2 x → 0` limit. Tiny negative inputs from
/// floating-point cancellation (|x| < 1e-12) are clamped to zero; anything
/// more negative is rejected.
pub fn bosonic_entropy(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: format!("must be finite, got {x}"),
        });
    }
    let x = if x.abs() < 1e-12 { 0.0 } else { x };
    if x < 0.0 {
        return Err(Error::InvalidParameter {
            name: "x",
            reason: format!("must be >= 0, got {x}"),
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok((x + 1.0) * (x + 1.0).log2() - x * x.log2())
}

/// Excess noise in photon units: `n_ex = n_ch + τ_ch·n̄·Σ_{j≠0}c_j²`.
pub fn excess_noise(overlap: &OverlapCoefficients, params: &LinkParams) -> f64 {
    params.n_ch + params.tau_ch * params.n_bar * overlap.isi_power()
}

/// Symplectic eigenvalues `(ν+, ν−, ν)` of the joint and conditional states,
/// in photon-number units.
///
/// `ν± = ½{ √([(1−τ)n̄ + n_ex + 1]² + 4τn̄n_ex) ± [(1−τ)n̄ − n_ex] − 1 }`;
/// the conditional `ν` follows the selected [`NuFormula`]. Tiny negative
/// results from floating error (> −1e-12) are clamped to zero.
pub fn symplectic_eigenvalues(
    tau: f64,
    n_bar: f64,
    n_ex: f64,
    formula: NuFormula,
) -> Result<(f64, f64, f64)> {
    if !(0.0..=1.0).contains(&tau) || !tau.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: format!("must be in [0, 1], got {tau}"),
        });
    }
    if !(n_bar > 0.0) || !n_bar.is_finite() {
        return Err(Error::InvalidParameter {
            name: "n_bar",
            reason: format!("must be > 0, got {n_bar}"),
        });
    }
    if !(n_ex >= 0.0) || !n_ex.is_finite() {
        return Err(Error::InvalidParameter {
            name: "n_ex",
            reason: format!("must be >= 0, got {n_ex}"),
        });
    }
    let clamp = |v: f64| -> Result<f64> {
        if v < 0.0 {
            if v > -1e-12 {
                return Ok(0.0);
            }
            return Err(Error::InvalidParameter {
                name: "nu",
                reason: format!("eigenvalue {v} significantly negative"),
            });
        }
        Ok(v)
    };
    let a = (1.0 - tau) * n_bar + n_ex + 1.0;
    let root = (a * a + 4.0 * tau * n_bar * n_ex).sqrt();
    let b = (1.0 - tau) * n_bar - n_ex;
    let nu_plus = clamp(0.5 * (root + b - 1.0))?;
    let nu_minus = clamp(0.5 * (root - b - 1.0))?;
    let denom = tau * n_bar + n_ex + 1.0;
    let nu = clamp(match formula {
        NuFormula::Published => (1.0 - tau + n_ex * n_bar) / denom,
        NuFormula::PhotonScaled => (1.0 - tau + n_ex) * n_bar / denom,
    })?;
    Ok((nu_plus, nu_minus, nu))
}

/// Full link evaluation from overlap coefficients.
pub fn secret_key_rate(overlap: &OverlapCoefficients, params: &LinkParams) -> Result<SkrReport> {
    let (c0_sq, isi_power) = isi_summary(overlap);
    secret_key_rate_from_scalars(c0_sq, isi_power, params)
}

/// Same evaluation from the two overlap scalars. This is the single place
/// the key-rate formula lives; the bound variant of a sweep calls it with
/// `c0_sq = 1, isi_power = 0`.
pub fn secret_key_rate_from_scalars(
    c0_sq: f64,
    isi_power: f64,
    params: &LinkParams,
) -> Result<SkrReport> {
    if !(c0_sq >= 0.0) || !c0_sq.is_finite() {
        return Err(Error::InvalidParameter {
            name: "c0_sq",
            reason: format!("must be >= 0, got {c0_sq}"),
        });
    }
    if !(isi_power >= 0.0) || !isi_power.is_finite() {
        return Err(Error::InvalidParameter {
            name: "isi_power",
            reason: format!("must be >= 0, got {isi_power}"),
        });
    }
    let n_ex = params.n_ch + params.tau_ch * params.n_bar * isi_power;
    let tau = (params.tau_ch * c0_sq).min(1.0);
    let (nu_plus, nu_minus, nu) =
        symplectic_eigenvalues(tau, params.n_bar, n_ex, params.nu_formula)?;
    let mutual_info_bits = (1.0 + tau * params.n_bar / (n_ex + 1.0)).log2();
    let holevo_bits =
        bosonic_entropy(nu_plus)? + bosonic_entropy(nu_minus)? - bosonic_entropy(nu)?;
    let skr = params.beta * mutual_info_bits - holevo_bits;
    Ok(SkrReport {
        c0_sq,
        isi_power,
        n_ex,
        tau,
        mutual_info_bits,
        holevo_bits,
        nu_plus,
        nu_minus,
        nu,
        skr_bits_per_symbol: skr,
        kse_bits_per_symbol: key_spectral_efficiency(skr, params.roll_off),
    })
}

/// Fiber transmittance `τ_ch = 10^(−attenuation·distance/10)`.
pub fn channel_transmittance(distance_km: f64, attenuation_db_per_km: f64) -> f64 {
    10f64.powf(-attenuation_db_per_km * distance_km / 10.0)
}

/// `KSE = SKR / (1 + α)`, charging the key rate for excess bandwidth.
pub fn key_spectral_efficiency(skr: f64, roll_off: f64) -> f64 {
    skr / (1.0 + roll_off)
}
