//! Numerical toolkit for transmitter–receiver mode mismatch in
//! Gaussian-modulated CV-QKD links: root-raised-cosine pulse shaping,
//! discrete mode-overlap and intersymbol-interference analysis, asymptotic
//! secret-key-rate evaluation, Monte Carlo validation of the noise budget,
//! and transmitter tap optimization (policy gradient and projected gradient
//! ascent) against a fixed truncated receiver filter.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod montecarlo;
pub mod optimize;
pub mod overlap;
pub mod pulse_shaping;
pub mod security;
pub mod sweep;

pub use error::{Error, Result};
pub use overlap::{isi_summary, mode_overlap, OverlapCoefficients};
pub use pulse_shaping::{frequency_response, rrc_taps, FrequencyResponse, TapVector};
pub use security::{
    bosonic_entropy, channel_transmittance, excess_noise, key_spectral_efficiency,
    secret_key_rate, secret_key_rate_from_scalars, symplectic_eigenvalues, LinkParams, NuFormula,
    SkrReport,
};
