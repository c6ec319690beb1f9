//! Frequency-domain stochastic weather generator.
//!
//! Historical hourly panels (many locations, many parameters) are mapped to
//! standard-normal marginals, cut into calendar years and transformed to
//! Fourier coefficients. For every frequency bin the real and imaginary
//! parts of all series are modelled as one multivariate normal vector.
//! New years are drawn bin by bin, transformed back to the time domain and
//! mapped through the stored empirical distributions into physical units.
//!
//! # Pipeline
//!
//! 1. [`panel::load_panel`] and [`panel::segment_years`]
//! 2. solar pre-processing in [`solar`] (night gap fill, hourly mean removal)
//! 3. [`normalize::gaussianize`] per series
//! 4. [`spectral::fit_spectral_model`]
//! 5. [`sampler::generate_year`]
//!
//! [`spectral::fit_panel`] runs steps 2–4 on a loaded panel.

pub mod cluster;
pub mod diagnostics;
mod error;
pub mod normalize;
pub mod panel;
pub mod sampler;
pub mod solar;
pub mod spectral;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use normalize::EmpiricalCdf;
pub use panel::{Parameter, SeriesMeta, WeatherPanel, YearTensor};
pub use sampler::{generate_year, GeneratedYear};
pub use spectral::{fit_panel, FitConfig, SpectralModel};

/// Hours in every year slice (Feb 29 is dropped from leap years).
pub const HOURS_PER_YEAR: usize = 8760;

/// Stored frequency bins per year: DC up to and including Nyquist.
pub const N_FREQ: usize = HOURS_PER_YEAR / 2 + 1;

/// Zero-based bin of the annual oscillation.
pub const ANNUAL_BIN: usize = 1;

/// Zero-based bin of the daily oscillation (period 24 h).
pub const DAILY_BIN: usize = HOURS_PER_YEAR / 24;
