//! Fourier coefficients of gaussianized years and the per-bin normal model.

mod covariance;
mod dft;
mod model;
mod persist;

pub use covariance::pairwise_covariance;
pub use dft::{dft_year, inverse_dft, RealDft};
pub use model::{
    bin_moments, fit_spectral_model, repair_psd, CoefficientTensor, FitProvenance, SpectralModel, PSD_TOLERANCE,
};
pub use persist::{load_model, save_model, FORMAT_NAME, FORMAT_VERSION};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::normalize::{fit_ecdf, gaussianize, EmpiricalCdf};
use crate::panel::{segment_years_with, SeriesMeta, WeatherPanel, YearAnchor, YearTensor};
use crate::solar::{
    ar_fill_night, deviation_normalize, hourly_mean_profile, night_mask_with_threshold, ArFillConfig, FillReport,
    HourlyMeanProfile,
};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub year_anchor: YearAnchor,
    pub ar_fill: ArFillConfig,
    /// Solar elevation (degrees) at or below which a step counts as night.
    pub night_threshold: f64,
    /// Non-leap calendar year whose night masks are applied to generated years.
    pub reference_year: i32,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            year_anchor: YearAnchor::default(),
            ar_fill: ArFillConfig::default(),
            night_threshold: 0.0,
            reference_year: 2001,
        }
    }
}

/// Everything the fit needs before the Fourier step.
#[derive(Debug, Clone)]
pub struct PreparedPanel {
    /// Gaussianized values, one N(0, 1) marginal per series.
    pub tensor: YearTensor,
    pub meta: Vec<SeriesMeta>,
    pub cdfs: Vec<EmpiricalCdf>,
    pub solar_profiles: Vec<Option<HourlyMeanProfile>>,
    pub fill_reports: Vec<Option<FillReport>>,
    pub provenance: FitProvenance,
}

/// Solar pre-processing, year segmentation and gaussianization.
pub fn prepare_panel(panel: &WeatherPanel, cfg: &FitConfig) -> Result<PreparedPanel> {
    let meta = panel.meta().to_vec();
    let filled: Vec<(Vec<f64>, Option<FillReport>)> = meta
        .par_iter()
        .enumerate()
        .map(|(p, m)| {
            if !m.is_solar() {
                return Ok((panel.column(p).to_vec(), None));
            }
            let mask = night_mask_with_threshold(panel.timestamps(), m.latitude, m.longitude, cfg.night_threshold);
            let (values, report) = ar_fill_night(panel.column(p), &mask, &cfg.ar_fill)?;
            Ok((values, Some(report)))
        })
        .collect::<Result<_>>()?;
    let (columns, fill_reports): (Vec<_>, Vec<_>) = filled.into_iter().unzip();
    let mut tensor = segment_years_with(&panel.with_columns(columns)?, cfg.year_anchor)?;

    let mut solar_profiles = Vec::with_capacity(meta.len());
    for (p, m) in meta.iter().enumerate() {
        if m.is_solar() {
            let profile = hourly_mean_profile(&tensor, p, m.id.clone());
            let deviation = deviation_normalize(&tensor.series_values(p), &profile)?;
            tensor.set_series_values(p, &deviation)?;
            solar_profiles.push(Some(profile));
        } else {
            solar_profiles.push(None);
        }
    }

    let cdfs: Vec<EmpiricalCdf> = (0..meta.len())
        .into_par_iter()
        .map(|p| fit_ecdf(&tensor.series_values(p)))
        .collect::<Result<_>>()?;
    for (p, cdf) in cdfs.iter().enumerate() {
        let z = gaussianize(&tensor.series_values(p), cdf);
        tensor.set_series_values(p, &z)?;
    }

    let provenance = FitProvenance {
        years: tensor.years().to_vec(),
        year_anchor: cfg.year_anchor,
        reference_year: cfg.reference_year,
        night_threshold: cfg.night_threshold,
        ar_fill: cfg.ar_fill,
    };
    Ok(PreparedPanel {
        tensor,
        meta,
        cdfs,
        solar_profiles,
        fill_reports,
        provenance,
    })
}

/// Full fit from a loaded panel.
pub fn fit_panel(panel: &WeatherPanel, cfg: &FitConfig) -> Result<SpectralModel> {
    let prepared = prepare_panel(panel, cfg)?;
    info!(
        "fitting {} series over {} years",
        prepared.meta.len(),
        prepared.tensor.n_years()
    );
    fit_spectral_model(
        &prepared.tensor,
        prepared.meta,
        prepared.cdfs,
        prepared.solar_profiles,
        prepared.provenance,
    )
}
