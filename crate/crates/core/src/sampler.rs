//! Random Fourier coefficients per bin, inverse transform and
//! post-processing into physical units.
//!
//! Every bin `k` of year `seed` draws from its own ChaCha stream
//! `(seed, k)`, so a year is identical no matter how bins or years are
//! scheduled across threads.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::normalize::degaussianize;
use crate::panel::{write_panel_csv, year_timestamps};
use crate::solar::deviation_denormalize;
use crate::spectral::{RealDft, SpectralModel};
use crate::{Error, Result, N_FREQ};

/// One bin's draw, `[Re_1..Re_p, Im_1..Im_p]`.
pub type CoefficientDraw = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedYear {
    /// One column of 8760 physical values per series.
    pub values: Vec<Vec<f64>>,
    pub seed: u64,
    pub model_version: String,
}

impl GeneratedYear {
    pub fn column(&self, p: usize) -> &[f64] {
        &self.values[p]
    }
}

/// Year seed `index` of an ensemble (splitmix64 of the pair).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream used for bin `k` of the year seeded with `seed`.
pub fn bin_rng(seed: u64, k: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// `μ_k + L_k z`. Imaginary parts of the DC and Nyquist bins stay at their
/// means, as do all zero-variance components.
pub fn sample_coefficients<R: Rng + ?Sized>(model: &SpectralModel, k: usize, rng: &mut R) -> Result<CoefficientDraw> {
    if k >= N_FREQ {
        return Err(Error::InvalidModel(format!("bin {k} out of range")));
    }
    let d = model.dim();
    let p = model.n_series();
    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mu = model.mu(k);
    let l = model.factor(k);
    let mut draw: Vec<f64> = (0..d)
        .map(|r| mu[r] + l[r * d..(r + 1) * d].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    if k == 0 || k == N_FREQ - 1 {
        draw[p..].copy_from_slice(&mu[p..]);
    }
    Ok(draw)
}

/// Random spectra of one year, indexed `[series][bin]`.
pub fn sample_spectra(model: &SpectralModel, seed: u64) -> Result<Vec<Vec<Complex64>>> {
    let p = model.n_series();
    let draws: Vec<CoefficientDraw> = (0..N_FREQ)
        .into_par_iter()
        .map(|k| sample_coefficients(model, k, &mut bin_rng(seed, k)))
        .collect::<Result<_>>()?;
    Ok((0..p)
        .map(|s| draws.iter().map(|d| Complex64::new(d[s], d[p + s])).collect())
        .collect())
}

/// Gaussian-domain time series of one year, before any post-processing.
pub fn generate_gaussian_year(model: &SpectralModel, seed: u64) -> Result<Vec<Vec<f64>>> {
    let dft = RealDft::year();
    sample_spectra(model, seed)?
        .par_iter()
        .map(|spectrum| dft.inverse(spectrum))
        .collect()
}

pub fn generate_year(model: &SpectralModel, seed: u64) -> Result<GeneratedYear> {
    let gaussian = generate_gaussian_year(model, seed)?;
    let values = gaussian
        .into_par_iter()
        .enumerate()
        .map(|(p, z)| {
            let x = degaussianize(&z, model.cdf(p));
            match model.solar_profile(p) {
                Some(profile) => deviation_denormalize(&x, profile, model.night_mask(p)),
                None => Ok(x),
            }
        })
        .collect::<Result<_>>()?;
    Ok(GeneratedYear {
        values,
        seed,
        model_version: model.version().to_string(),
    })
}

pub fn ensemble_seeds(master_seed: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| derive_seed(master_seed, i)).collect()
}

/// Years for the given seeds, in the given order.
pub fn generate_years(model: &SpectralModel, seeds: &[u64]) -> Result<Vec<GeneratedYear>> {
    seeds.par_iter().map(|&s| generate_year(model, s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub model_version: String,
    pub master_seed: Option<u64>,
    pub reference_year: i32,
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
}

pub fn year_file_name(seed: u64) -> String {
    format!("year_{seed}.csv")
}

/// Writes a generated year with the reference calendar as timestamps.
pub fn write_year_csv(model: &SpectralModel, year: &GeneratedYear, path: &Path) -> Result<()> {
    let ts = year_timestamps(model.provenance().reference_year, model.provenance().year_anchor);
    write_panel_csv(path, &ts, model.meta(), &year.values)
}

/// Writes `year_<seed>.csv` for each year and `ensemble_manifest.json`.
pub fn write_ensemble(
    model: &SpectralModel,
    years: &[GeneratedYear],
    master_seed: Option<u64>,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::with_capacity(years.len());
    for year in years {
        let path = dir.join(year_file_name(year.seed));
        write_year_csv(model, year, &path)?;
        paths.push(path);
    }
    let manifest = EnsembleManifest {
        model_version: model.version().to_string(),
        master_seed,
        reference_year: model.provenance().reference_year,
        seeds: years.iter().map(|y| y.seed).collect(),
        files: years.iter().map(|y| year_file_name(y.seed)).collect(),
    };
    let path = dir.join("ensemble_manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(paths)
}
