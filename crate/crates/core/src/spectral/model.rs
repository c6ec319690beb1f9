use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::covariance::pairwise_covariance;
use super::dft::RealDft;
use crate::normalize::EmpiricalCdf;
use crate::panel::{year_timestamps, SeriesMeta, YearAnchor, YearTensor};
use crate::solar::{night_mask_with_threshold, ArFillConfig, HourlyMeanProfile, NightMask};
use crate::{Error, Result, HOURS_PER_YEAR, N_FREQ};

/// Relative tolerance (to the spectral norm) for the PSD check.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Complex coefficients, bin × series × year.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    // layout: [year][series][bin]
    coefficients: Vec<Complex64>,
    n_series: usize,
    n_years: usize,
}

impl CoefficientTensor {
    pub fn from_tensor(tensor: &YearTensor) -> Result<Self> {
        let dft = RealDft::year();
        let (n_series, n_years) = (tensor.n_series(), tensor.n_years());
        let slices: Vec<Vec<Complex64>> = (0..n_years * n_series)
            .into_par_iter()
            .map(|idx| {
                let (i, p) = (idx / n_series, idx % n_series);
                let x = tensor.slice(p, i);
                let mut c = dft.forward(x)?;
                // Real input: DC and Nyquist are real up to rounding.
                let scale = x.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
                for k in [0, N_FREQ - 1] {
                    debug_assert!(
                        c[k].im.abs() <= 1e-8 * scale,
                        "imaginary DC/Nyquist residue {}",
                        c[k].im
                    );
                    c[k].im = 0.0;
                }
                Ok(c)
            })
            .collect::<Result<_>>()?;
        Ok(CoefficientTensor {
            coefficients: slices.into_iter().flatten().collect(),
            n_series,
            n_years,
        })
    }

    /// Builds a tensor from raw values laid out as `[year][series][bin]`.
    pub fn from_raw(coefficients: Vec<Complex64>, n_series: usize, n_years: usize, n_bins: usize) -> Result<Self> {
        if coefficients.len() != n_series * n_years * n_bins || n_bins != N_FREQ {
            return Err(Error::LengthMismatch {
                expected: n_series * n_years * N_FREQ,
                got: coefficients.len(),
            });
        }
        Ok(CoefficientTensor {
            coefficients,
            n_series,
            n_years,
        })
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    pub fn n_years(&self) -> usize {
        self.n_years
    }

    pub fn n_bins(&self) -> usize {
        N_FREQ
    }

    pub fn get(&self, k: usize, p: usize, i: usize) -> Complex64 {
        self.coefficients[(i * self.n_series + p) * N_FREQ + k]
    }

    /// Coefficients of one (year, series) pair over all bins.
    pub fn year_series(&self, p: usize, i: usize) -> &[Complex64] {
        let o = (i * self.n_series + p) * N_FREQ;
        &self.coefficients[o..o + N_FREQ]
    }

    /// Samples of bin `k` across years, ordered `[Re_1..Re_p, Im_1..Im_p]`
    /// per year.
    pub fn bin_vectors(&self, k: usize) -> Vec<Vec<f64>> {
        (0..self.n_years)
            .map(|i| {
                let mut v = Vec::with_capacity(2 * self.n_series);
                v.extend((0..self.n_series).map(|p| self.get(k, p, i).re));
                v.extend((0..self.n_series).map(|p| self.get(k, p, i).im));
                v
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitProvenance {
    pub years: Vec<i32>,
    pub year_anchor: YearAnchor,
    /// Calendar used for night masks of generated years; must be non-leap.
    pub reference_year: i32,
    pub night_threshold: f64,
    pub ar_fill: ArFillConfig,
}

/// Per-bin multivariate normal model over `[Re_1..Re_p, Im_1..Im_p]`.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    meta: Vec<SeriesMeta>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    factors: Vec<f64>,
    cdfs: Vec<EmpiricalCdf>,
    solar_profiles: Vec<Option<HourlyMeanProfile>>,
    night_masks: Vec<Option<NightMask>>,
    provenance: FitProvenance,
    version: String,
}

impl SpectralModel {
    /// Validates shapes, symmetry and PSD-ness, then precomputes the sampling
    /// factors. `mu` is `N_FREQ × 2p`, `sigma` is `N_FREQ × 2p × 2p`, both
    /// row-major.
    pub fn from_parts(
        meta: Vec<SeriesMeta>,
        mu: Vec<f64>,
        sigma: Vec<f64>,
        cdfs: Vec<EmpiricalCdf>,
        solar_profiles: Vec<Option<HourlyMeanProfile>>,
        provenance: FitProvenance,
    ) -> Result<Self> {
        let p = meta.len();
        let d = 2 * p;
        if p == 0 {
            return Err(Error::InvalidModel("no series".into()));
        }
        if mu.len() != N_FREQ * d {
            return Err(Error::LengthMismatch {
                expected: N_FREQ * d,
                got: mu.len(),
            });
        }
        if sigma.len() != N_FREQ * d * d {
            return Err(Error::LengthMismatch {
                expected: N_FREQ * d * d,
                got: sigma.len(),
            });
        }
        if cdfs.len() != p || solar_profiles.len() != p {
            return Err(Error::InvalidModel(
                "one ecdf and one solar slot per series required".into(),
            ));
        }
        for (m, prof) in meta.iter().zip(&solar_profiles) {
            if m.is_solar() != prof.is_some() {
                return Err(Error::InvalidModel(format!(
                    "solar profile presence mismatch for \"{}\"",
                    m.id
                )));
            }
        }
        if let Some(index) = mu.iter().chain(&sigma).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if year_timestamps(provenance.reference_year, provenance.year_anchor).len() != HOURS_PER_YEAR {
            return Err(Error::InvalidModel("reference year has the wrong length".into()));
        }

        let factors: Vec<f64> = (0..N_FREQ)
            .into_par_iter()
            .map(|k| sampling_factor(&sigma[k * d * d..(k + 1) * d * d], d, k))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();

        let ts = year_timestamps(provenance.reference_year, provenance.year_anchor);
        let night_masks = meta
            .iter()
            .map(|m| {
                m.is_solar()
                    .then(|| night_mask_with_threshold(&ts, m.latitude, m.longitude, provenance.night_threshold))
            })
            .collect();

        let mut hasher = Sha256::new();
        for v in mu.iter().chain(&sigma) {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        let version = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();

        Ok(SpectralModel {
            meta,
            mu,
            sigma,
            factors,
            cdfs,
            solar_profiles,
            night_masks,
            provenance,
            version,
        })
    }

    pub fn meta(&self) -> &[SeriesMeta] {
        &self.meta
    }

    pub fn n_series(&self) -> usize {
        self.meta.len()
    }

    /// Length of the coefficient vector, `2 p`.
    pub fn dim(&self) -> usize {
        2 * self.meta.len()
    }

    pub fn n_bins(&self) -> usize {
        N_FREQ
    }

    pub fn mu(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.mu[k * d..(k + 1) * d]
    }

    pub fn sigma(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.sigma[k * d * d..(k + 1) * d * d]
    }

    /// `L_k` with `L_k L_kᵀ = Σ_k`, row-major.
    pub fn factor(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.factors[k * d * d..(k + 1) * d * d]
    }

    pub fn mu_all(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma_all(&self) -> &[f64] {
        &self.sigma
    }

    pub fn cdf(&self, p: usize) -> &EmpiricalCdf {
        &self.cdfs[p]
    }

    pub fn cdfs(&self) -> &[EmpiricalCdf] {
        &self.cdfs
    }

    pub fn solar_profile(&self, p: usize) -> Option<&HourlyMeanProfile> {
        self.solar_profiles[p].as_ref()
    }

    pub fn night_mask(&self, p: usize) -> Option<&NightMask> {
        self.night_masks[p].as_ref()
    }

    pub fn provenance(&self) -> &FitProvenance {
        &self.provenance
    }

    /// Short content hash of `mu` and `sigma`.
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.meta.iter().position(|m| m.id == id)
    }

    /// Correlation between components `a` and `b` of bin `k`.
    pub fn correlation(&self, k: usize, a: usize, b: usize) -> f64 {
        let d = self.dim();
        let s = self.sigma(k);
        let (va, vb) = (s[a * d + a], s[b * d + b]);
        if va <= 0.0 || vb <= 0.0 {
            0.0
        } else {
            s[a * d + b] / (va * vb).sqrt()
        }
    }
}

/// Eigen factor `V √Λ` restricted to components with positive variance;
/// rows of zero-variance components stay exactly zero.
fn sampling_factor(sigma: &[f64], d: usize, k: usize) -> Result<Vec<f64>> {
    let active: Vec<usize> = (0..d).filter(|&i| sigma[i * d + i] > 0.0).collect();
    let mut factor = vec![0.0; d * d];
    if active.is_empty() {
        return Ok(factor);
    }
    for &i in &active {
        for &j in &active {
            if (sigma[i * d + j] - sigma[j * d + i]).abs() > 1e-12 * sigma[i * d + i].max(sigma[j * d + j]) {
                return Err(Error::InvalidModel(format!("covariance of bin {k} is not symmetric")));
            }
        }
    }
    let m = active.len();
    let sub = DMatrix::from_fn(m, m, |r, c| sigma[active[r] * d + active[c]]);
    let eig = SymmetricEigen::new(sub);
    let norm = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE * norm {
        return Err(Error::NotPsd {
            bin: k,
            min_eigenvalue: min,
        });
    }
    for (r, &i) in active.iter().enumerate() {
        for c in 0..m {
            let lambda = eig.eigenvalues[c].max(0.0);
            factor[i * d + active[c]] = eig.eigenvectors[(r, c)] * lambda.sqrt();
        }
    }
    Ok(factor)
}

/// Symmetrises and clips negative eigenvalues; zero-variance components keep
/// exactly zero rows and columns.
pub fn repair_psd(sigma: &mut [f64], d: usize) {
    for i in 0..d {
        for j in (i + 1)..d {
            let avg = 0.5 * (sigma[i * d + j] + sigma[j * d + i]);
            sigma[i * d + j] = avg;
            sigma[j * d + i] = avg;
        }
    }
    let active: Vec<usize> = (0..d).filter(|&i| sigma[i * d + i] > 0.0).collect();
    for i in 0..d {
        if sigma[i * d + i] <= 0.0 {
            for j in 0..d {
                sigma[i * d + j] = 0.0;
                sigma[j * d + i] = 0.0;
            }
        }
    }
    let m = active.len();
    if m == 0 {
        return;
    }
    let sub = DMatrix::from_fn(m, m, |r, c| sigma[active[r] * d + active[c]]);
    let eig = SymmetricEigen::new(sub);
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    for r in 0..m {
        for c in 0..m {
            sigma[active[r] * d + active[c]] = 0.5 * (rebuilt[(r, c)] + rebuilt[(c, r)]);
        }
    }
}

/// Per-bin means and pairwise covariances of a gaussianized year tensor.
pub fn fit_spectral_model(
    tensor: &YearTensor,
    meta: Vec<SeriesMeta>,
    cdfs: Vec<EmpiricalCdf>,
    solar_profiles: Vec<Option<HourlyMeanProfile>>,
    provenance: FitProvenance,
) -> Result<SpectralModel> {
    if tensor.n_years() < 2 {
        return Err(Error::InsufficientYears {
            found: tensor.n_years(),
        });
    }
    if tensor.n_series() != meta.len() {
        return Err(Error::LengthMismatch {
            expected: meta.len(),
            got: tensor.n_series(),
        });
    }
    let coeffs = CoefficientTensor::from_tensor(tensor)?;
    let (mu, sigma) = bin_moments(&coeffs)?;
    SpectralModel::from_parts(meta, mu, sigma, cdfs, solar_profiles, provenance)
}

/// `(mu, sigma)` for every bin, flattened as in [`SpectralModel::from_parts`].
pub fn bin_moments(coeffs: &CoefficientTensor) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = 2 * coeffs.n_series();
    let n = coeffs.n_years() as f64;
    let per_bin: Vec<(Vec<f64>, Vec<f64>)> = (0..N_FREQ)
        .into_par_iter()
        .map(|k| {
            let samples = coeffs.bin_vectors(k);
            let columns: Vec<Vec<f64>> = (0..d).map(|c| samples.iter().map(|v| v[c]).collect()).collect();
            let mu: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n).collect();
            let mut sigma = vec![0.0; d * d];
            for a in 0..d {
                for b in a..d {
                    let s = pairwise_covariance(&columns[a], &columns[b])?;
                    sigma[a * d + b] = s;
                    sigma[b * d + a] = s;
                }
            }
            repair_psd(&mut sigma, d);
            Ok((mu, sigma))
        })
        .collect::<Result<_>>()?;
    let mut mu = Vec::with_capacity(N_FREQ * d);
    let mut sigma = Vec::with_capacity(N_FREQ * d * d);
    for (m, s) in per_bin {
        mu.extend(m);
        sigma.extend(s);
    }
    Ok((mu, sigma))
}
