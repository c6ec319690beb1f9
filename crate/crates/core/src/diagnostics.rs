//! Tables behind the usual model figures: autocorrelation in time and
//! frequency, coefficient normality, noise intensity and phase.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::normalize::{norm_cdf, norm_quantile};
use crate::spectral::{CoefficientTensor, SpectralModel};
use crate::{Error, Result, HOURS_PER_YEAR, N_FREQ};

/// Below this many years the normality report is flagged as low power.
pub const LOW_POWER_YEARS: usize = 20;

/// Biased sample autocorrelation at lags `0..=max_lag`. A constant series
/// gives 1 at lag 0 and 0 elsewhere.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::TooFewSamples {
            needed: max_lag + 1,
            got: n,
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0: f64 = dev.iter().map(|v| v * v).sum();
    Ok((0..=max_lag)
        .map(|lag| {
            if lag == 0 {
                1.0
            } else if c0 == 0.0 {
                0.0
            } else {
                dev[..n - lag].iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / c0
            }
        })
        .collect())
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// Shapiro–Wilk `(W, p)` with Royston's approximation, `3 ≤ n ≤ 5000`.
pub fn shapiro_wilk(sample: &[f64]) -> Result<(f64, f64)> {
    let n = sample.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= 0.0 {
        return Err(Error::InvalidModel("Shapiro-Wilk needs a non-constant sample".into()));
    }
    let an = n as f64;
    let half = n / 2;

    // Coefficients for the lower half, stored positive.
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let m: Vec<f64> = (1..=half)
            .map(|i| norm_quantile((i as f64 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (1, fac)
        };
        a[0] = a1;
        for i in first..half {
            a[i] = -m[i] / fac;
        }
    }

    let mean = x.iter().sum::<f64>() / an;
    let ssq: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let num: f64 = (0..half).map(|i| a[i] * (x[n - 1 - i] - x[i])).sum();
    let w = (num * num / ssq).min(1.0);

    if n == 3 {
        let pw = (6.0 / std::f64::consts::PI) * (w.sqrt().asin() - std::f64::consts::PI / 3.0);
        return Ok((w, pw.clamp(0.0, 1.0)));
    }
    let w1 = (1.0 - w).ln();
    let (y, m, s) = if n <= 11 {
        let gamma = poly(&[-2.273, 0.459], an);
        if w1 >= gamma {
            return Ok((w, 1e-99));
        }
        let m = poly(&[0.5440, -0.39978, 0.025054, -6.714e-4], an);
        let s = poly(&[1.3822, -0.77857, 0.062767, -0.0020322], an).exp();
        (-(gamma - w1).ln(), m, s)
    } else {
        let xx = an.ln();
        let m = poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], xx);
        let s = poly(&[-0.4803, -0.082676, 0.0030302], xx).exp();
        (w1, m, s)
    };
    Ok((w, 1.0 - norm_cdf((y - m) / s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Re,
    Im,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityEntry {
    pub bin: usize,
    pub series: usize,
    pub part: Part,
    pub w: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub n_years: usize,
    pub alpha: f64,
    pub tested: usize,
    /// Components with zero variance across years (e.g. DC imaginary parts).
    pub skipped: usize,
    pub rejected: usize,
    pub rejection_fraction: f64,
    pub low_power: bool,
    pub worst: Vec<NormalityEntry>,
    #[serde(skip)]
    pub entries: Vec<NormalityEntry>,
}

/// Shapiro–Wilk on every `(bin, series, part)` sample across years.
pub fn normality_diagnostic(coeffs: &CoefficientTensor, alpha: f64, n_worst: usize) -> Result<NormalityReport> {
    let n_years = coeffs.n_years();
    if n_years < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: n_years,
        });
    }
    let low_power = n_years < LOW_POWER_YEARS;
    if low_power {
        warn!("normality test on {n_years} years has low power");
    }
    let p = coeffs.n_series();
    let results: Vec<Option<NormalityEntry>> = (0..coeffs.n_bins())
        .into_par_iter()
        .flat_map_iter(|k| {
            (0..p).flat_map(move |s| {
                [Part::Re, Part::Im].into_iter().map(move |part| {
                    let sample: Vec<f64> = (0..n_years)
                        .map(|i| {
                            let c = coeffs.get(k, s, i);
                            if part == Part::Re {
                                c.re
                            } else {
                                c.im
                            }
                        })
                        .collect();
                    let (lo, hi) = sample
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1e-300) {
                        return None;
                    }
                    shapiro_wilk(&sample).ok().map(|(w, p_value)| NormalityEntry {
                        bin: k,
                        series: s,
                        part,
                        w,
                        p_value,
                    })
                })
            })
        })
        .collect();
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let entries: Vec<NormalityEntry> = results.into_iter().flatten().collect();
    let rejected = entries.iter().filter(|e| e.p_value < alpha).count();
    let mut worst = entries.clone();
    worst.sort_by(|a, b| a.p_value.total_cmp(&b.p_value));
    worst.truncate(n_worst);
    Ok(NormalityReport {
        n_years,
        alpha,
        tested: entries.len(),
        skipped,
        rejected,
        rejection_fraction: if entries.is_empty() {
            0.0
        } else {
            rejected as f64 / entries.len() as f64
        },
        low_power,
        worst,
        entries,
    })
}

pub fn period_hours(k: usize) -> f64 {
    if k == 0 {
        f64::INFINITY
    } else {
        HOURS_PER_YEAR as f64 / k as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub bin: usize,
    pub period_hours: f64,
    pub series: String,
    /// `|μ_k|` of the complex mean.
    pub mean_magnitude: f64,
    /// `sqrt(E|c_k|²)` including the variance.
    pub rms_magnitude: f64,
    /// Phase of the complex mean, degrees.
    pub phase_deg: f64,
}

/// Noise intensity and phase per bin and series from the fitted model.
pub fn spectrum_table(model: &SpectralModel) -> Vec<SpectrumRow> {
    let p = model.n_series();
    let d = model.dim();
    let mut rows = Vec::with_capacity(N_FREQ * p);
    for k in 0..N_FREQ {
        let mu = model.mu(k);
        let sigma = model.sigma(k);
        for s in 0..p {
            let (re, im) = (mu[s], mu[p + s]);
            let var = sigma[s * d + s] + sigma[(p + s) * d + p + s];
            rows.push(SpectrumRow {
                bin: k,
                period_hours: period_hours(k),
                series: model.meta()[s].id.clone(),
                mean_magnitude: re.hypot(im),
                rms_magnitude: (re * re + im * im + var).sqrt(),
                phase_deg: im.atan2(re).to_degrees(),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub bin: usize,
    pub period_hours: f64,
    pub series_a: String,
    pub series_b: String,
    pub re_re: f64,
    pub im_im: f64,
    pub re_im: f64,
}

/// Model correlations between every pair of series at every bin.
pub fn correlation_table(model: &SpectralModel) -> Vec<CorrelationRow> {
    let p = model.n_series();
    let ids: Vec<&str> = model.meta().iter().map(|m| m.id.as_str()).collect();
    let mut rows = Vec::new();
    for k in 0..N_FREQ {
        for a in 0..p {
            for b in (a + 1)..p {
                rows.push(CorrelationRow {
                    bin: k,
                    period_hours: period_hours(k),
                    series_a: ids[a].to_string(),
                    series_b: ids[b].to_string(),
                    re_re: model.correlation(k, a, b),
                    im_im: model.correlation(k, p + a, p + b),
                    re_im: model.correlation(k, a, p + b),
                });
            }
        }
    }
    rows
}

/// Lag-1 autocorrelation of coefficient magnitudes across neighbouring
/// bins, one value per (year, window). Magnitudes are divided by their RMS
/// across years first so the spectral slope does not look like dependence.
pub fn magnitude_lag1_windows(coeffs: &CoefficientTensor, series: usize, window: usize) -> Result<Vec<f64>> {
    if window < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: window });
    }
    let n_years = coeffs.n_years();
    let bins: Vec<usize> = (1..N_FREQ - 1).collect();
    let rms: Vec<f64> = bins
        .iter()
        .map(|&k| {
            let s: f64 = (0..n_years).map(|i| coeffs.get(k, series, i).norm_sqr()).sum();
            (s / n_years as f64).sqrt()
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..n_years {
        let whitened: Vec<f64> = bins
            .iter()
            .zip(&rms)
            .map(|(&k, &r)| {
                if r > 0.0 {
                    coeffs.get(k, series, i).norm() / r
                } else {
                    0.0
                }
            })
            .collect();
        for chunk in whitened.chunks_exact(window) {
            out.push(autocorrelation(chunk, 1)?[1]);
        }
    }
    Ok(out)
}

/// Two-sided 95 % white-noise bound for an ACF estimated from `n` values.
pub fn white_noise_bound(n: usize) -> f64 {
    1.96 / (n as f64).sqrt()
}
