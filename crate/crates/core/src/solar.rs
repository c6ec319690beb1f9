//! Solar radiation pre- and post-processing.
//!
//! Night steps (sun at or below the horizon) are treated as gaps and filled
//! with blended autoregressive extrapolations from the neighbouring daylight
//! runs. The long-term hourly mean is then removed so only the deviation is
//! modelled; generation adds it back and re-imposes the night zeros.

use chrono::{DateTime, Datelike, Timelike, Utc};
use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::panel::YearTensor;
use crate::{Error, Result, HOURS_PER_YEAR};

/// Means below this (W/m²) count as "no radiation" when normalizing.
pub const MEAN_FLOOR: f64 = 1.0;

/// Solar elevation in degrees from the fractional-year approximation of
/// declination and equation of time.
pub fn solar_elevation(t: DateTime<Utc>, latitude: f64, longitude: f64) -> f64 {
    let hour = t.hour() as f64 + t.minute() as f64 / 60.0 + t.second() as f64 / 3600.0;
    let days_in_year = if t.date_naive().leap_year() { 366.0 } else { 365.0 };
    let g = std::f64::consts::TAU / days_in_year * (t.ordinal0() as f64 + (hour - 12.0) / 24.0);

    let eq_time = 229.18
        * (0.000075 + 0.001868 * g.cos()
            - 0.032077 * g.sin()
            - 0.014615 * (2.0 * g).cos()
            - 0.040849 * (2.0 * g).sin());
    let decl = 0.006918 - 0.399912 * g.cos() + 0.070257 * g.sin() - 0.006758 * (2.0 * g).cos()
        + 0.000907 * (2.0 * g).sin()
        - 0.002697 * (3.0 * g).cos()
        + 0.00148 * (3.0 * g).sin();

    let true_solar_minutes = hour * 60.0 + eq_time + 4.0 * longitude;
    let hour_angle = (true_solar_minutes / 4.0 - 180.0).to_radians();
    let lat = latitude.to_radians();
    let cos_zenith = (lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos()).clamp(-1.0, 1.0);
    90.0 - cos_zenith.acos().to_degrees()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NightMask {
    pub flags: Vec<bool>,
    pub threshold_elevation: f64,
}

impl NightMask {
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn night_count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

pub fn night_mask(timestamps: &[DateTime<Utc>], latitude: f64, longitude: f64) -> NightMask {
    night_mask_with_threshold(timestamps, latitude, longitude, 0.0)
}

pub fn night_mask_with_threshold(
    timestamps: &[DateTime<Utc>],
    latitude: f64,
    longitude: f64,
    threshold: f64,
) -> NightMask {
    NightMask {
        flags: timestamps
            .iter()
            .map(|&t| solar_elevation(t, latitude, longitude) <= threshold)
            .collect(),
        threshold_elevation: threshold,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArFillConfig {
    /// Largest AR order tried; the order is picked by AIC.
    pub max_order: usize,
    /// Fewer daylight samples than this are not fitted.
    pub min_fit_len: usize,
    /// At most this many daylight samples next to a gap enter the fit.
    pub max_window: usize,
}

impl Default for ArFillConfig {
    fn default() -> Self {
        ArFillConfig {
            max_order: 4,
            min_fit_len: 24,
            max_window: 168,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FillReport {
    pub gaps: usize,
    pub linear_fallbacks: usize,
}

#[derive(Debug, Clone)]
struct ArFit {
    coeffs: Vec<f64>,
    intercept: f64,
}

impl ArFit {
    /// Least-squares AR(order) with intercept; `None` if the segment is too short.
    fn fit(segment: &[f64], order: usize) -> Option<(ArFit, f64, usize)> {
        let rows = segment.len().checked_sub(order)?;
        if rows <= order + 1 {
            return None;
        }
        let design = DMatrix::from_fn(rows, order + 1, |r, c| {
            if c == order {
                1.0
            } else {
                segment[order + r - 1 - c]
            }
        });
        let target = DVector::from_iterator(rows, segment[order..].iter().copied());
        let svd = design.clone().svd(true, true);
        let eps = svd.singular_values.max() * 1e-12;
        let beta = svd.solve(&target, eps).ok()?;
        let resid = &target - &design * &beta;
        let fit = ArFit {
            coeffs: beta.iter().take(order).copied().collect(),
            intercept: beta[order],
        };
        Some((fit, resid.norm_squared(), rows))
    }

    fn select(segment: &[f64], max_order: usize) -> Option<ArFit> {
        let mut best: Option<(f64, ArFit)> = None;
        for order in 1..=max_order {
            let Some((fit, rss, n)) = ArFit::fit(segment, order) else {
                break;
            };
            let sigma2 = (rss / n as f64).max(1e-300);
            let aic = n as f64 * sigma2.ln() + 2.0 * (order + 1) as f64;
            if best.as_ref().is_none_or(|(b, _)| aic < *b - 1e-9) {
                best = Some((aic, fit));
            }
        }
        best.map(|(_, f)| f)
    }

    /// Continues `history` for `steps` values.
    fn extrapolate(&self, history: &[f64], steps: usize) -> Vec<f64> {
        let p = self.coeffs.len();
        let mut buf: Vec<f64> = history[history.len() - p..].to_vec();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let n = buf.len();
            let next = self.intercept
                + self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * buf[n - 1 - j])
                    .sum::<f64>();
            buf.push(next);
            out.push(next);
        }
        out
    }
}

fn side_fill(run: &[f64], steps: usize, cfg: &ArFillConfig) -> Option<Vec<f64>> {
    if run.len() < cfg.min_fit_len.max(cfg.max_order + 2) {
        return None;
    }
    let window = &run[run.len().saturating_sub(cfg.max_window)..];
    let fit = ArFit::select(window, cfg.max_order)?;
    let values = fit.extrapolate(window, steps);
    let bound = 10.0 * window.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
    values
        .iter()
        .all(|v| v.is_finite() && v.abs() <= bound)
        .then_some(values)
}

/// Up to `limit` daylight values visited in `order`, skipping night steps.
fn daylight_samples(series: &[f64], flags: &[bool], order: impl Iterator<Item = usize>, limit: usize) -> Vec<f64> {
    order.filter(|&t| !flags[t]).take(limit).map(|t| series[t]).collect()
}

/// Replaces night steps by a positional blend of forward and backward AR
/// extrapolations. Each side is fitted on its adjacent daylight run, or, when
/// that run is shorter than `min_fit_len`, on the nearest `max_window`
/// daylight values with night steps skipped.
pub fn ar_fill_night(series: &[f64], mask: &NightMask, cfg: &ArFillConfig) -> Result<(Vec<f64>, FillReport)> {
    if series.len() != mask.len() {
        return Err(Error::LengthMismatch {
            expected: series.len(),
            got: mask.len(),
        });
    }
    let n = series.len();
    let mut out = series.to_vec();
    let mut report = FillReport::default();
    let flags = &mask.flags;

    let mut t = 0;
    while t < n {
        if !flags[t] {
            t += 1;
            continue;
        }
        let g0 = t;
        while t < n && flags[t] {
            t += 1;
        }
        let g1 = t;
        let len = g1 - g0;
        report.gaps += 1;

        let mut before_start = g0;
        while before_start > 0 && !flags[before_start - 1] {
            before_start -= 1;
        }
        let mut after_end = g1;
        while after_end < n && !flags[after_end] {
            after_end += 1;
        }
        let before = &series[before_start..g0];
        let after = &series[g1..after_end];
        if before.is_empty() && after.is_empty() {
            continue;
        }

        let history = if before.len() >= cfg.min_fit_len {
            before.to_vec()
        } else {
            daylight_samples(series, flags, (0..g0).rev(), cfg.max_window.max(cfg.min_fit_len))
                .into_iter()
                .rev()
                .collect()
        };
        let future: Vec<f64> = if after.len() >= cfg.min_fit_len {
            after.iter().rev().copied().collect()
        } else {
            daylight_samples(series, flags, g1..n, cfg.max_window.max(cfg.min_fit_len))
                .into_iter()
                .rev()
                .collect()
        };
        let forward = side_fill(&history, len, cfg);
        let backward = side_fill(&future, len, cfg).map(|mut v| {
            v.reverse();
            v
        });

        let fill: Vec<f64> = match (before.is_empty(), after.is_empty(), forward, backward) {
            (false, false, Some(f), Some(b)) => (0..len)
                .map(|j| {
                    let w = (j + 1) as f64 / (len + 1) as f64;
                    (1.0 - w) * f[j] + w * b[j]
                })
                .collect(),
            (true, false, _, Some(b)) => b,
            (false, true, Some(f), _) => f,
            _ => {
                report.linear_fallbacks += 1;
                let x0 = before.last().or(after.first()).copied().unwrap();
                let x1 = after.first().or(before.last()).copied().unwrap();
                (0..len)
                    .map(|j| x0 + (x1 - x0) * (j + 1) as f64 / (len + 1) as f64)
                    .collect()
            }
        };
        out[g0..g1].copy_from_slice(&fill);
    }

    if report.linear_fallbacks > 0 {
        warn!(
            "{} of {} night gaps used linear interpolation (fewer than {} daylight steps to fit)",
            report.linear_fallbacks, report.gaps, cfg.min_fit_len
        );
    }
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourlyMeanProfile {
    pub id: String,
    pub means: Vec<f64>,
}

impl HourlyMeanProfile {
    pub fn new(id: impl Into<String>, means: Vec<f64>) -> Result<Self> {
        if means.len() != HOURS_PER_YEAR {
            return Err(Error::LengthMismatch {
                expected: HOURS_PER_YEAR,
                got: means.len(),
            });
        }
        if let Some(index) = means.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(HourlyMeanProfile { id: id.into(), means })
    }
}

pub fn hourly_mean_profile(tensor: &YearTensor, series: usize, id: impl Into<String>) -> HourlyMeanProfile {
    let n = tensor.n_years() as f64;
    let mut means = vec![0.0; HOURS_PER_YEAR];
    for i in 0..tensor.n_years() {
        for (m, v) in means.iter_mut().zip(tensor.slice(series, i)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    HourlyMeanProfile { id: id.into(), means }
}

fn check_multiple(len: usize) -> Result<()> {
    if !len.is_multiple_of(HOURS_PER_YEAR) {
        return Err(Error::LengthMismatch {
            expected: (len / HOURS_PER_YEAR + 1) * HOURS_PER_YEAR,
            got: len,
        });
    }
    Ok(())
}

/// `x − mean` where the mean reaches [`MEAN_FLOOR`], else 0.
pub fn deviation_normalize(series: &[f64], profile: &HourlyMeanProfile) -> Result<Vec<f64>> {
    check_multiple(series.len())?;
    Ok(series
        .iter()
        .enumerate()
        .map(|(t, x)| {
            let m = profile.means[t % HOURS_PER_YEAR];
            if m >= MEAN_FLOOR {
                x - m
            } else {
                0.0
            }
        })
        .collect())
}

/// `max(0, x + mean)`, then exactly 0 wherever `night` is set.
pub fn deviation_denormalize(
    series: &[f64],
    profile: &HourlyMeanProfile,
    night: Option<&NightMask>,
) -> Result<Vec<f64>> {
    check_multiple(series.len())?;
    let mut out: Vec<f64> = series
        .iter()
        .enumerate()
        .map(|(t, x)| (x + profile.means[t % HOURS_PER_YEAR]).max(0.0))
        .collect();
    if let Some(mask) = night {
        if mask.len() != out.len() {
            return Err(Error::LengthMismatch {
                expected: out.len(),
                got: mask.len(),
            });
        }
        for (v, &is_night) in out.iter_mut().zip(&mask.flags) {
            if is_night {
                *v = 0.0;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone};

    /// Julian-century solar position (Meeus, as in the NOAA solar calculator).
    /// Written independently of `solar_elevation` to serve as its oracle.
    fn meeus_elevation(t: DateTime<Utc>, lat: f64, lon: f64) -> f64 {
        let jd = t.timestamp() as f64 / 86400.0 + 2440587.5;
        let jc = (jd - 2451545.0) / 36525.0;
        let l0 = (280.46646 + jc * (36000.76983 + jc * 0.0003032)).rem_euclid(360.0);
        let m = 357.52911 + jc * (35999.05029 - 0.0001537 * jc);
        let e = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc);
        let mr = m.to_radians();
        let c = mr.sin() * (1.914602 - jc * (0.004817 + 0.000014 * jc))
            + (2.0 * mr).sin() * (0.019993 - 0.000101 * jc)
            + (3.0 * mr).sin() * 0.000289;
        let true_long = l0 + c;
        let omega = (125.04 - 1934.136 * jc).to_radians();
        let app_long = true_long - 0.00569 - 0.00478 * omega.sin();
        let eps0 = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0;
        let eps = (eps0 + 0.00256 * omega.cos()).to_radians();
        let decl = (eps.sin() * app_long.to_radians().sin()).asin();
        let y = (eps / 2.0).tan().powi(2);
        let l0r = l0.to_radians();
        let eq_time = 4.0
            * (y * (2.0 * l0r).sin() - 2.0 * e * mr.sin() + 4.0 * e * y * mr.sin() * (2.0 * l0r).cos()
                - 0.5 * y * y * (4.0 * l0r).sin()
                - 1.25 * e * e * (2.0 * mr).sin())
            .to_degrees();
        let minutes = (t.timestamp().rem_euclid(86400)) as f64 / 60.0;
        let tst = (minutes + eq_time + 4.0 * lon).rem_euclid(1440.0);
        let ha = if tst / 4.0 < 0.0 {
            tst / 4.0 + 180.0
        } else {
            tst / 4.0 - 180.0
        };
        let latr = lat.to_radians();
        let zen = (latr.sin() * decl.sin() + latr.cos() * decl.cos() * ha.to_radians().cos()).acos();
        90.0 - zen.to_degrees()
    }

    #[test]
    fn winter_midnight_is_night() {
        let t = Utc.with_ymd_and_hms(2021, 12, 21, 0, 0, 0).unwrap();
        let mask = night_mask(&[t], 50.0, 0.0);
        assert!(mask.flags[0]);
    }

    #[test]
    fn summer_noon_is_day() {
        let t = Utc.with_ymd_and_hms(2021, 6, 21, 12, 0, 0).unwrap();
        assert!(!night_mask(&[t], 50.0, 0.0).flags[0]);
        // Geometric noon elevation 90 − 50 + 23.44.
        let e = solar_elevation(t, 50.0, 0.0);
        assert!((e - 63.44).abs() < 0.3, "{e}");
    }

    #[test]
    fn equator_equinox_dawn_matches_oracle_sign() {
        let t = Utc.with_ymd_and_hms(2021, 3, 20, 6, 0, 0).unwrap();
        let e = solar_elevation(t, 0.0, 0.0);
        let oracle = meeus_elevation(t, 0.0, 0.0);
        assert!((e - oracle).abs() < 0.3, "{e} vs {oracle}");
        assert_eq!(night_mask(&[t], 0.0, 0.0).flags[0], oracle <= 0.0);
    }

    #[test]
    fn elevation_tracks_meeus_over_a_year() {
        let start = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
        for (lat, lon) in [(52.5, 13.4), (-33.9, 18.4), (64.1, -21.9), (0.0, 100.0)] {
            let mut worst: f64 = 0.0;
            for h in (0..8760).step_by(7) {
                let t = start + Duration::hours(h);
                worst = worst.max((solar_elevation(t, lat, lon) - meeus_elevation(t, lat, lon)).abs());
            }
            assert!(worst < 0.5, "lat {lat} lon {lon}: {worst}");
        }
    }

    fn mask_from(pattern: impl Fn(usize) -> bool, n: usize) -> NightMask {
        NightMask {
            flags: (0..n).map(pattern).collect(),
            threshold_elevation: 0.0,
        }
    }

    #[test]
    fn no_night_leaves_series_unchanged() {
        let x: Vec<f64> = (0..100).map(|t| (t as f64).sin()).collect();
        let (y, report) = ar_fill_night(&x, &mask_from(|_| false, 100), &ArFillConfig::default()).unwrap();
        assert_eq!(y, x);
        assert_eq!(report.gaps, 0);
    }

    #[test]
    fn constant_daylight_fills_constant() {
        let mask = mask_from(|t| (40..55).contains(&(t % 60)), 340);
        let x: Vec<f64> = mask.flags.iter().map(|&n| if n { 0.0 } else { 321.0 }).collect();
        let (y, report) = ar_fill_night(&x, &mask, &ArFillConfig::default()).unwrap();
        assert_eq!(report.linear_fallbacks, 0);
        assert!(y.iter().all(|v| (v - 321.0).abs() < 1e-6));
    }

    #[test]
    fn sinusoid_gaps_are_continued() {
        let truth: Vec<f64> = (0..600)
            .map(|t| 400.0 + 250.0 * (std::f64::consts::TAU * t as f64 / 29.0).sin())
            .collect();
        let mask = mask_from(|t| t % 60 >= 48, truth.len());
        let x: Vec<f64> = truth
            .iter()
            .zip(&mask.flags)
            .map(|(v, &n)| if n { 0.0 } else { *v })
            .collect();
        let (y, report) = ar_fill_night(&x, &mask, &ArFillConfig::default()).unwrap();
        assert_eq!(report.linear_fallbacks, 0);
        let (mut se, mut count) = (0.0, 0);
        for t in 0..truth.len() {
            if mask.flags[t] {
                se += (y[t] - truth[t]).powi(2);
                count += 1;
            } else {
                assert_eq!(y[t], x[t]);
            }
        }
        let rms = (se / count as f64).sqrt();
        assert!(rms < 0.05 * 250.0, "rms {rms}");
    }

    #[test]
    fn short_daylight_falls_back_to_linear() {
        let mask = mask_from(|t| t % 20 >= 10, 100);
        let x: Vec<f64> = (0..100)
            .map(|t| if mask.flags[t] { 0.0 } else { 10.0 + t as f64 })
            .collect();
        let (y, report) = ar_fill_night(&x, &mask, &ArFillConfig::default()).unwrap();
        assert!(report.linear_fallbacks > 0);
        // gap 10..20 between 19.0 (t=9) and 30.0 (t=20)
        assert!((y[10] - (19.0 + 11.0 / 11.0)).abs() < 1e-12);
        for t in 0..100 {
            if !mask.flags[t] {
                assert_eq!(y[t], x[t]);
            }
        }
    }

    #[test]
    fn short_days_fit_across_nights() {
        // 10 h days: single runs are too short, the skipped-night window is not.
        let mask = mask_from(|t| t % 24 >= 10, 24 * 20);
        let hump = |t: usize| 500.0 * (std::f64::consts::PI * ((t % 24) as f64 + 0.5) / 10.0).sin();
        let x: Vec<f64> = (0..mask.len())
            .map(|t| if mask.flags[t] { 0.0 } else { hump(t) })
            .collect();
        let (y, report) = ar_fill_night(&x, &mask, &ArFillConfig::default()).unwrap();
        // Only the two gaps nearest each end lack 24 samples on one side.
        assert_eq!(report.gaps, 20);
        assert_eq!(report.linear_fallbacks, 4);
        let curved = |d: usize| {
            let g = &y[24 * d + 10..24 * d + 24];
            g.windows(3).any(|w| (w[2] - 2.0 * w[1] + w[0]).abs() > 1e-6)
        };
        assert!((2..17).chain([19]).all(curved));
        assert!(y.iter().all(|v| v.is_finite() && v.abs() < 5000.0));
        assert!((0..x.len()).filter(|&t| !mask.flags[t]).all(|t| y[t] == x[t]));
    }

    fn tensor_of(years: Vec<Vec<f64>>) -> YearTensor {
        let labels = (0..years.len() as i32).collect();
        YearTensor::from_slices(years.into_iter().map(|y| vec![y]).collect(), labels).unwrap()
    }

    #[test]
    fn hourly_profile_means() {
        let t = tensor_of(vec![vec![3.0; HOURS_PER_YEAR], vec![3.0; HOURS_PER_YEAR]]);
        assert!(hourly_mean_profile(&t, 0, "s").means.iter().all(|&m| m == 3.0));

        let a: Vec<f64> = (0..HOURS_PER_YEAR).map(|h| (h % 24) as f64 * 10.0).collect();
        let b: Vec<f64> = (0..HOURS_PER_YEAR).map(|h| (h % 7) as f64).collect();
        let p = hourly_mean_profile(&tensor_of(vec![a.clone(), b.clone()]), 0, "s");
        for h in 0..HOURS_PER_YEAR {
            assert_eq!(p.means[h], (a[h] + b[h]) / 2.0);
        }
    }

    #[test]
    fn hourly_profile_matches_two_pass_oracle() {
        let years: Vec<Vec<f64>> = (0..5)
            .map(|i| {
                (0..HOURS_PER_YEAR)
                    .map(|h| ((h * 37 + i * 101) % 997) as f64 * 1.37)
                    .collect()
            })
            .collect();
        let p = hourly_mean_profile(&tensor_of(years.clone()), 0, "s");
        for h in 0..HOURS_PER_YEAR {
            let oracle = years.iter().map(|y| y[h]).sum::<f64>() / years.len() as f64;
            assert!((p.means[h] - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn deviation_round_trip_and_clamps() {
        let means: Vec<f64> = (0..HOURS_PER_YEAR)
            .map(|h| if h % 24 < 6 { 0.0 } else { 300.0 })
            .collect();
        let profile = HourlyMeanProfile::new("s", means).unwrap();
        let x: Vec<f64> = (0..2 * HOURS_PER_YEAR).map(|t| ((t * 13) % 500) as f64).collect();
        let dev = deviation_normalize(&x, &profile).unwrap();
        assert_eq!(dev[3], 0.0);
        let back = deviation_denormalize(&dev, &profile, None).unwrap();
        for t in 0..x.len() {
            if profile.means[t % HOURS_PER_YEAR] >= MEAN_FLOOR {
                assert!((back[t] - x[t]).abs() < 1e-12);
            }
        }
        let neg = deviation_denormalize(&vec![-303.0; HOURS_PER_YEAR], &profile, None).unwrap();
        assert_eq!(neg[10], 0.0);
        assert!(deviation_normalize(&[1.0; 100], &profile).is_err());
    }

    #[test]
    fn denormalize_zeroes_night() {
        let profile = HourlyMeanProfile::new("s", vec![100.0; HOURS_PER_YEAR]).unwrap();
        let mask = mask_from(|t| t % 24 < 8, HOURS_PER_YEAR);
        let out = deviation_denormalize(&vec![5.0; HOURS_PER_YEAR], &profile, Some(&mask)).unwrap();
        assert!(out
            .iter()
            .zip(&mask.flags)
            .all(|(v, &n)| if n { *v == 0.0 } else { *v == 105.0 }));
    }
}
