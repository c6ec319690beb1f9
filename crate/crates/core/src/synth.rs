//! Synthetic panels with known structure, used for the bundled sample data
//! and for checking that the generator recovers what was put in.

use chrono::{DateTime, Datelike, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::normalize::norm_cdf;
use crate::panel::{is_leap_day, Parameter, SeriesMeta, WeatherPanel};
use crate::solar::solar_elevation;
use crate::{Result, HOURS_PER_YEAR};

use std::f64::consts::TAU;

pub const TEMPERATURE_ANNUAL_AMPLITUDE: f64 = 10.0;
pub const TEMPERATURE_DAILY_AMPLITUDE: f64 = 3.0;
pub const TEMPERATURE_NOISE_SD: f64 = 2.0;

#[derive(Debug, Clone, Copy)]
pub struct Site {
    pub name: &'static str,
    pub latitude: f64,
    pub longitude: f64,
    pub mean_temperature: f64,
}

pub const REFERENCE_SITES: [Site; 3] = [
    Site {
        name: "north",
        latitude: 53.6,
        longitude: 10.0,
        mean_temperature: 9.0,
    },
    Site {
        name: "central",
        latitude: 50.1,
        longitude: 8.7,
        mean_temperature: 10.5,
    },
    Site {
        name: "south",
        latitude: 48.1,
        longitude: 11.6,
        mean_temperature: 8.5,
    },
];

/// Hourly UTC stamps covering calendar years `first..first + n_years`.
pub fn calendar_timestamps(first: i32, n_years: usize) -> Vec<DateTime<Utc>> {
    let start = Utc.with_ymd_and_hms(first, 1, 1, 0, 0, 0).unwrap();
    let end = Utc.with_ymd_and_hms(first + n_years as i32, 1, 1, 0, 0, 0).unwrap();
    let hours = (end - start).num_hours();
    (0..hours).map(|h| start + Duration::hours(h)).collect()
}

/// Hour-of-year index with Feb 29 skipped; leap-day rows reuse Feb 28.
fn hour_of_year(t: DateTime<Utc>) -> usize {
    let start = Utc.with_ymd_and_hms(t.year(), 1, 1, 0, 0, 0).unwrap();
    let mut h = (t - start).num_hours() as usize;
    let leap = chrono::NaiveDate::from_ymd_opt(t.year(), 2, 29).is_some();
    if leap && (t.ordinal() > 60 || is_leap_day(t)) {
        h -= 24;
    }
    h.min(HOURS_PER_YEAR - 1)
}

/// Deterministic temperature: annual plus daily cosine on hour of year.
pub fn temperature_signal(tau: usize, mean: f64) -> f64 {
    let x = tau as f64 / HOURS_PER_YEAR as f64;
    mean - TEMPERATURE_ANNUAL_AMPLITUDE * (TAU * x).cos() - TEMPERATURE_DAILY_AMPLITUDE * (TAU * 365.0 * x - 0.9).cos()
}

/// Gaussian noise shared across sites with correlation `rho`.
fn correlated_normals(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> Vec<f64> {
    let common: f64 = rng.sample(StandardNormal);
    (0..n)
        .map(|_| rho.sqrt() * common + (1.0 - rho).sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Three sites with temperature, wind speed and solar radiation each.
///
/// Temperature is `mean − 10 cos(annual) − 3 cos(daily − 0.9) + N(0, 2²)`,
/// independent in time and correlated 0.6 across sites. Wind speed is a
/// Weibull(2, 8) transform of an AR(1) process, solar radiation a clear-sky
/// shape scaled by an AR(1) cloud factor and exactly 0 at night.
pub fn reference_panel(first_year: i32, n_years: usize, seed: u64) -> Result<WeatherPanel> {
    let ts = calendar_timestamps(first_year, n_years);
    let n = ts.len();
    let sites = REFERENCE_SITES.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut temp = vec![Vec::with_capacity(n); sites];
    let mut wind = vec![Vec::with_capacity(n); sites];
    let mut solar = vec![Vec::with_capacity(n); sites];
    let mut wind_state = vec![0.0; sites];
    let mut cloud_state = vec![0.0; sites];
    let (phi_w, phi_c) = (0.95f64, 0.9f64);
    for &t in &ts {
        let tau = hour_of_year(t);
        let noise = correlated_normals(&mut rng, sites, 0.6);
        let wind_shock = correlated_normals(&mut rng, sites, 0.5);
        let cloud_shock = correlated_normals(&mut rng, sites, 0.4);
        for (s, site) in REFERENCE_SITES.iter().enumerate() {
            temp[s].push(temperature_signal(tau, site.mean_temperature) + TEMPERATURE_NOISE_SD * noise[s]);

            wind_state[s] = phi_w * wind_state[s] + (1.0 - phi_w * phi_w).sqrt() * wind_shock[s];
            let season = 1.0 + 0.15 * (TAU * tau as f64 / HOURS_PER_YEAR as f64).cos();
            let u = norm_cdf(wind_state[s]).clamp(1e-12, 1.0 - 1e-12);
            wind[s].push(8.0 * season * (-(1.0 - u).ln()).sqrt());

            cloud_state[s] = phi_c * cloud_state[s] + (1.0 - phi_c * phi_c).sqrt() * cloud_shock[s];
            let elevation = solar_elevation(t, site.latitude, site.longitude);
            let value = if elevation <= 0.0 {
                0.0
            } else {
                let clear = 1000.0 * elevation.to_radians().sin().powf(1.2);
                clear * (0.2 + 0.8 * norm_cdf(cloud_state[s]))
            };
            solar[s].push(value);
        }
    }
    let mut columns = Vec::with_capacity(3 * sites);
    let mut meta = Vec::with_capacity(3 * sites);
    for (s, site) in REFERENCE_SITES.iter().enumerate() {
        meta.push(SeriesMeta::new(
            format!("{}_temp", site.name),
            Parameter::Temperature,
            site.latitude,
            site.longitude,
            "degC",
        ));
        meta.push(SeriesMeta::new(
            format!("{}_wind", site.name),
            Parameter::WindSpeed,
            site.latitude,
            site.longitude,
            "m/s",
        ));
        meta.push(SeriesMeta::new(
            format!("{}_solar", site.name),
            Parameter::SolarRadiation,
            site.latitude,
            site.longitude,
            "W/m2",
        ));
        columns.push(std::mem::take(&mut temp[s]));
        columns.push(std::mem::take(&mut wind[s]));
        columns.push(std::mem::take(&mut solar[s]));
    }
    WeatherPanel::new(ts, columns, meta)
}

/// Centres `v` and removes its projection on the unit vectors in `basis`.
fn orthonormal(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    for b in basis {
        let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Two temperature series whose annual-bin coefficients have sample
/// correlation exactly `rho` across years, in both real and imaginary parts,
/// on top of unit white noise.
pub fn correlated_pair_panel(
    first_year: i32,
    n_years: usize,
    rho: f64,
    coefficient_sd: f64,
    seed: u64,
) -> Result<WeatherPanel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n_years).map(|_| rng.sample(StandardNormal)).collect() };
    let scale = coefficient_sd * (n_years as f64).sqrt();
    let mut parts = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for _ in 0..2 {
        let u = orthonormal(draw(&mut rng), &basis);
        basis.push(u.clone());
        let v = orthonormal(draw(&mut rng), &basis);
        basis.push(v.clone());
        let a: Vec<f64> = u.iter().map(|x| x * scale).collect();
        let b: Vec<f64> = u
            .iter()
            .zip(&v)
            .map(|(x, y)| (rho * x + (1.0 - rho * rho).sqrt() * y) * scale)
            .collect();
        parts.push((a, b));
    }
    let (re_a, re_b) = &parts[0];
    let (im_a, im_b) = &parts[1];

    let ts = calendar_timestamps(first_year, n_years);
    let nf = HOURS_PER_YEAR as f64;
    let mut columns = vec![Vec::with_capacity(ts.len()), Vec::with_capacity(ts.len())];
    for &t in &ts {
        let i = (t.year() - first_year) as usize;
        let tau = hour_of_year(t) as f64;
        let (c, s) = ((TAU * tau / nf).cos(), (TAU * tau / nf).sin());
        let planted = |re: f64, im: f64| 2.0 / nf * (re * c - im * s);
        columns[0].push(planted(re_a[i], im_a[i]) + rng.sample::<f64, _>(StandardNormal));
        columns[1].push(planted(re_b[i], im_b[i]) + rng.sample::<f64, _>(StandardNormal));
    }
    let meta = vec![
        SeriesMeta::new("site_a_temp", Parameter::Temperature, 51.0, 7.0, "degC"),
        SeriesMeta::new("site_b_temp", Parameter::Temperature, 51.3, 7.4, "degC"),
    ];
    WeatherPanel::new(ts, columns, meta)
}

/// One strongly persistent temperature series: seasonal cycle plus AR(1)
/// anomalies with coefficient `phi` and stationary standard deviation 3.
pub fn persistent_temperature_panel(first_year: i32, n_years: usize, phi: f64, seed: u64) -> Result<WeatherPanel> {
    let ts = calendar_timestamps(first_year, n_years);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = 0.0;
    let innovation = 3.0 * (1.0 - phi * phi).sqrt();
    let values = ts
        .iter()
        .map(|&t| {
            state = phi * state + innovation * rng.sample::<f64, _>(StandardNormal);
            let x = hour_of_year(t) as f64 / HOURS_PER_YEAR as f64;
            10.0 - 8.0 * (TAU * x).cos() + state
        })
        .collect();
    WeatherPanel::new(
        ts,
        vec![values],
        vec![SeriesMeta::new(
            "station_temp",
            Parameter::Temperature,
            52.5,
            13.4,
            "degC",
        )],
    )
}
