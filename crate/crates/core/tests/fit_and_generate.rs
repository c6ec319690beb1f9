use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spectral_weather::panel::{segment_years, Parameter, SeriesMeta, WeatherPanel};
use spectral_weather::sampler::{generate_gaussian_year, generate_year, sample_spectra};
use spectral_weather::spectral::{
    dft_year, fit_panel, load_model, prepare_panel, save_model, CoefficientTensor, FitConfig,
};
use spectral_weather::stats::covariance_n;
use spectral_weather::synth::{calendar_timestamps, correlated_pair_panel, reference_panel};
use spectral_weather::{Error, ANNUAL_BIN, HOURS_PER_YEAR, N_FREQ};

fn noisy_panel(n_years: usize, seed: u64) -> WeatherPanel {
    let ts = calendar_timestamps(2001, n_years);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..ts.len())
        .map(|t| {
            5.0 * (std::f64::consts::TAU * (t % HOURS_PER_YEAR) as f64 / 8760.0).sin()
                + rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let b: Vec<f64> = a
        .iter()
        .map(|v| 0.5 * v + rng.sample::<f64, _>(StandardNormal))
        .collect();
    WeatherPanel::new(
        ts,
        vec![a, b],
        vec![
            SeriesMeta::new("a", Parameter::Temperature, 50.0, 8.0, "degC"),
            SeriesMeta::new("b", Parameter::Temperature, 51.0, 9.0, "degC"),
        ],
    )
    .unwrap()
}

#[test]
fn identical_years_give_zero_covariance() {
    let one = noisy_panel(1, 3);
    let twice: Vec<Vec<f64>> = one.columns().iter().map(|c| [c.clone(), c.clone()].concat()).collect();
    let panel = WeatherPanel::new(calendar_timestamps(2001, 2), twice, one.meta().to_vec()).unwrap();
    let model = fit_panel(&panel, &FitConfig::default()).unwrap();
    assert!(model.sigma_all().iter().all(|v| *v == 0.0));

    let prepared = prepare_panel(&panel, &FitConfig::default()).unwrap();
    let spectrum = dft_year(prepared.tensor.slice(0, 0)).unwrap();
    for k in [0, 1, 17, 365, N_FREQ - 1] {
        assert!((model.mu(k)[0] - spectrum[k].re).abs() < 1e-9);
        assert!((model.mu(k)[2] - spectrum[k].im).abs() < 1e-9);
    }

    // Zero-noise model: the generated year is the training year.
    let year = generate_year(&model, 99).unwrap();
    for p in 0..2 {
        for (g, x) in year.values[p].iter().zip(one.column(p)) {
            assert!((g - x).abs() < 1e-9, "{g} vs {x}");
        }
    }
}

#[test]
fn duplicated_series_are_fully_correlated() {
    let base = noisy_panel(3, 8);
    let col = base.column(0).to_vec();
    let panel = WeatherPanel::new(
        base.timestamps().to_vec(),
        vec![col.clone(), col],
        vec![
            SeriesMeta::new("x", Parameter::WindSpeed, 50.0, 8.0, "m/s"),
            SeriesMeta::new("x_copy", Parameter::WindSpeed, 50.0, 8.0, "m/s"),
        ],
    )
    .unwrap();
    let model = fit_panel(&panel, &FitConfig::default()).unwrap();
    let d = model.dim();
    for k in [1, 2, 100, 365, 2000, N_FREQ - 2] {
        let s = model.sigma(k);
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        assert!(rel(s[1], s[0]), "Re-Re at bin {k}");
        assert!(rel(s[3 * d + 2], s[2 * d + 2]), "Im-Im at bin {k}");
        assert!((model.correlation(k, 0, 1) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn covariance_matches_two_pass_oracle() {
    let panel = noisy_panel(6, 21);
    let prepared = prepare_panel(&panel, &FitConfig::default()).unwrap();
    let model = fit_panel(&panel, &FitConfig::default()).unwrap();
    let coeffs = CoefficientTensor::from_tensor(&prepared.tensor).unwrap();
    let d = model.dim();
    for k in [1, 2, 50, 365, 1000, 4000] {
        let samples = coeffs.bin_vectors(k);
        let columns: Vec<Vec<f64>> = (0..d).map(|c| samples.iter().map(|v| v[c]).collect()).collect();
        let scale = (0..d)
            .map(|c| covariance_n(&columns[c], &columns[c]))
            .fold(0.0, f64::max);
        for a in 0..d {
            for b in 0..d {
                let oracle = covariance_n(&columns[a], &columns[b]);
                let got = model.sigma(k)[a * d + b];
                assert!(
                    (got - oracle).abs() <= 1e-10 * scale,
                    "bin {k} ({a},{b}): {got} vs {oracle}"
                );
            }
            let mean = columns[a].iter().sum::<f64>() / columns[a].len() as f64;
            assert!((model.mu(k)[a] - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        }
    }
}

#[test]
fn boundary_imaginary_parts_have_zero_variance() {
    let model = fit_panel(&noisy_panel(3, 2), &FitConfig::default()).unwrap();
    let d = model.dim();
    let p = model.n_series();
    for k in [0, N_FREQ - 1] {
        let s = model.sigma(k);
        for im in p..d {
            assert!((0..d).all(|j| s[im * d + j] == 0.0 && s[j * d + im] == 0.0));
        }
    }
}

#[test]
fn every_bin_is_symmetric_and_psd() {
    let model = fit_panel(&reference_panel(2001, 3, 4).unwrap(), &FitConfig::default()).unwrap();
    let d = model.dim();
    for k in (0..N_FREQ).step_by(7) {
        let s = model.sigma(k);
        let m = nalgebra::DMatrix::from_row_slice(d, d, s);
        assert_eq!(m, m.transpose());
        let eig = nalgebra::SymmetricEigen::new(m);
        let norm = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-8 * norm.max(1e-300)));
    }
}

#[test]
fn coherence_is_higher_at_the_annual_bin() {
    let panel = correlated_pair_panel(2001, 20, 0.8, 2000.0, 10).unwrap();
    let model = fit_panel(&panel, &FitConfig::default()).unwrap();
    let annual = model.correlation(ANNUAL_BIN, 0, 1);
    let harmonic = model.correlation(100, 0, 1);
    assert!(annual > harmonic, "{annual} vs {harmonic}");
    assert!((annual - 0.8).abs() < 0.05, "{annual}");
}

#[test]
fn model_survives_a_save_load_cycle() {
    let panel = reference_panel(2001, 2, 6).unwrap();
    let model = fit_panel(&panel, &FitConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_model(&model, dir.path()).unwrap();
    for name in [
        "manifest.json",
        "mu.bin",
        "sigma.bin",
        "ecdf_north_temp.bin",
        "solar_profile_south_solar.bin",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let loaded = load_model(dir.path()).unwrap();
    assert_eq!(loaded.mu_all(), model.mu_all());
    assert_eq!(loaded.sigma_all(), model.sigma_all());
    assert_eq!(loaded.version(), model.version());
    assert_eq!(loaded.meta(), model.meta());
    assert_eq!(generate_year(&loaded, 5).unwrap(), generate_year(&model, 5).unwrap());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["n_freq"], N_FREQ);
    assert_eq!(manifest["sigma"]["shape"], serde_json::json!([N_FREQ, 18, 18]));

    // Tampered tensors are detected.
    let mut bytes = std::fs::read(dir.path().join("mu.bin")).unwrap();
    bytes[8] ^= 1;
    std::fs::write(dir.path().join("mu.bin"), bytes).unwrap();
    assert!(matches!(load_model(dir.path()), Err(Error::InvalidModel(_))));
}

#[test]
fn generation_is_deterministic_and_real() {
    let model = fit_panel(&reference_panel(2001, 3, 7).unwrap(), &FitConfig::default()).unwrap();
    let a = generate_year(&model, 1234).unwrap();
    let b = generate_year(&model, 1234).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, generate_year(&model, 1235).unwrap());
    assert!(a.values.iter().flatten().all(|v| v.is_finite()));

    // The gaussian year is the real inverse of the sampled spectra.
    let spectra = sample_spectra(&model, 1234).unwrap();
    let gaussian = generate_gaussian_year(&model, 1234).unwrap();
    for (spectrum, series) in spectra.iter().zip(&gaussian) {
        let back = dft_year(series).unwrap();
        for (x, y) in back.iter().zip(spectrum) {
            assert!((x - y).norm() < 1e-9 * y.norm().max(1.0));
        }
    }
}

#[test]
fn solar_output_is_zero_at_night() {
    let model = fit_panel(&reference_panel(2001, 3, 9).unwrap(), &FitConfig::default()).unwrap();
    for seed in 0..10 {
        let year = generate_year(&model, seed).unwrap();
        for p in 0..model.n_series() {
            if let Some(mask) = model.night_mask(p) {
                for (v, &night) in year.values[p].iter().zip(&mask.flags) {
                    assert!(*v >= 0.0);
                    if night {
                        assert_eq!(*v, 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn one_year_is_not_enough() {
    let panel = noisy_panel(1, 1);
    assert!(matches!(
        fit_panel(&panel, &FitConfig::default()),
        Err(Error::InsufficientYears { found: 1 })
    ));
    assert!(segment_years(&panel).is_err());
}
