use std::path::Path;

use spectral_dispatch::convergence::EnsembleOutcome;
use spectral_dispatch::{run_until_converged, ConvergenceConfig, ConvergenceReport, GridConfig};
use spectral_weather::{fit_panel, synth, FitConfig, SpectralModel, WeatherPanel};

fn grid() -> GridConfig {
    GridConfig::from_json_file(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample/grid.json")).unwrap()
}

fn fitted_model() -> SpectralModel {
    let panel = synth::reference_panel(2001, 3, 11).unwrap();
    fit_panel(&panel, &FitConfig::default()).unwrap()
}

/// Two identical years: every bin has zero covariance.
fn frozen_model() -> SpectralModel {
    let one = synth::reference_panel(2001, 1, 5).unwrap();
    let columns: Vec<Vec<f64>> = one
        .columns()
        .iter()
        .map(|c| c.iter().chain(c).copied().collect())
        .collect();
    let panel = WeatherPanel::new(synth::calendar_timestamps(2001, 2), columns, one.meta().to_vec()).unwrap();
    fit_panel(&panel, &FitConfig::default()).unwrap()
}

fn cfg(threshold: f64, min_years: usize, max_years: usize) -> ConvergenceConfig {
    ConvergenceConfig {
        threshold,
        min_years,
        max_years,
        master_seed: 9,
        horizon: Some(48),
        ..Default::default()
    }
}

fn two_pass_rse(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt() / mean.abs()
}

fn check_against_summaries(out: &EnsembleOutcome) {
    let report: &ConvergenceReport = &out.report;
    assert_eq!(out.summaries.len(), report.n);
    for (name, m) in &report.metrics {
        let values: Vec<f64> = out.summaries.iter().map(|s| s.metrics()[name]).collect();
        let Some(rse) = m.rse else { continue };
        let expected = two_pass_rse(&values);
        assert!(
            (rse - expected).abs() <= 1e-9 * expected.max(1e-300) || (rse - expected).abs() < 1e-15,
            "{name}: {rse} vs {expected}"
        );
    }
}

#[test]
fn zero_variance_model_stops_at_min_years() {
    let out = run_until_converged(&frozen_model(), &grid(), &cfg(0.01, 6, 50)).unwrap();
    assert!(out.report.converged);
    assert_eq!(out.report.n, 6);
    for (name, m) in &out.report.metrics {
        assert!(m.rse.is_none_or(|r| r < 1e-12), "{name}: {:?}", m.rse);
    }
}

#[test]
fn loose_threshold_stops_at_min_years() {
    let out = run_until_converged(&fitted_model(), &grid(), &cfg(0.5, 10, 100)).unwrap();
    assert!(out.report.converged);
    assert_eq!(out.report.n, 10);
    assert!(out.report.metrics.values().all(|m| m.rse.is_none_or(|r| r <= 0.5)));
    check_against_summaries(&out);
}

#[test]
fn unreachable_threshold_hits_max_years() {
    let out = run_until_converged(&fitted_model(), &grid(), &cfg(1e-12, 2, 5)).unwrap();
    assert!(!out.report.converged);
    assert_eq!(out.report.n, 5);
    check_against_summaries(&out);
}

#[test]
fn result_does_not_depend_on_batch_size() {
    let model = fitted_model();
    let grid = grid();
    let mut a = cfg(0.02, 4, 30);
    a.batch_size = 1;
    let mut b = a.clone();
    b.batch_size = 7;
    let ra = run_until_converged(&model, &grid, &a).unwrap();
    let rb = run_until_converged(&model, &grid, &b).unwrap();
    assert_eq!(ra.report, rb.report);
    assert_eq!(ra.summaries, rb.summaries);
    let again = run_until_converged(&model, &grid, &a).unwrap();
    assert_eq!(again.report, ra.report);
    check_against_summaries(&ra);
    let first = &ra.report.metrics.values().next().unwrap().trajectory;
    assert_eq!(first.last().map(|t| t.0), Some(ra.report.n as u64));
}

#[test]
fn custom_metric_must_exist() {
    let mut c = cfg(0.5, 2, 4);
    c.metrics = vec!["generation/nowhere/unobtainium".into()];
    assert!(run_until_converged(&frozen_model(), &grid(), &c).is_err());
    c.metrics = vec!["objective".into()];
    let out = run_until_converged(&frozen_model(), &grid(), &c).unwrap();
    assert_eq!(out.report.metrics.len(), 1);
}
