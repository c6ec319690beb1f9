use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};
use serde::Serialize;
use spectral_dispatch::convergence::EnsembleOutcome;
use spectral_dispatch::problem::read_weather_csv;
use spectral_dispatch::results::write_result_csv;
use spectral_dispatch::{run_until_converged, solve_dispatch, ConvergenceConfig, DispatchSummary, GridConfig};
use spectral_weather::cluster::cluster_panel;
use spectral_weather::diagnostics::{
    autocorrelation, correlation_table, magnitude_lag1_windows, normality_diagnostic, period_hours, spectrum_table,
    white_noise_bound,
};
use spectral_weather::normalize::{fit_ecdf, gaussianize};
use spectral_weather::panel::{load_panel, write_meta};
use spectral_weather::sampler::{
    ensemble_seeds, generate_year, generate_years, write_ensemble, write_year_csv, year_file_name,
};
use spectral_weather::spectral::{load_model, prepare_panel, save_model, CoefficientTensor};
use spectral_weather::{fit_panel, synth, SpectralModel};

use crate::config::{existing, require, RunConfig};
use crate::{ClusterArgs, ConvergeArgs, DiagnoseArgs, DispatchArgs, FitArgs, GenerateArgs, SynthArgs};

pub fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn open_model(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<SpectralModel> {
    let dir = existing(require(flag, cfg.model.clone(), "model")?, "model directory")?;
    load_model(&dir).with_context(|| format!("loading model {}", dir.display()))
}

fn open_grid(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<GridConfig> {
    let path = existing(require(flag, cfg.problem.clone(), "problem")?, "problem file")?;
    Ok(GridConfig::from_json_file(&path)?)
}

fn open_panel(
    panel: Option<PathBuf>,
    meta: Option<PathBuf>,
    cfg: &RunConfig,
) -> Result<spectral_weather::WeatherPanel> {
    let data = existing(require(panel, cfg.panel.clone(), "panel")?, "panel")?;
    let meta = existing(require(meta, cfg.meta.clone(), "meta")?, "metadata")?;
    load_panel(&data, &meta).with_context(|| format!("loading panel {}", data.display()))
}

pub fn fit(args: FitArgs, cfg: &RunConfig) -> Result<()> {
    let panel = open_panel(args.panel, args.meta, cfg)?;
    let out = require(args.out, cfg.model.clone().or(cfg.out.clone()), "out")?;
    let mut fit_cfg = cfg.fit;
    if let Some(y) = args.reference_year {
        fit_cfg.reference_year = y;
    }
    let model = fit_panel(&panel, &fit_cfg)?;
    save_model(&model, &out)?;
    info!("model {} written to {}", model.version(), out.display());
    Ok(())
}

pub fn cluster(args: ClusterArgs, cfg: &RunConfig) -> Result<()> {
    let panel = open_panel(args.panel, args.meta, cfg)?;
    let k = require(args.clusters, cfg.clustering.n_clusters, "clusters")?;
    let seed = args.seed.or(cfg.clustering.seed).unwrap_or(0);
    let max_iter = args.max_iter.or(cfg.clustering.max_iter).unwrap_or(100);
    let out = require(args.out, cfg.out.clone().map(|d| d.join("clusters.json")), "out")?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let clusters = cluster_panel(&panel, k, seed, max_iter)?;
    write_json(&out, &clusters)?;
    info!("{} parameter groups clustered into {}", clusters.len(), out.display());
    Ok(())
}

fn loop_config(
    cfg: &RunConfig,
    rse: f64,
    seed: Option<u64>,
    min_years: Option<usize>,
    max_years: Option<usize>,
    horizon: Option<usize>,
) -> ConvergenceConfig {
    let c = &cfg.convergence;
    let defaults = ConvergenceConfig::default();
    ConvergenceConfig {
        threshold: rse,
        min_years: min_years.or(c.min_years).unwrap_or(defaults.min_years),
        max_years: max_years.or(c.max_years).unwrap_or(defaults.max_years),
        master_seed: seed.or(c.seed).or(cfg.generation.seed).unwrap_or(0),
        metrics: c.metrics.clone(),
        batch_size: c.batch_size.unwrap_or(0),
        horizon: horizon.or(c.horizon),
    }
}

fn write_outcome(outcome: &EnsembleOutcome, out: &Path) -> Result<()> {
    outcome.report.write_json(&out.join("convergence_report.json"))?;
    let per_year: Vec<(u64, &DispatchSummary)> = outcome.report.seeds.iter().copied().zip(&outcome.summaries).collect();
    write_json(&out.join("year_summaries.json"), &per_year)
}

pub fn generate(args: GenerateArgs, cfg: &RunConfig) -> Result<()> {
    let model = open_model(args.model, cfg)?;
    let out = require(args.out, cfg.out.clone(), "out")?;
    let seed = args.seed.or(cfg.generation.seed).unwrap_or(0);
    let count = args
        .count
        .or(if args.rse.is_some() { None } else { cfg.generation.count });
    let rse = args
        .rse
        .or(if args.count.is_some() { None } else { cfg.generation.rse });
    match (count, rse) {
        (Some(n), None) => {
            let years = generate_years(&model, &ensemble_seeds(seed, n))?;
            write_ensemble(&model, &years, Some(seed), &out)?;
            info!("{n} years written to {}", out.display());
        }
        (None, Some(threshold)) => {
            let grid = open_grid(args.problem, cfg)?;
            let outcome = run_until_converged(
                &model,
                &grid,
                &loop_config(cfg, threshold, Some(seed), None, None, None),
            )?;
            let years = generate_years(&model, &outcome.report.seeds)?;
            write_ensemble(&model, &years, Some(seed), &out)?;
            write_outcome(&outcome, &out)?;
            info!(
                "{} years written to {} (converged: {})",
                years.len(),
                out.display(),
                outcome.report.converged
            );
        }
        (Some(_), Some(_)) => anyhow::bail!("set exactly one of --count and --rse"),
        (None, None) => anyhow::bail!("missing --count or --rse (flag or config)"),
    }
    Ok(())
}

pub fn dispatch(args: DispatchArgs, cfg: &RunConfig) -> Result<()> {
    let weather = existing(require(args.weather, cfg.weather.clone(), "weather")?, "weather file")?;
    let grid = open_grid(args.problem, cfg)?;
    let out = require(args.out, cfg.out.clone(), "out")?;
    let (ids, columns) = read_weather_csv(&weather)?;
    let problem = grid.build_problem(&ids, &columns)?;
    let hours = args.horizon.unwrap_or(problem.hours());
    let result = solve_dispatch(&problem, hours)?;
    create_dir(&out)?;
    write_result_csv(&problem, &result, &out.join("dispatch.csv"))?;
    DispatchSummary::from_result(&problem, &result).write_json(&out.join("summary.json"))?;
    info!("dispatched {hours} h, cost {:.2}", result.objective);
    Ok(())
}

pub fn converge(args: ConvergeArgs, cfg: &RunConfig) -> Result<()> {
    let model = open_model(args.model, cfg)?;
    let grid = open_grid(args.problem, cfg)?;
    let out = require(args.out, cfg.out.clone(), "out")?;
    let rse = require(args.rse, cfg.convergence.rse, "rse")?;
    let loop_cfg = loop_config(cfg, rse, args.seed, args.min_years, args.max_years, args.horizon);
    let outcome = run_until_converged(&model, &grid, &loop_cfg)?;
    create_dir(&out)?;
    write_outcome(&outcome, &out)?;
    if args.write_years {
        let years_dir = out.join("years");
        create_dir(&years_dir)?;
        for &seed in &outcome.report.seeds {
            let year = generate_year(&model, seed)?;
            write_year_csv(&model, &year, &years_dir.join(year_file_name(seed)))?;
        }
    }
    info!(
        "n = {}, converged = {}, report in {}",
        outcome.report.n,
        outcome.report.converged,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct NoiseRow<'a> {
    bin: usize,
    period_hours: f64,
    series: &'a str,
    rms_magnitude: f64,
}

#[derive(Serialize)]
struct PhaseRow<'a> {
    bin: usize,
    period_hours: f64,
    series: &'a str,
    mean_magnitude: f64,
    phase_deg: f64,
}

#[derive(Serialize)]
struct AcfRow<'a> {
    series: &'a str,
    lag: usize,
    acf: f64,
}

#[derive(Serialize)]
struct NormalityRow<'a> {
    bin: usize,
    period_hours: f64,
    series: &'a str,
    part: &'static str,
    w: f64,
    p_value: f64,
}

#[derive(Serialize)]
struct MagnitudeAcfRow<'a> {
    series: &'a str,
    window: usize,
    lag1: f64,
    bound: f64,
}

pub fn diagnose(args: DiagnoseArgs, cfg: &RunConfig) -> Result<()> {
    let model = open_model(args.model, cfg)?;
    let out = require(args.out, cfg.out.clone(), "out")?;
    create_dir(&out)?;
    let spectrum = spectrum_table(&model);
    write_csv(&out.join("spectrum.csv"), &spectrum)?;
    write_csv(
        &out.join("noise_intensity.csv"),
        spectrum.iter().map(|r| NoiseRow {
            bin: r.bin,
            period_hours: r.period_hours,
            series: &r.series,
            rms_magnitude: r.rms_magnitude,
        }),
    )?;
    write_csv(
        &out.join("phase.csv"),
        spectrum.iter().map(|r| PhaseRow {
            bin: r.bin,
            period_hours: r.period_hours,
            series: &r.series,
            mean_magnitude: r.mean_magnitude,
            phase_deg: r.phase_deg,
        }),
    )?;
    write_csv(&out.join("correlation.csv"), correlation_table(&model))?;

    if args.panel.is_some() || cfg.panel.is_some() {
        let panel = open_panel(args.panel, args.meta, cfg)?;
        let alpha = args.alpha.or(cfg.diagnostics.alpha).unwrap_or(0.05);
        let max_lag = args.max_lag.or(cfg.diagnostics.max_lag).unwrap_or(48);
        let window = cfg.diagnostics.window.unwrap_or(100);
        let n_worst = cfg.diagnostics.n_worst.unwrap_or(20);
        let prepared = prepare_panel(&panel, &model_fit_config(&model))?;
        let coeffs = CoefficientTensor::from_tensor(&prepared.tensor)?;
        let ids: Vec<&str> = prepared.meta.iter().map(|m| m.id.as_str()).collect();

        if coeffs.n_years() < 3 {
            warn!(
                "normality tables skipped: {} training years, at least 3 needed",
                coeffs.n_years()
            );
        } else {
            let report = normality_diagnostic(&coeffs, alpha, n_worst)?;
            write_json(&out.join("normality.json"), &report)?;
            write_csv(
                &out.join("normality.csv"),
                report.entries.iter().map(|e| NormalityRow {
                    bin: e.bin,
                    period_hours: period_hours(e.bin),
                    series: ids[e.series],
                    part: match e.part {
                        spectral_weather::diagnostics::Part::Re => "re",
                        spectral_weather::diagnostics::Part::Im => "im",
                    },
                    w: e.w,
                    p_value: e.p_value,
                }),
            )?;
        }

        let mut acf_rows = Vec::new();
        for (p, id) in ids.iter().enumerate() {
            let cdf = fit_ecdf(panel.column(p))?;
            let z = gaussianize(panel.column(p), &cdf);
            for (lag, acf) in autocorrelation(&z, max_lag)?.into_iter().enumerate() {
                acf_rows.push(AcfRow { series: id, lag, acf });
            }
        }
        write_csv(&out.join("autocorrelation.csv"), acf_rows)?;

        let bound = white_noise_bound(window);
        let mut mag_rows = Vec::new();
        for (p, id) in ids.iter().enumerate() {
            for (w, lag1) in magnitude_lag1_windows(&coeffs, p, window)?.into_iter().enumerate() {
                mag_rows.push(MagnitudeAcfRow {
                    series: id,
                    window: w,
                    lag1,
                    bound,
                });
            }
        }
        write_csv(&out.join("magnitude_autocorrelation.csv"), mag_rows)?;
    }
    info!("diagnostics written to {}", out.display());
    Ok(())
}

fn model_fit_config(model: &SpectralModel) -> spectral_weather::FitConfig {
    let p = model.provenance();
    spectral_weather::FitConfig {
        year_anchor: p.year_anchor,
        ar_fill: p.ar_fill,
        night_threshold: p.night_threshold,
        reference_year: p.reference_year,
    }
}

pub fn synth(args: SynthArgs) -> Result<()> {
    create_dir(&args.out)?;
    let panel = synth::reference_panel(args.first_year, args.years, args.seed)?;
    panel.write_csv(&args.out.join("panel.csv"))?;
    write_meta(&args.out.join("meta.json"), panel.meta())?;
    info!(
        "{} years of {} series written to {}",
        args.years,
        panel.n_series(),
        args.out.display()
    );
    Ok(())
}
