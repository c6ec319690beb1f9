//! Generate → dispatch loop with a relative-standard-error stop rule.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spectral_weather::sampler::{derive_seed, generate_year};
use spectral_weather::SpectralModel;

use crate::problem::GridConfig;
use crate::results::DispatchSummary;
use crate::solve::solve_dispatch;
use crate::{Error, Result};

/// Welford accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub n: u64,
    pub mean: f64,
    /// Sum of squared deviations from the running mean.
    pub m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, sample: f64) -> Result<()> {
        if !sample.is_finite() {
            return Err(Error::NonFiniteSample(sample.to_string()));
        }
        self.n += 1;
        let delta = sample - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (sample - self.mean);
        Ok(())
    }

    /// Sample variance, `None` below two samples.
    pub fn variance(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.m2.max(0.0) / (self.n - 1) as f64)
    }
}

/// `√(s² / n) / |mean|`.
pub fn relative_standard_error(stats: &RunningStats) -> Result<f64> {
    let var = stats.variance().ok_or(Error::TooFewSamples(stats.n))?;
    if stats.mean == 0.0 {
        return Err(Error::ZeroMean);
    }
    Ok((var / stats.n as f64).sqrt() / stats.mean.abs())
}

/// Streaming statistics for a set of named metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStats {
    pub metrics: BTreeMap<String, RunningStats>,
}

impl ConvergenceStats {
    pub fn new(names: &[String]) -> Self {
        ConvergenceStats {
            metrics: names.iter().map(|n| (n.clone(), RunningStats::new())).collect(),
        }
    }

    pub fn update(&mut self, sample: &BTreeMap<String, f64>) -> Result<()> {
        for (name, stats) in &mut self.metrics {
            let v = *sample
                .get(name)
                .ok_or_else(|| Error::Settings(format!("metric \"{name}\" missing from year summary")))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteSample(name.clone()));
            }
            stats.update(v)?;
        }
        Ok(())
    }

    /// RSE per metric; zero-mean metrics map to `None`.
    pub fn errors(&self) -> Result<BTreeMap<String, Option<f64>>> {
        self.metrics
            .iter()
            .map(|(name, s)| match relative_standard_error(s) {
                Ok(r) => Ok((name.clone(), Some(r))),
                Err(Error::ZeroMean) => Ok((name.clone(), None)),
                Err(e) => Err(e),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceConfig {
    pub threshold: f64,
    pub min_years: usize,
    pub max_years: usize,
    pub master_seed: u64,
    /// Metric names from [`DispatchSummary::metrics`]; empty selects every
    /// `generation/<zone>/<fuel>` entry.
    pub metrics: Vec<String>,
    /// Years generated and solved concurrently per round.
    pub batch_size: usize,
    /// Hours dispatched per year; `None` takes the full year.
    pub horizon: Option<usize>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            threshold: 0.01,
            min_years: 30,
            max_years: 1000,
            master_seed: 0,
            metrics: Vec::new(),
            batch_size: 0,
            horizon: None,
        }
    }
}

impl ConvergenceConfig {
    fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::Settings(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if self.min_years < 2 {
            return Err(Error::Settings("min_years must be at least 2".into()));
        }
        if self.max_years < self.min_years {
            return Err(Error::Settings("max_years must not be below min_years".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n: u64,
    pub mean: f64,
    pub variance: Option<f64>,
    /// `None` when the mean is zero and the metric was excluded.
    pub rse: Option<f64>,
    pub excluded: bool,
    /// `(n, rse)` every 10 years and at the stop.
    pub trajectory: Vec<(u64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub n: usize,
    pub threshold: f64,
    pub min_years: usize,
    pub max_years: usize,
    pub master_seed: u64,
    pub model_version: String,
    pub seeds: Vec<u64>,
    pub metrics: BTreeMap<String, MetricReport>,
}

impl ConvergenceReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutcome {
    pub report: ConvergenceReport,
    /// One summary per accepted year, in seed order.
    pub summaries: Vec<DispatchSummary>,
    pub stats: ConvergenceStats,
}

/// Generates and dispatches one weather year.
pub fn dispatch_year(
    model: &SpectralModel,
    grid: &GridConfig,
    seed: u64,
    horizon: Option<usize>,
) -> Result<DispatchSummary> {
    let year = generate_year(model, seed)?;
    let ids: Vec<String> = model.meta().iter().map(|m| m.id.clone()).collect();
    let problem = grid.build_problem(&ids, &year.values)?;
    let hours = horizon.unwrap_or(problem.hours());
    let result = solve_dispatch(&problem, hours)?;
    Ok(DispatchSummary::from_result(&problem, &result))
}

fn stop_reached(stats: &ConvergenceStats, threshold: f64) -> Result<bool> {
    Ok(stats.errors()?.values().all(|r| r.is_none_or(|r| r <= threshold)))
}

/// Runs years `derive_seed(master_seed, 0), 1, …` until every tracked
/// metric has RSE ≤ threshold with at least `min_years` samples, or
/// `max_years` is reached. Years are solved in parallel batches and folded
/// in seed order, so `n` does not depend on the batch size.
pub fn run_until_converged(
    model: &SpectralModel,
    grid: &GridConfig,
    cfg: &ConvergenceConfig,
) -> Result<EnsembleOutcome> {
    cfg.validate()?;
    let batch = if cfg.batch_size == 0 {
        rayon::current_num_threads().max(1)
    } else {
        cfg.batch_size
    };
    let mut summaries: Vec<DispatchSummary> = Vec::new();
    let mut seeds = Vec::new();
    let mut stats: Option<ConvergenceStats> = None;
    let mut trajectory: BTreeMap<String, Vec<(u64, Option<f64>)>> = BTreeMap::new();
    let mut converged = false;

    'outer: while summaries.len() < cfg.max_years {
        let start = summaries.len();
        let end = (start + batch).min(cfg.max_years);
        let batch_seeds: Vec<u64> = (start..end).map(|i| derive_seed(cfg.master_seed, i as u64)).collect();
        let solved: Vec<DispatchSummary> = batch_seeds
            .par_iter()
            .map(|&s| dispatch_year(model, grid, s, cfg.horizon))
            .collect::<Result<_>>()?;
        for (seed, summary) in batch_seeds.into_iter().zip(solved) {
            let sample = summary.metrics();
            let tracked = stats.get_or_insert_with(|| {
                let names: Vec<String> = if cfg.metrics.is_empty() {
                    sample
                        .keys()
                        .filter(|k| k.starts_with("generation/"))
                        .cloned()
                        .collect()
                } else {
                    cfg.metrics.clone()
                };
                ConvergenceStats::new(&names)
            });
            if tracked.metrics.is_empty() {
                return Err(Error::Settings("no metrics to track".into()));
            }
            tracked.update(&sample)?;
            seeds.push(seed);
            summaries.push(summary);
            let n = summaries.len();
            if n >= 2 && n.is_multiple_of(10) {
                for (name, r) in tracked.errors()? {
                    trajectory.entry(name).or_default().push((n as u64, r));
                }
            }
            if n >= cfg.min_years && stop_reached(tracked, cfg.threshold)? {
                converged = true;
                break 'outer;
            }
            if n >= cfg.max_years {
                break 'outer;
            }
        }
    }

    let stats = stats.expect("at least one year is run");
    let n = summaries.len();
    let errors = stats.errors()?;
    let mut metrics = BTreeMap::new();
    for (name, s) in &stats.metrics {
        let rse = errors[name];
        let mut traj = trajectory.remove(name).unwrap_or_default();
        if traj.last().map(|t| t.0) != Some(n as u64) {
            traj.push((n as u64, rse));
        }
        if rse.is_none() {
            log::warn!("metric {name} has zero mean and is excluded from the stop rule");
        }
        metrics.insert(
            name.clone(),
            MetricReport {
                n: s.n,
                mean: s.mean,
                variance: s.variance(),
                rse,
                excluded: rse.is_none(),
                trajectory: traj,
            },
        );
    }
    if !converged {
        log::warn!("no convergence at RSE {} after {n} years", cfg.threshold);
    }
    Ok(EnsembleOutcome {
        report: ConvergenceReport {
            converged,
            n,
            threshold: cfg.threshold,
            min_years: cfg.min_years,
            max_years: cfg.max_years,
            master_seed: cfg.master_seed,
            model_version: model.version().to_string(),
            seeds,
            metrics,
        },
        summaries,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn single_sample_has_no_variance() {
        let mut s = RunningStats::new();
        s.update(2.0).unwrap();
        assert_eq!((s.n, s.mean), (1, 2.0));
        assert_eq!(s.variance(), None);
        assert!(matches!(relative_standard_error(&s), Err(Error::TooFewSamples(1))));
    }

    #[test]
    fn three_samples() {
        let mut s = RunningStats::new();
        for x in [1.0, 2.0, 3.0] {
            s.update(x).unwrap();
        }
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance(), Some(1.0));
    }

    #[test]
    fn rejects_non_finite() {
        let mut s = RunningStats::new();
        assert!(s.update(f64::NAN).is_err());
        assert!(s.update(f64::INFINITY).is_err());
        assert_eq!(s.n, 0);
    }

    #[test]
    fn rse_formula() {
        let s = RunningStats {
            n: 4,
            mean: 10.0,
            m2: 12.0,
        };
        assert!((relative_standard_error(&s).unwrap() - 0.1).abs() < 1e-15);
        let flat = RunningStats {
            n: 5,
            mean: 3.0,
            m2: 0.0,
        };
        assert_eq!(relative_standard_error(&flat).unwrap(), 0.0);
        let zero = RunningStats {
            n: 5,
            mean: 0.0,
            m2: 1.0,
        };
        assert!(matches!(relative_standard_error(&zero), Err(Error::ZeroMean)));
    }

    #[test]
    fn settings_are_checked() {
        let bad = ConvergenceConfig {
            min_years: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ConvergenceConfig {
            threshold: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(ConvergenceConfig::default().validate().is_ok());
    }

    #[test]
    fn million_samples_match_two_pass() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..1_000_000).map(|_| 1e3 + rng.random::<f64>() * 50.0).collect();
        let mut s = RunningStats::new();
        for &x in &xs {
            s.update(x).unwrap();
        }
        let (mean, var) = two_pass(&xs);
        assert!(((s.mean - mean) / mean).abs() < 1e-9);
        assert!(((s.variance().unwrap() - var) / var).abs() < 1e-9);
    }
}
