//! k-medoids style regional clustering on gaussianized series.

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::normalize::{fit_ecdf, gaussianize};
use crate::panel::{Parameter, WeatherPanel};
use crate::stats::quantile_sorted;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    /// Cluster index per series.
    pub assignment: Vec<usize>,
    /// Series index of each cluster's representative.
    pub representatives: Vec<usize>,
    pub n_clusters: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterModel {
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&s| self.assignment[s] == c)
            .collect()
    }
}

/// Symmetric matrix of mean squared differences.
#[derive(Debug, Clone)]
pub struct MseMatrix {
    n: usize,
    values: Vec<f64>,
}

impl MseMatrix {
    pub fn new(series: &[Vec<f64>]) -> Result<Self> {
        let n = series.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let len = series[0].len();
        if len == 0 {
            return Err(Error::EmptyInput);
        }
        if let Some(bad) = series.iter().find(|s| s.len() != len) {
            return Err(Error::LengthMismatch {
                expected: len,
                got: bad.len(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        series[i]
                            .iter()
                            .zip(&series[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            / len as f64
                    })
                    .collect()
            })
            .collect();
        let mut values: Vec<f64> = rows.into_iter().flatten().collect();
        // Exact symmetry keeps tie-breaking order independent.
        for i in 0..n {
            for j in (i + 1)..n {
                let v = values[i * n + j];
                values[j * n + i] = v;
            }
        }
        Ok(MseMatrix { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mse(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn rmse(&self, i: usize, j: usize) -> f64 {
        self.mse(i, j).sqrt()
    }
}

/// Member of `members` with the lowest summed MSE to the others; ties go to
/// the lowest series index.
pub fn medoid(dist: &MseMatrix, members: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &m in members {
        let cost: f64 = members.iter().map(|&j| dist.mse(m, j)).sum();
        match best {
            Some((b, c)) if cost > c || (cost == c && m > b) => {}
            _ => best = Some((m, cost)),
        }
    }
    best.map(|(m, _)| m)
}

/// Summed MSE of every series to its representative.
pub fn total_cost(dist: &MseMatrix, model: &ClusterModel) -> f64 {
    model
        .assignment
        .iter()
        .enumerate()
        .map(|(s, &c)| dist.mse(s, model.representatives[c]))
        .sum()
}

/// Nearest representative by RMSE, ties to the lowest cluster index.
fn nearest(dist: &MseMatrix, s: usize, reps: &[usize]) -> usize {
    let mut best = 0;
    for c in 1..reps.len() {
        if dist.rmse(s, reps[c]) < dist.rmse(s, reps[best]) {
            best = c;
        }
    }
    best
}

/// True when every series is at least as close to its own representative
/// as to any other.
pub fn is_voronoi(dist: &MseMatrix, model: &ClusterModel) -> bool {
    model.assignment.iter().enumerate().all(|(s, &c)| {
        let own = dist.rmse(s, model.representatives[c]);
        model.representatives.iter().all(|&r| own <= dist.rmse(s, r))
    })
}

pub fn cluster_series(series: &[Vec<f64>], n_clusters: usize, seed: u64, max_iter: usize) -> Result<ClusterModel> {
    let dist = MseMatrix::new(series)?;
    cluster_with_distances(&dist, n_clusters, seed, max_iter)
}

pub fn cluster_with_distances(dist: &MseMatrix, n_clusters: usize, seed: u64, max_iter: usize) -> Result<ClusterModel> {
    let n = dist.len();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::Cluster(format!(
            "n_clusters must lie in 1..={n}, got {n_clusters}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut assignment = vec![0; n];
    for (pos, &s) in order.iter().enumerate() {
        assignment[s] = if pos < n_clusters {
            pos
        } else {
            rng.random_range(0..n_clusters)
        };
    }

    let mut reps = vec![0; n_clusters];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        for (c, rep) in reps.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&s| assignment[s] == c).collect();
            *rep = medoid(dist, &members).expect("clusters are never empty here");
        }
        let mut next: Vec<usize> = (0..n).map(|s| nearest(dist, s, &reps)).collect();
        for (c, &r) in reps.iter().enumerate() {
            next[r] = c;
        }
        repair_empty(dist, &mut next, &mut reps);
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }
    if !converged {
        warn!("clustering stopped after {max_iter} iterations without converging");
        for (c, rep) in reps.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&s| assignment[s] == c).collect();
            *rep = medoid(dist, &members).expect("clusters are never empty here");
        }
    }
    Ok(ClusterModel {
        assignment,
        representatives: reps,
        n_clusters,
        iterations,
        converged,
    })
}

/// Gives every empty cluster the non-representative series farthest from
/// its own representative.
fn repair_empty(dist: &MseMatrix, assignment: &mut [usize], reps: &mut [usize]) {
    let k = reps.len();
    loop {
        let Some(empty) = (0..k).find(|&c| !assignment.contains(&c)) else {
            return;
        };
        let candidate = (0..assignment.len()).filter(|s| !reps.contains(s)).max_by(|&a, &b| {
            let da = dist.rmse(a, reps[assignment[a]]);
            let db = dist.rmse(b, reps[assignment[b]]);
            da.total_cmp(&db).then(b.cmp(&a))
        });
        let Some(s) = candidate else {
            return;
        };
        warn!("cluster {empty} became empty; reseeded with series {s}");
        assignment[s] = empty;
        reps[empty] = s;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub cluster: usize,
    pub representative: String,
    pub members: Vec<String>,
    pub rmse_mean: f64,
    pub rmse_median: f64,
    pub rmse_p90: f64,
    pub rmse_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterClusters {
    pub parameter: Parameter,
    pub model: ClusterModel,
    pub assignment: Vec<(String, usize)>,
    pub clusters: Vec<ClusterStats>,
}

pub fn cluster_stats(dist: &MseMatrix, model: &ClusterModel, ids: &[String]) -> Vec<ClusterStats> {
    (0..model.n_clusters)
        .map(|c| {
            let members = model.members(c);
            let rep = model.representatives[c];
            let mut rmse: Vec<f64> = members.iter().map(|&s| dist.rmse(s, rep)).collect();
            rmse.sort_by(f64::total_cmp);
            ClusterStats {
                cluster: c,
                representative: ids[rep].clone(),
                members: members.iter().map(|&s| ids[s].clone()).collect(),
                rmse_mean: rmse.iter().sum::<f64>() / rmse.len() as f64,
                rmse_median: quantile_sorted(&rmse, 0.5),
                rmse_p90: quantile_sorted(&rmse, 0.9),
                rmse_max: rmse[rmse.len() - 1],
            }
        })
        .collect()
}

/// Clusters each parameter type separately on self-gaussianized series.
/// Parameters with fewer series than `n_clusters` get one cluster per series.
pub fn cluster_panel(
    panel: &WeatherPanel,
    n_clusters: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Vec<ParameterClusters>> {
    let mut parameters: Vec<Parameter> = panel.meta().iter().map(|m| m.parameter).collect();
    parameters.sort();
    parameters.dedup();
    let mut out = Vec::with_capacity(parameters.len());
    for parameter in parameters {
        let idx: Vec<usize> = (0..panel.n_series())
            .filter(|&p| panel.meta()[p].parameter == parameter)
            .collect();
        let ids: Vec<String> = idx.iter().map(|&p| panel.meta()[p].id.clone()).collect();
        let series: Vec<Vec<f64>> = idx
            .par_iter()
            .map(|&p| fit_ecdf(panel.column(p)).map(|cdf| gaussianize(panel.column(p), &cdf)))
            .collect::<Result<_>>()?;
        let dist = MseMatrix::new(&series)?;
        let k = n_clusters.min(idx.len());
        let model = cluster_with_distances(&dist, k, seed, max_iter)?;
        let clusters = cluster_stats(&dist, &model, &ids);
        let assignment = ids.iter().cloned().zip(model.assignment.iter().copied()).collect();
        out.push(ParameterClusters {
            parameter,
            model,
            assignment,
            clusters,
        });
    }
    Ok(out)
}
