//! Hourly multi-zone economic dispatch.
//!
//! Per hour `t` and zone `m`:
//!
//! ```text
//! Σ_k∈m P_k + P^RES_m + Σ_s∈m (d_s − c_s) + L_m − P^NEx_m = D_m
//! P^NEx_m = Σ_out F − Σ_in F,      0 ≤ F ≤ NTC
//! 0 ≤ P_k ≤ P^max,  0 ≤ P^RES_m ≤ P^RES,max_m,  0 ≤ L_m ≤ D_m
//! E_s,t = E_s,t−1 + √η c_s − d_s / √η,  0 ≤ E ≤ E^max,  E_s,0 = E^Ini
//! ```
//!
//! minimising `Σ c_k P_k + VOLL Σ L_m`. Without storage every hour is an
//! independent LP; with storage the horizon is cut into blocks of
//! `block_hours` with the energy state carried across block boundaries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lp::{LinearProgram, Var};
use crate::problem::DispatchProblem;
use crate::{Error, Result};

/// Feasibility tolerance on balances, bounds and the storage replay.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub hours: usize,
    /// `[plant][hour]`, MW.
    pub plant_output: Vec<Vec<f64>>,
    /// `[storage][hour]`, MW drawn from the grid.
    pub storage_charge: Vec<Vec<f64>>,
    /// `[storage][hour]`, MW delivered to the grid.
    pub storage_discharge: Vec<Vec<f64>>,
    /// `[storage][hour]`, MWh at the end of each hour.
    pub storage_energy: Vec<Vec<f64>>,
    /// `[zone][hour]` dispatched RES.
    pub res_dispatch: Vec<Vec<f64>>,
    /// `[zone][hour]` available minus dispatched RES.
    pub dumped: Vec<Vec<f64>>,
    /// `[zone][hour]` unserved demand.
    pub lost_load: Vec<Vec<f64>>,
    /// `[zone][hour]` exports minus imports.
    pub net_export: Vec<Vec<f64>>,
    /// `[interconnector][hour]`, MW in the declared direction.
    pub flows: Vec<Vec<f64>>,
    pub objective: f64,
}

struct HourVars {
    gen: Vec<Var>,
    res: Vec<Var>,
    lost: Vec<Var>,
    nex: Vec<Var>,
    flow: Vec<Var>,
    charge: Vec<Var>,
    discharge: Vec<Var>,
    energy: Vec<Var>,
}

struct BlockSolution {
    start: usize,
    values: Vec<HourValues>,
}

struct HourValues {
    gen: Vec<f64>,
    res: Vec<f64>,
    lost: Vec<f64>,
    nex: Vec<f64>,
    flow: Vec<f64>,
    charge: Vec<f64>,
    discharge: Vec<f64>,
    energy: Vec<f64>,
}

fn solve_block(problem: &DispatchProblem, start: usize, end: usize, initial: &[f64]) -> Result<BlockSolution> {
    let mut lp = LinearProgram::new();
    let mut layout = Vec::with_capacity(end - start);
    let plant_zone: Vec<usize> = problem
        .plants
        .iter()
        .map(|p| problem.zone_index(&p.zone).expect("validated"))
        .collect();
    let storage_zone: Vec<usize> = problem
        .storages
        .iter()
        .map(|s| problem.zone_index(&s.zone).expect("validated"))
        .collect();
    let line_ends: Vec<(usize, usize)> = problem
        .interconnectors
        .iter()
        .map(|l| {
            (
                problem.zone_index(&l.from).expect("validated"),
                problem.zone_index(&l.to).expect("validated"),
            )
        })
        .collect();

    for t in start..end {
        let gen: Vec<Var> = problem
            .plants
            .iter()
            .map(|p| lp.add_var(p.cost, 0.0, p.capacity))
            .collect();
        let res: Vec<Var> = problem
            .zones
            .iter()
            .map(|z| lp.add_var(0.0, 0.0, z.res_availability[t]))
            .collect();
        let lost: Vec<Var> = problem
            .zones
            .iter()
            .map(|z| lp.add_var(problem.voll, 0.0, z.demand[t]))
            .collect();
        let nex: Vec<Var> = problem
            .zones
            .iter()
            .map(|_| lp.add_var(0.0, f64::NEG_INFINITY, f64::INFINITY))
            .collect();
        let flow: Vec<Var> = problem
            .interconnectors
            .iter()
            .map(|l| lp.add_var(0.0, 0.0, l.ntc))
            .collect();
        let charge: Vec<Var> = problem
            .storages
            .iter()
            .map(|s| lp.add_var(0.0, 0.0, s.max_charge))
            .collect();
        let discharge: Vec<Var> = problem
            .storages
            .iter()
            .map(|s| lp.add_var(0.0, 0.0, s.max_discharge))
            .collect();
        let energy: Vec<Var> = problem
            .storages
            .iter()
            .map(|s| lp.add_var(0.0, 0.0, s.energy_capacity))
            .collect();

        for (m, zone) in problem.zones.iter().enumerate() {
            let mut terms = vec![(res[m], 1.0), (lost[m], 1.0), (nex[m], -1.0)];
            terms.extend((0..gen.len()).filter(|&k| plant_zone[k] == m).map(|k| (gen[k], 1.0)));
            for s in (0..charge.len()).filter(|&s| storage_zone[s] == m) {
                terms.push((discharge[s], 1.0));
                terms.push((charge[s], -1.0));
            }
            lp.add_eq(&terms, zone.demand[t]);

            let mut export = vec![(nex[m], 1.0)];
            for (l, &(from, to)) in line_ends.iter().enumerate() {
                if from == m {
                    export.push((flow[l], -1.0));
                } else if to == m {
                    export.push((flow[l], 1.0));
                }
            }
            lp.add_eq(&export, 0.0);
        }

        for (s, storage) in problem.storages.iter().enumerate() {
            let root = storage.efficiency.sqrt();
            let mut terms = vec![(energy[s], 1.0), (charge[s], -root), (discharge[s], 1.0 / root)];
            let rhs = if t == start {
                initial[s]
            } else {
                terms.push((layout.last().map(|h: &HourVars| h.energy[s]).unwrap(), -1.0));
                0.0
            };
            lp.add_eq(&terms, rhs);
        }
        layout.push(HourVars {
            gen,
            res,
            lost,
            nex,
            flow,
            charge,
            discharge,
            energy,
        });
    }

    let (_, x) = lp.solve()?;
    let pick = |vars: &[Var]| -> Vec<f64> { vars.iter().map(|v| x[v.index()]).collect() };
    let values = layout
        .iter()
        .map(|h| HourValues {
            gen: pick(&h.gen),
            res: pick(&h.res),
            lost: pick(&h.lost),
            nex: pick(&h.nex),
            flow: pick(&h.flow),
            charge: pick(&h.charge),
            discharge: pick(&h.discharge),
            energy: pick(&h.energy),
        })
        .collect();
    Ok(BlockSolution { start, values })
}

/// Solves the first `horizon` hours of `problem`.
pub fn solve_dispatch(problem: &DispatchProblem, horizon: usize) -> Result<DispatchResult> {
    problem.validate()?;
    let available = problem.hours();
    if horizon > available {
        return Err(Error::Horizon { horizon, available });
    }
    let blocks: Vec<BlockSolution> = if problem.storages.is_empty() {
        (0..horizon)
            .into_par_iter()
            .map(|t| solve_block(problem, t, t + 1, &[]))
            .collect::<Result<_>>()?
    } else {
        let size = if problem.block_hours == 0 {
            horizon.max(1)
        } else {
            problem.block_hours
        };
        let mut state: Vec<f64> = problem.storages.iter().map(|s| s.initial_energy).collect();
        let mut out = Vec::new();
        let mut start = 0;
        while start < horizon {
            let end = (start + size).min(horizon);
            let block = solve_block(problem, start, end, &state)?;
            state = block.values.last().unwrap().energy.clone();
            out.push(block);
            start = end;
        }
        out
    };

    let (nz, np, ns, nl) = (
        problem.zones.len(),
        problem.plants.len(),
        problem.storages.len(),
        problem.interconnectors.len(),
    );
    let mut result = DispatchResult {
        hours: horizon,
        plant_output: vec![vec![0.0; horizon]; np],
        storage_charge: vec![vec![0.0; horizon]; ns],
        storage_discharge: vec![vec![0.0; horizon]; ns],
        storage_energy: vec![vec![0.0; horizon]; ns],
        res_dispatch: vec![vec![0.0; horizon]; nz],
        dumped: vec![vec![0.0; horizon]; nz],
        lost_load: vec![vec![0.0; horizon]; nz],
        net_export: vec![vec![0.0; horizon]; nz],
        flows: vec![vec![0.0; horizon]; nl],
        objective: 0.0,
    };
    for block in blocks {
        for (offset, h) in block.values.into_iter().enumerate() {
            let t = block.start + offset;
            for k in 0..np {
                result.plant_output[k][t] = h.gen[k];
            }
            for m in 0..nz {
                result.res_dispatch[m][t] = h.res[m];
                result.dumped[m][t] = (problem.zones[m].res_availability[t] - h.res[m]).max(0.0);
                result.lost_load[m][t] = h.lost[m];
                result.net_export[m][t] = h.nex[m];
            }
            for l in 0..nl {
                result.flows[l][t] = h.flow[l];
            }
            for s in 0..ns {
                result.storage_charge[s][t] = h.charge[s];
                result.storage_discharge[s][t] = h.discharge[s];
                result.storage_energy[s][t] = h.energy[s];
            }
        }
    }
    cancel_counterflows(problem, &mut result);
    result.objective = result.cost(problem);
    result.check(problem)?;
    Ok(result)
}

/// Opposite flows on a pair of zones carry no cost; keep only the net.
fn cancel_counterflows(problem: &DispatchProblem, result: &mut DispatchResult) {
    let lines = &problem.interconnectors;
    for a in 0..lines.len() {
        for b in (a + 1)..lines.len() {
            if lines[a].from == lines[b].to && lines[a].to == lines[b].from {
                for t in 0..result.hours {
                    let common = result.flows[a][t].min(result.flows[b][t]);
                    if common > 0.0 {
                        result.flows[a][t] -= common;
                        result.flows[b][t] -= common;
                    }
                }
            }
        }
    }
}

impl DispatchResult {
    /// `Σ c_k P_k + VOLL Σ L` over the solved hours.
    pub fn cost(&self, problem: &DispatchProblem) -> f64 {
        let gen: f64 = problem
            .plants
            .iter()
            .zip(&self.plant_output)
            .map(|(p, out)| p.cost * out.iter().sum::<f64>())
            .sum();
        let lost: f64 = self.lost_load.iter().flatten().sum();
        gen + problem.voll * lost
    }

    /// Largest zonal balance residual over all zone-hours, MW.
    pub fn balance_residual(&self, problem: &DispatchProblem) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, zone) in problem.zones.iter().enumerate() {
            for t in 0..self.hours {
                let mut supply = self.res_dispatch[m][t] + self.lost_load[m][t];
                for (k, p) in problem.plants.iter().enumerate() {
                    if p.zone == zone.id {
                        supply += self.plant_output[k][t];
                    }
                }
                for (s, st) in problem.storages.iter().enumerate() {
                    if st.zone == zone.id {
                        supply += self.storage_discharge[s][t] - self.storage_charge[s][t];
                    }
                }
                for (l, line) in problem.interconnectors.iter().enumerate() {
                    if line.to == zone.id {
                        supply += self.flows[l][t];
                    }
                    if line.from == zone.id {
                        supply -= self.flows[l][t];
                    }
                }
                worst = worst.max((supply - zone.demand[t]).abs());
            }
        }
        worst
    }

    /// Largest gap between reported energy and a replay of the state
    /// equation from the initial energy, MWh.
    pub fn storage_replay_error(&self, problem: &DispatchProblem) -> f64 {
        let mut worst: f64 = 0.0;
        for (s, st) in problem.storages.iter().enumerate() {
            let root = st.efficiency.sqrt();
            let mut e = st.initial_energy;
            for t in 0..self.hours {
                e += root * self.storage_charge[s][t] - self.storage_discharge[s][t] / root;
                worst = worst.max((e - self.storage_energy[s][t]).abs());
            }
        }
        worst
    }

    /// Largest bound violation over all variables.
    pub fn bound_violation(&self, problem: &DispatchProblem) -> f64 {
        let over = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
        let mut worst: f64 = 0.0;
        for t in 0..self.hours {
            for (k, p) in problem.plants.iter().enumerate() {
                worst = worst.max(over(self.plant_output[k][t], 0.0, p.capacity));
            }
            for (m, z) in problem.zones.iter().enumerate() {
                worst = worst.max(over(self.res_dispatch[m][t], 0.0, z.res_availability[t]));
                worst = worst.max(over(self.lost_load[m][t], 0.0, z.demand[t]));
            }
            for (l, line) in problem.interconnectors.iter().enumerate() {
                worst = worst.max(over(self.flows[l][t], 0.0, line.ntc));
            }
            for (s, st) in problem.storages.iter().enumerate() {
                worst = worst.max(over(self.storage_charge[s][t], 0.0, st.max_charge));
                worst = worst.max(over(self.storage_discharge[s][t], 0.0, st.max_discharge));
                worst = worst.max(over(self.storage_energy[s][t], 0.0, st.energy_capacity));
            }
        }
        worst
    }

    fn check(&self, problem: &DispatchProblem) -> Result<()> {
        for (what, residual) in [
            ("zonal balance", self.balance_residual(problem)),
            ("storage state equation", self.storage_replay_error(problem)),
            ("variable bounds", self.bound_violation(problem)),
        ] {
            if residual > RESIDUAL_TOLERANCE {
                return Err(Error::Residual {
                    what: what.into(),
                    residual,
                });
            }
        }
        Ok(())
    }

    /// Energy delivered per plant over the horizon, MWh.
    pub fn plant_energy(&self) -> Vec<f64> {
        self.plant_output.iter().map(|o| o.iter().sum()).collect()
    }
}
