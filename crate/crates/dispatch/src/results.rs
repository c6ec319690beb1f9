//! Result tables: long-format hourly CSV and an annual summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::problem::DispatchProblem;
use crate::solve::DispatchResult;
use crate::{Error, Result};

/// Annual totals of one solved year. Energies in MWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchSummary {
    pub hours: usize,
    pub objective: f64,
    pub generation_by_fuel: BTreeMap<String, f64>,
    /// `zone → fuel → MWh`.
    pub generation_by_zone: BTreeMap<String, BTreeMap<String, f64>>,
    pub res_dispatched: BTreeMap<String, f64>,
    pub dumped_energy: BTreeMap<String, f64>,
    pub lost_load: BTreeMap<String, f64>,
    /// Exports minus imports per zone.
    pub net_export: BTreeMap<String, f64>,
    /// `"from->to"` → MWh.
    pub interconnector_flow: BTreeMap<String, f64>,
}

impl DispatchSummary {
    pub fn from_result(problem: &DispatchProblem, result: &DispatchResult) -> Self {
        let total = |v: &[f64]| v.iter().sum::<f64>();
        let mut by_fuel = BTreeMap::new();
        let mut by_zone: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for zone in &problem.zones {
            by_zone.entry(zone.id.clone()).or_default();
        }
        for (plant, out) in problem.plants.iter().zip(&result.plant_output) {
            let e = total(out);
            *by_fuel.entry(plant.fuel.clone()).or_insert(0.0) += e;
            *by_zone
                .entry(plant.zone.clone())
                .or_default()
                .entry(plant.fuel.clone())
                .or_insert(0.0) += e;
        }
        let per_zone = |rows: &[Vec<f64>]| -> BTreeMap<String, f64> {
            problem
                .zones
                .iter()
                .zip(rows)
                .map(|(z, r)| (z.id.clone(), total(r)))
                .collect()
        };
        let mut flow = BTreeMap::new();
        for (line, f) in problem.interconnectors.iter().zip(&result.flows) {
            *flow.entry(format!("{}->{}", line.from, line.to)).or_insert(0.0) += total(f);
        }
        DispatchSummary {
            hours: result.hours,
            objective: result.objective,
            generation_by_fuel: by_fuel,
            generation_by_zone: by_zone,
            res_dispatched: per_zone(&result.res_dispatch),
            dumped_energy: per_zone(&result.dumped),
            lost_load: per_zone(&result.lost_load),
            net_export: per_zone(&result.net_export),
            interconnector_flow: flow,
        }
    }

    /// Named scalar metrics; `generation/<zone>/<fuel>` is the default set
    /// tracked by the convergence loop.
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (zone, fuels) in &self.generation_by_zone {
            for (fuel, e) in fuels {
                out.insert(format!("generation/{zone}/{fuel}"), *e);
            }
        }
        for (fuel, e) in &self.generation_by_fuel {
            out.insert(format!("fuel/{fuel}"), *e);
        }
        for (name, map) in [
            ("res", &self.res_dispatched),
            ("dumped", &self.dumped_energy),
            ("lost_load", &self.lost_load),
            ("net_export", &self.net_export),
        ] {
            for (zone, v) in map {
                out.insert(format!("{name}/{zone}"), *v);
            }
        }
        out.insert("objective".into(), self.objective);
        out
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// `hour,entity,variable,value` rows for every decision variable.
pub fn write_result_csv(problem: &DispatchProblem, result: &DispatchResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["hour", "entity", "variable", "value"])?;
    let line_ids: Vec<String> = problem
        .interconnectors
        .iter()
        .map(|l| format!("{}->{}", l.from, l.to))
        .collect();
    for t in 0..result.hours {
        let hour = t.to_string();
        let mut row = |entity: &str, variable: &str, value: f64| {
            w.write_record([hour.as_str(), entity, variable, &value.to_string()])
        };
        for (p, out) in problem.plants.iter().zip(&result.plant_output) {
            row(&p.id, "generation", out[t])?;
        }
        for (s, st) in problem.storages.iter().enumerate() {
            row(&st.id, "charge", result.storage_charge[s][t])?;
            row(&st.id, "discharge", result.storage_discharge[s][t])?;
            row(&st.id, "energy", result.storage_energy[s][t])?;
        }
        for (m, z) in problem.zones.iter().enumerate() {
            row(&z.id, "demand", z.demand[t])?;
            row(&z.id, "res", result.res_dispatch[m][t])?;
            row(&z.id, "dumped", result.dumped[m][t])?;
            row(&z.id, "lost_load", result.lost_load[m][t])?;
            row(&z.id, "net_export", result.net_export[m][t])?;
        }
        for (l, id) in line_ids.iter().enumerate() {
            row(id, "flow", result.flows[l][t])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
