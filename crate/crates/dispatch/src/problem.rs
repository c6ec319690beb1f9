//! Grid description (JSON) and the concrete hourly dispatch problem.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::feedin::{solar_to_power, temperature_to_load, wind_to_power, HeatingParams, WindCurve};
use crate::{Error, Result};

pub const DEFAULT_VOLL: f64 = 3000.0;
pub const DEFAULT_BLOCK_HOURS: usize = 168;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub id: String,
    pub zone: String,
    #[serde(default = "default_fuel")]
    pub fuel: String,
    /// MW.
    pub capacity: f64,
    /// Currency per MWh.
    pub cost: f64,
}

fn default_fuel() -> String {
    "other".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storage {
    pub id: String,
    pub zone: String,
    pub max_charge: f64,
    pub max_discharge: f64,
    /// MWh.
    pub energy_capacity: f64,
    /// Round-trip efficiency, applied as √η per direction.
    pub efficiency: f64,
    pub initial_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interconnector {
    pub from: String,
    pub to: String,
    /// Directional limit in MW.
    pub ntc: f64,
}

/// One bidding zone with hourly data attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub demand: Vec<f64>,
    pub res_availability: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchProblem {
    pub zones: Vec<Zone>,
    pub plants: Vec<Plant>,
    pub storages: Vec<Storage>,
    pub interconnectors: Vec<Interconnector>,
    pub voll: f64,
    /// Hours per LP block when storage couples hours; 0 solves the whole
    /// horizon at once.
    pub block_hours: usize,
}

impl DispatchProblem {
    pub fn hours(&self) -> usize {
        self.zones.first().map_or(0, |z| z.demand.len())
    }

    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.zones.is_empty() {
            return Err(Error::InvalidProblem("no zones".into()));
        }
        let mut seen = HashSet::new();
        let ids = self
            .zones
            .iter()
            .map(|z| &z.id)
            .chain(self.plants.iter().map(|p| &p.id))
            .chain(self.storages.iter().map(|s| &s.id));
        for id in ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        if !(self.voll.is_finite() && self.voll > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "VOLL must be positive, got {}",
                self.voll
            )));
        }
        let hours = self.hours();
        for z in &self.zones {
            if z.demand.len() != hours || z.res_availability.len() != hours {
                return Err(Error::InvalidProblem(format!(
                    "zone \"{}\" has inconsistent series lengths",
                    z.id
                )));
            }
            if z.demand
                .iter()
                .chain(&z.res_availability)
                .any(|v| !v.is_finite() || *v < 0.0)
            {
                return Err(Error::InvalidProblem(format!(
                    "zone \"{}\" has negative or non-finite demand or RES availability",
                    z.id
                )));
            }
        }
        let zone_known = |entity: &str, zone: &str| {
            if self.zone_index(zone).is_none() {
                Err(Error::UnknownZone {
                    entity: entity.to_string(),
                    zone: zone.to_string(),
                })
            } else {
                Ok(())
            }
        };
        for p in &self.plants {
            zone_known(&p.id, &p.zone)?;
            if !(p.capacity.is_finite() && p.capacity > 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "plant \"{}\" needs positive capacity",
                    p.id
                )));
            }
            // Negative costs could make lossless storage cycles unbounded.
            if !(p.cost.is_finite() && p.cost >= 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "plant \"{}\" needs a finite nonnegative cost",
                    p.id
                )));
            }
        }
        for s in &self.storages {
            zone_known(&s.id, &s.zone)?;
            let limits = [s.max_charge, s.max_discharge, s.energy_capacity];
            if limits.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "storage \"{}\" has invalid limits",
                    s.id
                )));
            }
            if !(s.efficiency > 0.0 && s.efficiency <= 1.0) {
                return Err(Error::InvalidProblem(format!(
                    "storage \"{}\" efficiency must lie in (0, 1]",
                    s.id
                )));
            }
            if !(0.0..=s.energy_capacity).contains(&s.initial_energy) {
                return Err(Error::InvalidProblem(format!(
                    "storage \"{}\" initial energy outside [0, capacity]",
                    s.id
                )));
            }
        }
        for l in &self.interconnectors {
            let name = format!("interconnector {}->{}", l.from, l.to);
            zone_known(&name, &l.from)?;
            zone_known(&name, &l.to)?;
            if l.from == l.to {
                return Err(Error::InvalidProblem(format!("{name} connects a zone to itself")));
            }
            if !(l.ntc.is_finite() && l.ntc >= 0.0) {
                return Err(Error::InvalidProblem(format!("{name} needs a nonnegative NTC")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LoadSpec {
    Constant(f64),
    Hourly(Vec<f64>),
}

impl LoadSpec {
    fn at(&self, t: usize) -> f64 {
        match self {
            LoadSpec::Constant(v) => *v,
            LoadSpec::Hourly(v) => v[t % v.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    pub id: String,
    pub base_load: LoadSpec,
    #[serde(default)]
    pub heating: Option<HeatingParams>,
    /// Weather series id driving the heating load.
    #[serde(default)]
    pub temperature_series: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technology {
    Wind,
    Solar,
}

/// Installed RES capacity fed by one weather series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEntry {
    pub location: String,
    pub zone: String,
    pub technology: Technology,
    pub capacity: f64,
}

/// Grid definition as read from JSON; weather turns it into a
/// [`DispatchProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(default = "default_voll")]
    pub voll: f64,
    #[serde(default = "default_block_hours")]
    pub block_hours: usize,
    pub zones: Vec<ZoneConfig>,
    pub plants: Vec<Plant>,
    #[serde(default)]
    pub storages: Vec<Storage>,
    #[serde(default)]
    pub interconnectors: Vec<Interconnector>,
    #[serde(default)]
    pub capacity_map: Vec<CapacityEntry>,
    #[serde(default)]
    pub wind_curve: WindCurve,
    #[serde(default = "default_performance_ratio")]
    pub performance_ratio: f64,
}

fn default_voll() -> f64 {
    DEFAULT_VOLL
}

fn default_block_hours() -> usize {
    DEFAULT_BLOCK_HOURS
}

fn default_performance_ratio() -> f64 {
    0.85
}

impl GridConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// Weather series ids the grid reads.
    pub fn required_series(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .zones
            .iter()
            .filter_map(|z| z.temperature_series.clone())
            .chain(self.capacity_map.iter().map(|c| c.location.clone()))
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Builds hourly demand and RES availability from weather columns
    /// addressed by series id.
    pub fn build_problem(&self, ids: &[String], columns: &[Vec<f64>]) -> Result<DispatchProblem> {
        let hours = columns.first().map_or(0, |c| c.len());
        let series = |id: &str| -> Result<&[f64]> {
            ids.iter()
                .position(|s| s == id)
                .map(|p| columns[p].as_slice())
                .ok_or_else(|| Error::MissingSeries(id.to_string()))
        };
        if !(self.performance_ratio > 0.0 && self.performance_ratio <= 1.0) {
            return Err(Error::InvalidProblem("performance_ratio must lie in (0, 1]".into()));
        }
        let mut zones = Vec::with_capacity(self.zones.len());
        for z in &self.zones {
            if let LoadSpec::Hourly(v) = &z.base_load {
                if v.is_empty() {
                    return Err(Error::InvalidProblem(format!(
                        "zone \"{}\" has an empty base load",
                        z.id
                    )));
                }
            }
            let temps = match (&z.heating, &z.temperature_series) {
                (Some(h), Some(id)) => Some((h, series(id)?)),
                (Some(_), None) => {
                    return Err(Error::InvalidProblem(format!(
                        "zone \"{}\" has heating parameters but no temperature series",
                        z.id
                    )))
                }
                _ => None,
            };
            let demand = (0..hours)
                .map(|t| match temps {
                    Some((h, temp)) => temperature_to_load(temp[t], z.base_load.at(t), h),
                    None => z.base_load.at(t),
                })
                .collect();
            zones.push(Zone {
                id: z.id.clone(),
                demand,
                res_availability: vec![0.0; hours],
            });
        }
        for c in &self.capacity_map {
            let zi = zones
                .iter()
                .position(|z| z.id == c.zone)
                .ok_or_else(|| Error::UnknownZone {
                    entity: format!("capacity entry {}", c.location),
                    zone: c.zone.clone(),
                })?;
            if !(c.capacity.is_finite() && c.capacity >= 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "capacity entry {} is invalid",
                    c.location
                )));
            }
            let weather = series(&c.location)?;
            for (avail, &w) in zones[zi].res_availability.iter_mut().zip(weather) {
                *avail += match c.technology {
                    Technology::Wind => wind_to_power(w, c.capacity, &self.wind_curve),
                    Technology::Solar => solar_to_power(w, c.capacity, self.performance_ratio),
                };
            }
        }
        let problem = DispatchProblem {
            zones,
            plants: self.plants.clone(),
            storages: self.storages.clone(),
            interconnectors: self.interconnectors.clone(),
            voll: self.voll,
            block_hours: self.block_hours,
        };
        problem.validate()?;
        Ok(problem)
    }
}

/// Reads a weather CSV (`timestamp` then one column per series id).
pub fn read_weather_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut columns = vec![Vec::new(); ids.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (p, column) in columns.iter_mut().enumerate() {
            let cell = record.get(p + 1).unwrap_or("");
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::InvalidProblem(format!(
                    "{}: row {} column \"{}\" is not numeric: \"{cell}\"",
                    path.display(),
                    row + 1,
                    ids[p]
                ))
            })?;
            column.push(v);
        }
    }
    Ok((ids, columns))
}
