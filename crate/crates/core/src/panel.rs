//! Hourly multi-series weather panels and their per-year tensor view.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, TimeZone, Timelike, Utc};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, HOURS_PER_YEAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Temperature,
    WindSpeed,
    SolarRadiation,
    Other,
}

impl Parameter {
    pub fn as_str(self) -> &'static str {
        match self {
            Parameter::Temperature => "temperature",
            Parameter::WindSpeed => "wind_speed",
            Parameter::SolarRadiation => "solar_radiation",
            Parameter::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub id: String,
    pub parameter: Parameter,
    pub latitude: f64,
    pub longitude: f64,
    pub unit: String,
}

impl SeriesMeta {
    pub fn new(
        id: impl Into<String>,
        parameter: Parameter,
        latitude: f64,
        longitude: f64,
        unit: impl Into<String>,
    ) -> Self {
        SeriesMeta {
            id: id.into(),
            parameter,
            latitude,
            longitude,
            unit: unit.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Error::InvalidMetadata {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.id.is_empty() {
            return Err(bad("empty id"));
        }
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(bad("latitude outside [-90, 90]"));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(bad("longitude outside [-180, 180]"));
        }
        Ok(())
    }

    pub fn is_solar(&self) -> bool {
        self.parameter == Parameter::SolarRadiation
    }
}

/// Hourly values, one column per series.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherPanel {
    timestamps: Vec<DateTime<Utc>>,
    columns: Vec<Vec<f64>>,
    meta: Vec<SeriesMeta>,
}

impl WeatherPanel {
    /// Builds a panel, checking hourly spacing, shapes, ids and finiteness.
    pub fn new(timestamps: Vec<DateTime<Utc>>, columns: Vec<Vec<f64>>, meta: Vec<SeriesMeta>) -> Result<Self> {
        if columns.len() != meta.len() {
            return Err(Error::Panel(format!(
                "{} columns but {} metadata entries",
                columns.len(),
                meta.len()
            )));
        }
        let mut seen = HashSet::new();
        for m in &meta {
            m.validate()?;
            if !seen.insert(m.id.as_str()) {
                return Err(Error::DuplicateSeries(m.id.clone()));
            }
        }
        check_hourly(&timestamps)?;
        for (col, m) in columns.iter().zip(&meta) {
            if col.len() != timestamps.len() {
                return Err(Error::Panel(format!(
                    "column \"{}\" has {} rows, expected {}",
                    m.id,
                    col.len(),
                    timestamps.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Panel(format!(
                    "missing or non-finite value at row {row}, column \"{}\"",
                    m.id
                )));
            }
        }
        Ok(WeatherPanel {
            timestamps,
            columns,
            meta,
        })
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn meta(&self) -> &[SeriesMeta] {
        &self.meta
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, p: usize) -> &[f64] {
        &self.columns[p]
    }

    pub fn value(&self, t: usize, p: usize) -> f64 {
        self.columns[p][t]
    }

    /// `t_max`
    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    /// `p_max`
    pub fn n_series(&self) -> usize {
        self.columns.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.meta.iter().position(|m| m.id == id)
    }

    /// Replaces the values of every column while keeping timestamps and metadata.
    pub fn with_columns(&self, columns: Vec<Vec<f64>>) -> Result<Self> {
        WeatherPanel::new(self.timestamps.clone(), columns, self.meta.clone())
    }

    /// Sub-panel with the given series, in the given order.
    pub fn select(&self, ids: &[impl AsRef<str>]) -> Result<Self> {
        let mut columns = Vec::with_capacity(ids.len());
        let mut meta = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            let p = self
                .index_of(id)
                .ok_or_else(|| Error::MissingMetadata(id.to_string()))?;
            columns.push(self.columns[p].clone());
            meta.push(self.meta[p].clone());
        }
        WeatherPanel::new(self.timestamps.clone(), columns, meta)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_panel_csv(path, &self.timestamps, &self.meta, &self.columns)
    }
}

fn check_hourly(timestamps: &[DateTime<Utc>]) -> Result<()> {
    for (row, pair) in timestamps.windows(2).enumerate() {
        let (prev, cur) = (pair[0], pair[1]);
        if cur <= prev {
            return Err(Error::NonMonotonicTimestamps { row: row + 1 });
        }
        let expected = prev + Duration::hours(1);
        if cur != expected {
            return Err(Error::GappedTimestamps {
                row: row + 1,
                expected: format_timestamp(expected),
                found: format_timestamp(cur),
            });
        }
    }
    if let Some(t) = timestamps.iter().find(|t| t.minute() != 0 || t.second() != 0) {
        return Err(Error::Panel(format!(
            "timestamp {} is not on the hour",
            format_timestamp(*t)
        )));
    }
    Ok(())
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s.trim())
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

pub fn read_meta(meta_path: &Path) -> Result<Vec<SeriesMeta>> {
    let file = File::open(meta_path).map_err(|e| Error::io(meta_path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::json(meta_path, e))
}

pub fn write_meta(meta_path: &Path, meta: &[SeriesMeta]) -> Result<()> {
    let file = File::create(meta_path).map_err(|e| Error::io(meta_path, e))?;
    serde_json::to_writer_pretty(file, meta).map_err(|e| Error::json(meta_path, e))
}

/// Reads a panel CSV (`timestamp` column then one column per series id) and
/// its JSON metadata array.
pub fn load_panel(data_path: &Path, meta_path: &Path) -> Result<WeatherPanel> {
    let meta_all = read_meta(meta_path)?;
    let mut by_id: HashMap<&str, &SeriesMeta> = HashMap::new();
    for m in &meta_all {
        if by_id.insert(m.id.as_str(), m).is_some() {
            return Err(Error::DuplicateSeries(m.id.clone()));
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(data_path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(data_path, io),
                _ => unreachable!(),
            },
            _ => Error::Csv(e),
        })?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("timestamp") {
        return Err(Error::Panel("first column must be \"timestamp\"".into()));
    }
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut meta = Vec::with_capacity(ids.len());
    for id in &ids {
        let m = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::MissingMetadata(id.clone()))?;
        meta.push((*m).clone());
    }
    if meta_all.len() > ids.len() {
        warn!(
            "{} metadata entries have no column in {}",
            meta_all.len() - ids.len(),
            data_path.display()
        );
    }

    let mut timestamps = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let ts_raw = record.get(0).unwrap_or_default();
        let ts = parse_timestamp(ts_raw).ok_or_else(|| Error::BadTimestamp {
            row,
            value: ts_raw.to_string(),
        })?;
        if let Some(&prev) = timestamps.last() {
            if ts <= prev {
                return Err(Error::NonMonotonicTimestamps { row });
            }
        }
        timestamps.push(ts);
        if record.len() != ids.len() + 1 {
            return Err(Error::Panel(format!(
                "row {row} has {} fields, expected {}",
                record.len(),
                ids.len() + 1
            )));
        }
        for (p, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                column: ids[p].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    row,
                    column: ids[p].clone(),
                    value: cell.to_string(),
                });
            }
            columns[p].push(v);
        }
    }
    WeatherPanel::new(timestamps, columns, meta)
}

pub fn write_panel_csv(
    path: &Path,
    timestamps: &[DateTime<Utc>],
    meta: &[SeriesMeta],
    columns: &[Vec<f64>],
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Panel(format!("{other:?}")),
    })?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(meta.iter().map(|m| m.id.clone()));
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(columns.len() + 1);
    for (t, ts) in timestamps.iter().enumerate() {
        record.clear();
        record.push(format_timestamp(*ts));
        // `{}` on f64 prints the shortest string that parses back to the same bits.
        record.extend(columns.iter().map(|c| format!("{}", c[t])));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// First month of each model year. Calendar years by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearAnchor {
    pub month: u32,
}

impl Default for YearAnchor {
    fn default() -> Self {
        YearAnchor { month: 1 }
    }
}

impl YearAnchor {
    pub fn start_of(&self, year: i32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(year, self.month, 1, 0, 0, 0).unwrap()
    }
}

pub fn is_leap_day(t: DateTime<Utc>) -> bool {
    t.month() == 2 && t.day() == 29
}

/// Hour-of-year timestamps of one model year starting at `anchor.start_of(year)`,
/// leap day removed.
pub fn year_timestamps(year: i32, anchor: YearAnchor) -> Vec<DateTime<Utc>> {
    let start = anchor.start_of(year);
    let end = anchor.start_of(year + 1);
    let mut out = Vec::with_capacity(HOURS_PER_YEAR);
    let mut t = start;
    while t < end {
        if !is_leap_day(t) {
            out.push(t);
        }
        t += Duration::hours(1);
    }
    out
}

/// Values arranged as hour-of-year × series × year.
#[derive(Debug, Clone, PartialEq)]
pub struct YearTensor {
    // layout: [year][series][hour]
    values: Vec<f64>,
    n_series: usize,
    n_years: usize,
    years: Vec<i32>,
}

impl YearTensor {
    /// `slices[i][p]` is the 8760-hour series `p` of year `i`.
    pub fn from_slices(slices: Vec<Vec<Vec<f64>>>, years: Vec<i32>) -> Result<Self> {
        let n_years = slices.len();
        if n_years < 2 {
            return Err(Error::InsufficientYears { found: n_years });
        }
        if years.len() != n_years {
            return Err(Error::LengthMismatch {
                expected: n_years,
                got: years.len(),
            });
        }
        let n_series = slices[0].len();
        let mut values = Vec::with_capacity(n_years * n_series * HOURS_PER_YEAR);
        for year in slices {
            if year.len() != n_series {
                return Err(Error::LengthMismatch {
                    expected: n_series,
                    got: year.len(),
                });
            }
            for series in year {
                if series.len() != HOURS_PER_YEAR {
                    return Err(Error::LengthMismatch {
                        expected: HOURS_PER_YEAR,
                        got: series.len(),
                    });
                }
                values.extend(series);
            }
        }
        Ok(YearTensor {
            values,
            n_series,
            n_years,
            years,
        })
    }

    /// `τ_max`, always 8760.
    pub fn hours(&self) -> usize {
        HOURS_PER_YEAR
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    pub fn n_years(&self) -> usize {
        self.n_years
    }

    /// Label (starting calendar year) of each slice.
    pub fn years(&self) -> &[i32] {
        &self.years
    }

    fn offset(&self, p: usize, i: usize) -> usize {
        (i * self.n_series + p) * HOURS_PER_YEAR
    }

    pub fn get(&self, tau: usize, p: usize, i: usize) -> f64 {
        self.values[self.offset(p, i) + tau]
    }

    pub fn slice(&self, p: usize, i: usize) -> &[f64] {
        let o = self.offset(p, i);
        &self.values[o..o + HOURS_PER_YEAR]
    }

    pub fn slice_mut(&mut self, p: usize, i: usize) -> &mut [f64] {
        let o = self.offset(p, i);
        &mut self.values[o..o + HOURS_PER_YEAR]
    }

    /// All years of series `p`, concatenated in year order.
    pub fn series_values(&self, p: usize) -> Vec<f64> {
        (0..self.n_years)
            .flat_map(|i| self.slice(p, i).iter().copied())
            .collect()
    }

    /// Overwrites series `p` from a year-concatenated vector.
    pub fn set_series_values(&mut self, p: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.n_years * HOURS_PER_YEAR {
            return Err(Error::LengthMismatch {
                expected: self.n_years * HOURS_PER_YEAR,
                got: values.len(),
            });
        }
        for i in 0..self.n_years {
            self.slice_mut(p, i)
                .copy_from_slice(&values[i * HOURS_PER_YEAR..(i + 1) * HOURS_PER_YEAR]);
        }
        Ok(())
    }
}

/// Cuts a panel into complete calendar years.
pub fn segment_years(panel: &WeatherPanel) -> Result<YearTensor> {
    segment_years_with(panel, YearAnchor::default())
}

pub fn segment_years_with(panel: &WeatherPanel, anchor: YearAnchor) -> Result<YearTensor> {
    let ts = panel.timestamps();
    let (Some(&first), Some(&last)) = (ts.first(), ts.last()) else {
        return Err(Error::InsufficientYears { found: 0 });
    };

    let mut slices = Vec::new();
    let mut years = Vec::new();
    let mut covered_from = None;
    let mut covered_to = first;
    for year in (first.year() - 1)..=(last.year() + 1) {
        let start = anchor.start_of(year);
        let end = anchor.start_of(year + 1);
        if start < first || end - Duration::hours(1) > last {
            continue;
        }
        let row0 = (start - first).num_hours() as usize;
        let n = (end - start).num_hours() as usize;
        let keep: Vec<usize> = (0..n).filter(|&h| !is_leap_day(ts[row0 + h])).collect();
        debug_assert_eq!(keep.len(), HOURS_PER_YEAR);
        let slice = panel
            .columns()
            .iter()
            .map(|col| keep.iter().map(|&h| col[row0 + h]).collect())
            .collect();
        slices.push(slice);
        years.push(year);
        covered_from.get_or_insert(start);
        covered_to = end;
    }

    if slices.len() < 2 {
        return Err(Error::InsufficientYears { found: slices.len() });
    }
    if covered_from.is_some_and(|s| s > first) {
        warn!(
            "discarding partial leading year before {}",
            format_timestamp(covered_from.unwrap())
        );
    }
    if covered_to - Duration::hours(1) < last {
        warn!("discarding partial trailing year from {}", format_timestamp(covered_to));
    }
    YearTensor::from_slices(slices, years)
}
