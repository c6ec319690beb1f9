//! Model directory: `manifest.json` plus raw little-endian f64 tensors.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{FitProvenance, SpectralModel};
use crate::normalize::EmpiricalCdf;
use crate::panel::SeriesMeta;
use crate::solar::HourlyMeanProfile;
use crate::{Error, Result, HOURS_PER_YEAR, N_FREQ};

pub const FORMAT_NAME: &str = "spectral-weather-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    file: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesEntry {
    id: String,
    ecdf: TensorEntry,
    solar_profile: Option<TensorEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    format_version: u32,
    model_version: String,
    tau_max: usize,
    n_freq: usize,
    n_series: usize,
    dtype: String,
    byte_order: String,
    series: Vec<SeriesMeta>,
    provenance: FitProvenance,
    mu: TensorEntry,
    sigma: TensorEntry,
    files: Vec<SeriesEntry>,
}

/// File-name safe form of a series id.
fn file_stem(id: &str, p: usize) -> String {
    let clean: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if clean == id {
        clean
    } else {
        format!("{clean}_{p}")
    }
}

fn write_f64(path: &Path, values: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_f64(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 8 {
        return Err(Error::InvalidModel(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            expected * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn save_model(model: &SpectralModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let d = model.dim();
    let mut files = Vec::with_capacity(model.n_series());
    for (p, m) in model.meta().iter().enumerate() {
        let stem = file_stem(&m.id, p);
        let cdf = model.cdf(p);
        let ecdf = TensorEntry {
            file: format!("ecdf_{stem}.bin"),
            shape: vec![cdf.len()],
        };
        write_f64(&dir.join(&ecdf.file), cdf.sorted_values())?;
        let solar_profile = match model.solar_profile(p) {
            Some(profile) => {
                let entry = TensorEntry {
                    file: format!("solar_profile_{stem}.bin"),
                    shape: vec![HOURS_PER_YEAR],
                };
                write_f64(&dir.join(&entry.file), &profile.means)?;
                Some(entry)
            }
            None => None,
        };
        files.push(SeriesEntry {
            id: m.id.clone(),
            ecdf,
            solar_profile,
        });
    }
    let manifest = Manifest {
        format: FORMAT_NAME.into(),
        format_version: FORMAT_VERSION,
        model_version: model.version().to_string(),
        tau_max: HOURS_PER_YEAR,
        n_freq: N_FREQ,
        n_series: model.n_series(),
        dtype: "f64".into(),
        byte_order: "little".into(),
        series: model.meta().to_vec(),
        provenance: model.provenance().clone(),
        mu: TensorEntry {
            file: "mu.bin".into(),
            shape: vec![N_FREQ, d],
        },
        sigma: TensorEntry {
            file: "sigma.bin".into(),
            shape: vec![N_FREQ, d, d],
        },
        files,
    };
    write_f64(&dir.join("mu.bin"), model.mu_all())?;
    write_f64(&dir.join("sigma.bin"), model.sigma_all())?;
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn load_model(dir: &Path) -> Result<SpectralModel> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
    if manifest.format != FORMAT_NAME || manifest.format_version != FORMAT_VERSION {
        return Err(Error::InvalidModel(format!(
            "unsupported model format {} v{}",
            manifest.format, manifest.format_version
        )));
    }
    let p = manifest.series.len();
    let d = 2 * p;
    if manifest.tau_max != HOURS_PER_YEAR
        || manifest.n_freq != N_FREQ
        || manifest.n_series != p
        || manifest.files.len() != p
        || manifest.mu.shape != [N_FREQ, d]
        || manifest.sigma.shape != [N_FREQ, d, d]
    {
        return Err(Error::InvalidModel("manifest dimensions are inconsistent".into()));
    }
    let mu = read_f64(&dir.join(&manifest.mu.file), N_FREQ * d)?;
    let sigma = read_f64(&dir.join(&manifest.sigma.file), N_FREQ * d * d)?;
    let mut cdfs = Vec::with_capacity(p);
    let mut profiles = Vec::with_capacity(p);
    for (entry, m) in manifest.files.iter().zip(&manifest.series) {
        if entry.id != m.id || entry.ecdf.shape.len() != 1 {
            return Err(Error::InvalidModel(format!("file entry mismatch for \"{}\"", m.id)));
        }
        cdfs.push(EmpiricalCdf::from_sorted(read_f64(
            &dir.join(&entry.ecdf.file),
            entry.ecdf.shape[0],
        )?)?);
        profiles.push(match &entry.solar_profile {
            Some(sp) => Some(HourlyMeanProfile::new(
                m.id.clone(),
                read_f64(&dir.join(&sp.file), HOURS_PER_YEAR)?,
            )?),
            None => None,
        });
    }
    let model = SpectralModel::from_parts(manifest.series, mu, sigma, cdfs, profiles, manifest.provenance)?;
    if model.version() != manifest.model_version {
        return Err(Error::InvalidModel(format!(
            "tensor checksum {} does not match manifest version {}",
            model.version(),
            manifest.model_version
        )));
    }
    Ok(model)
}
