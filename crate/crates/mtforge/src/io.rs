//! Files on disk: samples with their JSON sidecars, exported models, grid
//! and frequency descriptions.
//!
//! Every writer goes through [`write_atomic`], so a reader never observes a
//! half-written file and an interrupted dataset build leaves either the old
//! file or nothing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mtforge_core::geomodel::{Provenance, ResistivityModel};
use mtforge_core::mesh::GridSpec;
use mtforge_core::pipeline::{
    decode_sample, encode_sample, standard_frequencies, FrequencySweep, SampleMeta, SampleRecord,
};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, json_err, Error, Result};

/// Name accepted in place of a frequency file.
pub const STANDARD_SWEEP: &str = "standard16";

/// Writes `bytes` to a temporary file next to `path`, syncs it and renames it
/// over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        message: "not a file path".into(),
    })?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        fs::rename(&tmp, path).map_err(io_err(path))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

/// The sidecar belonging to a binary file: same stem, `.json` extension.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `<dir>/<id>.mts` and its sidecar, returning the binary path.
pub fn write_sample(dir: &Path, record: &SampleRecord) -> Result<PathBuf> {
    let path = dir.join(format!("{}.mts", record.id()));
    write_sample_to(&path, record)?;
    Ok(path)
}

/// Writes a sample to an explicit path. The sidecar is written first so
/// that an existing binary always has matching metadata.
pub fn write_sample_to(path: &Path, record: &SampleRecord) -> Result<()> {
    write_json(&sidecar_path(path), &record.meta)?;
    write_atomic(path, &encode_sample(record))
}

pub fn read_sample(path: &Path) -> Result<SampleRecord> {
    let meta: SampleMeta = read_json(&sidecar_path(path))?;
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(decode_sample(&bytes, meta)?)
}

/// All `*.mts` files in `dir`, sorted by name.
pub fn list_samples(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "mts") && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Sidecar of an exported model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub dims: [usize; 3],
    pub spacing_m: [f64; 3],
    pub rho_bounds: Option<[f64; 2]>,
    /// Unit of the stored values.
    #[serde(default = "default_model_units")]
    pub units: String,
}

fn default_model_units() -> String {
    "log10_ohm_m".into()
}

/// Writes the model as little-endian f32 log10 resistivities (x fastest,
/// then y, then z) plus a JSON sidecar.
pub fn write_model(path: &Path, model: &ResistivityModel) -> Result<()> {
    let meta = ModelMeta {
        seed: model.provenance.map(|p| p.seed),
        alpha: model.provenance.map(|p| p.alpha),
        dims: model.dims,
        spacing_m: model.spacing,
        rho_bounds: model.provenance.map(|p| p.rho_bounds),
        units: default_model_units(),
    };
    let mut bytes = Vec::with_capacity(4 * model.len());
    for &v in &model.log10_rho {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    write_json(&sidecar_path(path), &meta)?;
    write_atomic(path, &bytes)
}

pub fn read_model(path: &Path) -> Result<ResistivityModel> {
    let meta: ModelMeta = read_json(&sidecar_path(path))?;
    if meta.units != default_model_units() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("unsupported model units {:?}", meta.units),
        });
    }
    let bytes = fs::read(path).map_err(io_err(path))?;
    let n: usize = meta.dims.iter().product();
    if bytes.len() != 4 * n {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!(
                "expected {} bytes for dims {:?}, found {}",
                4 * n,
                meta.dims,
                bytes.len()
            ),
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let mut model = ResistivityModel::new(meta.dims, meta.spacing_m, values)?;
    if let (Some(seed), Some(alpha), Some(rho_bounds)) = (meta.seed, meta.alpha, meta.rho_bounds) {
        model.provenance = Some(Provenance {
            seed,
            alpha,
            rho_bounds,
        });
    }
    Ok(model)
}

pub fn read_grid(path: &Path) -> Result<GridSpec> {
    read_json(path)
}

/// Resolves a `--freqs` argument: the name `standard16`, or a file holding
/// frequencies in Hz as a JSON array or as whitespace/comma separated
/// numbers with `#` comments.
pub fn read_frequencies(arg: &str) -> Result<FrequencySweep> {
    if arg == STANDARD_SWEEP {
        return Ok(standard_frequencies());
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let freqs = parse_frequencies(&text).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })?;
    Ok(FrequencySweep::new(freqs)?)
}

fn parse_frequencies(text: &str) -> std::result::Result<Vec<f64>, String> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| e.to_string());
    }
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            out.push(
                tok.parse::<f64>()
                    .map_err(|e| format!("bad frequency {tok:?}: {e}"))?,
            );
        }
    }
    Ok(out)
}
