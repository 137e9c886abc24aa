//! Batch generation of random models and their responses.

use std::fs;
use std::path::Path;

use mtforge_core::femsolver::{ForwardSolver, SolverOptions};
use mtforge_core::geomodel::{generate_grf, GrfSpec};
use mtforge_core::mesh::GridSpec;
use mtforge_core::pipeline::{
    sample_id, sample_seed, split, DatasetManifest, FrequencySweep, NormalizationAccumulator,
    PhaseScaling, SampleEntry, SampleRecord, DEFAULT_FRACTIONS, FORMAT_VERSION, MANIFEST_VERSION,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::io::{read_sample, write_json, write_sample};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Builds abort once more than this fraction of samples has failed.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub master_seed: u64,
    pub alphas: Vec<f64>,
    pub n_per_alpha: usize,
    pub grid: GridSpec,
    pub frequencies: FrequencySweep,
    /// Resistivity range of the random models in Ωm.
    pub rho_bounds: [f64; 2],
    pub fractions: [f64; 3],
    pub phase_scaling: PhaseScaling,
    pub solver: SolverOptions,
}

impl BuildConfig {
    pub fn new(
        master_seed: u64,
        alphas: Vec<f64>,
        n_per_alpha: usize,
        grid: GridSpec,
        frequencies: FrequencySweep,
    ) -> Self {
        Self {
            master_seed,
            alphas,
            n_per_alpha,
            grid,
            frequencies,
            rho_bounds: [1.0, 1.0e4],
            fractions: DEFAULT_FRACTIONS,
            phase_scaling: PhaseScaling::default(),
            solver: SolverOptions::default(),
        }
    }

    /// Every sample of the dataset in manifest order: by alpha as given, then
    /// by index.
    pub fn entries(&self) -> Vec<SampleEntry> {
        self.alphas
            .iter()
            .flat_map(|&alpha| {
                (0..self.n_per_alpha).map(move |index| SampleEntry {
                    id: sample_id(alpha, index),
                    alpha,
                    index,
                    seed: sample_seed(self.master_seed, alpha, index),
                })
            })
            .collect()
    }

    pub fn grf_spec(&self, entry: &SampleEntry) -> GrfSpec {
        GrfSpec {
            dims: self.grid.core,
            spacing: self.grid.spacing_m,
            alpha: entry.alpha,
            seed: entry.seed,
            rho_min: self.rho_bounds[0],
            rho_max: self.rho_bounds[1],
        }
    }

    /// Model and response of one sample, computed from scratch.
    pub fn generate(&self, entry: &SampleEntry) -> Result<SampleRecord> {
        let model = generate_grf(&self.grf_spec(entry))?;
        let solver = ForwardSolver::with_options(&model, &self.grid, self.solver)?;
        let result = solver.run(self.frequencies.freqs())?;
        Ok(SampleRecord::new(entry.id.clone(), model, result.response)?)
    }

    /// Whether a sample read from disk is the one this config would produce.
    fn matches(&self, entry: &SampleEntry, record: &SampleRecord) -> bool {
        let m = &record.meta;
        let [nx, ny, nz] = self.grid.core;
        m.id == entry.id
            && m.seed == Some(entry.seed)
            && m.alpha == Some(entry.alpha)
            && m.rho_bounds == Some(self.rho_bounds)
            && m.dims == [nx, ny, nz, self.frequencies.len()]
            && m.spacing_m == self.grid.spacing_m
            && m.freqs == self.frequencies.freqs()
            && m.noise_level == 0.0
    }
}

enum Outcome {
    Generated,
    Reused,
    Failed,
}

/// Generates every sample of `config` into `out_dir` and writes the manifest.
///
/// Samples already present and matching the config are kept, so an
/// interrupted build can be resumed. The map over samples runs on the current
/// rayon pool; each sample depends only on its own seed, so files are
/// identical for any number of workers.
pub fn build_dataset(config: &BuildConfig, out_dir: &Path) -> Result<DatasetManifest> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let entries = config.entries();
    let total = entries.len();
    if total == 0 {
        return Err(mtforge_core::Error::InvalidArgument("dataset has no samples".into()).into());
    }

    let outcomes: Vec<Outcome> = entries
        .par_iter()
        .map(|entry| {
            let path = out_dir.join(format!("{}.mts", entry.id));
            if path.exists() {
                match read_sample(&path) {
                    Ok(r) if config.matches(entry, &r) => return Outcome::Reused,
                    Ok(_) => log::info!("{}: stale sample, regenerating", entry.id),
                    Err(e) => log::info!("{}: unreadable ({e}), regenerating", entry.id),
                }
            }
            match config
                .generate(entry)
                .and_then(|r| write_sample(out_dir, &r))
            {
                Ok(_) => {
                    log::info!("{}: generated", entry.id);
                    Outcome::Generated
                }
                Err(e) => {
                    log::warn!("{}: failed: {e}", entry.id);
                    Outcome::Failed
                }
            }
        })
        .collect();

    let failed: Vec<String> = entries
        .iter()
        .zip(&outcomes)
        .filter(|(_, o)| matches!(o, Outcome::Failed))
        .map(|(e, _)| e.id.clone())
        .collect();
    let limit = (MAX_FAILURE_FRACTION * total as f64).floor() as usize;
    if failed.len() > limit {
        return Err(Error::TooManyFailures {
            failed: failed.len(),
            total,
            limit,
        });
    }
    let reused = outcomes
        .iter()
        .filter(|o| matches!(o, Outcome::Reused))
        .count();
    log::info!(
        "{} generated, {reused} reused, {} failed",
        total - reused - failed.len(),
        failed.len()
    );

    // Maxima are order independent; reading back also covers the f32
    // quantization of the stored values.
    let samples: Vec<SampleEntry> = entries
        .into_iter()
        .filter(|e| !failed.contains(&e.id))
        .collect();
    let mut acc = NormalizationAccumulator::new(config.phase_scaling);
    for entry in &samples {
        let record = read_sample(&out_dir.join(format!("{}.mts", entry.id)))?;
        acc.add(&record.model, &record.response);
    }
    let ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
    let manifest = DatasetManifest {
        manifest_version: MANIFEST_VERSION,
        format_version: FORMAT_VERSION,
        master_seed: config.master_seed,
        alphas: config.alphas.clone(),
        n_per_alpha: config.n_per_alpha,
        grid: config.grid,
        frequencies: config.frequencies.freqs().to_vec(),
        rho_bounds: config.rho_bounds,
        normalization: acc.finish()?,
        fractions: config.fractions,
        splits: split(&ids, config.fractions, config.master_seed)?,
        samples,
        failed,
    };
    manifest.validate()?;
    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
