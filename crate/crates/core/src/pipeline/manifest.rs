use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Normalization;
use crate::error::{invalid, Result};
use crate::mesh::GridSpec;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIds {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl SplitIds {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> impl Iterator<Item = &String> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }
}

/// One generated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub id: String,
    pub alpha: f64,
    pub index: usize,
    pub seed: u64,
}

/// Index of a generated dataset, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub manifest_version: u32,
    /// Version of the binary sample files.
    pub format_version: u32,
    pub master_seed: u64,
    pub alphas: Vec<f64>,
    pub n_per_alpha: usize,
    pub grid: GridSpec,
    pub frequencies: Vec<f64>,
    pub rho_bounds: [f64; 2],
    pub normalization: Normalization,
    pub fractions: [f64; 3],
    pub samples: Vec<SampleEntry>,
    /// Ids whose generation failed and were left out.
    pub failed: Vec<String>,
    pub splits: SplitIds,
}

impl DatasetManifest {
    /// Checks that the splits are disjoint and cover exactly the samples.
    pub fn validate(&self) -> Result<()> {
        let ids: BTreeSet<&String> = self.samples.iter().map(|s| &s.id).collect();
        if ids.len() != self.samples.len() {
            return Err(invalid("duplicate sample ids in manifest"));
        }
        let mut seen = BTreeSet::new();
        for id in self.splits.all() {
            if !seen.insert(id) {
                return Err(invalid(format!(
                    "sample {id} appears in more than one split"
                )));
            }
            if !ids.contains(id) {
                return Err(invalid(format!("split references unknown sample {id}")));
            }
        }
        if seen.len() != ids.len() {
            return Err(invalid("splits do not cover every sample"));
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed derived from the master seed, alpha and index, so that
/// every sample can be regenerated on its own.
pub fn sample_seed(master_seed: u64, alpha: f64, index: usize) -> u64 {
    splitmix(splitmix(splitmix(master_seed) ^ alpha.to_bits()) ^ index as u64)
}

/// File stem of a sample, e.g. `a6_00012`.
pub fn sample_id(alpha: f64, index: usize) -> String {
    format!("a{alpha}_{index:05}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn seeds_depend_on_every_input() {
        let s = sample_seed(1, 6.0, 0);
        assert_eq!(s, sample_seed(1, 6.0, 0));
        assert_ne!(s, sample_seed(2, 6.0, 0));
        assert_ne!(s, sample_seed(1, 7.0, 0));
        assert_ne!(s, sample_seed(1, 6.0, 1));
        let all: BTreeSet<u64> = (0..1000).map(|i| sample_seed(9, 8.0, i)).collect();
        assert_eq!(all.len(), 1000);
    }

    #[test]
    fn ids_are_readable() {
        assert_eq!(sample_id(6.0, 12), "a6_00012");
        assert_eq!(sample_id(7.5, 3), "a7.5_00003");
    }

    #[test]
    fn validation_catches_overlap() {
        let entry = |id: &str| SampleEntry {
            id: id.into(),
            alpha: 6.0,
            index: 0,
            seed: 0,
        };
        let mut m = DatasetManifest {
            manifest_version: MANIFEST_VERSION,
            format_version: 1,
            master_seed: 0,
            alphas: vec![6.0],
            n_per_alpha: 2,
            grid: GridSpec {
                core: [4; 3],
                spacing_m: [1.0; 3],
                n_pad: 0,
                expansion: 1.0,
                n_air: 0,
            },
            frequencies: vec![1.0],
            rho_bounds: [1.0, 1e4],
            normalization: Normalization {
                rho_max_log10: 1.0,
                phi_max_log10: 1.0,
                model_max_log10: 1.0,
                phase_scaling: Default::default(),
            },
            fractions: [0.5, 0.5, 0.0],
            samples: vec![entry("a"), entry("b")],
            failed: vec![],
            splits: SplitIds {
                train: vec!["a".into()],
                validation: vec!["b".into()],
                test: vec![],
            },
        };
        assert!(m.validate().is_ok());
        m.splits.test.push("a".into());
        assert!(m.validate().is_err());
        m.splits.test = vec!["c".into()];
        assert!(m.validate().is_err());
        m.splits.test.clear();
        m.splits.validation.clear();
        assert!(m.validate().is_err());
    }
}
