//! Dataset building blocks: frequency sweeps, normalization, noise, splits,
//! manifests and the binary sample format.

mod manifest;
mod sample;

pub use manifest::{
    sample_id, sample_seed, DatasetManifest, SampleEntry, SplitIds, MANIFEST_VERSION,
};
pub use sample::{
    decode_sample, encode_sample, SampleHeader, SampleMeta, SampleRecord, Units, FORMAT_VERSION,
    MAGIC,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::femsolver::{Channel, ResponseVolume};
use crate::geomodel::ResistivityModel;

/// Smallest value taken before a logarithm.
pub const LOG_FLOOR: f64 = 1.0e-6;

/// Strictly increasing list of positive frequencies (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencySweep {
    freqs: Vec<f64>,
}

impl FrequencySweep {
    pub fn new(freqs: Vec<f64>) -> Result<Self> {
        if freqs.is_empty() {
            return Err(invalid("frequency sweep is empty"));
        }
        if let Some(f) = freqs.iter().find(|f| !(**f > 0.0 && f.is_finite())) {
            return Err(invalid(format!("frequency must be positive, got {f}")));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("frequencies must be strictly increasing"));
        }
        Ok(Self { freqs })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

impl TryFrom<Vec<f64>> for FrequencySweep {
    type Error = crate::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<FrequencySweep> for Vec<f64> {
    fn from(s: FrequencySweep) -> Self {
        s.freqs
    }
}

/// Sixteen log-uniform frequencies `10^(-3 + 0.4k)`, 1 mHz to 1 kHz.
pub fn standard_frequencies() -> FrequencySweep {
    FrequencySweep {
        freqs: (0..16)
            .map(|k| libm::pow(10.0, -3.0 + 0.4 * k as f64))
            .collect(),
    }
}

/// `log10(max(v, 1e-6)) / max_log10` for every value.
pub fn normalize(values: &[f64], max_log10: f64) -> Result<Vec<f64>> {
    if !(max_log10 > 0.0 && max_log10.is_finite()) {
        return Err(invalid(format!(
            "normalization maximum must be positive, got {max_log10}"
        )));
    }
    values
        .iter()
        .map(|&v| {
            if v.is_finite() {
                Ok(libm::log10(v.max(LOG_FLOOR)) / max_log10)
            } else {
                Err(invalid(format!("cannot normalize non-finite value {v}")))
            }
        })
        .collect()
}

/// Result of [`denormalize`], counting inputs outside `[0, 1 + 1e-6]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Denormalized {
    pub values: Vec<f64>,
    pub out_of_range: usize,
}

/// Inverse of [`normalize`]: `10^(v·max_log10)`.
pub fn denormalize(values: &[f64], max_log10: f64) -> Result<Denormalized> {
    if !(max_log10 > 0.0 && max_log10.is_finite()) {
        return Err(invalid(format!(
            "normalization maximum must be positive, got {max_log10}"
        )));
    }
    let out_of_range = values
        .iter()
        .filter(|v| !(**v >= 0.0 && **v <= 1.0 + 1e-6))
        .count();
    Ok(Denormalized {
        values: values
            .iter()
            .map(|v| libm::pow(10.0, v * max_log10))
            .collect(),
        out_of_range,
    })
}

/// How phase channels are scaled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseScaling {
    /// Same log10 scheme as resistivity.
    #[default]
    Log10,
    /// `φ / 90°`.
    Linear90,
}

/// Dataset-wide normalization constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// max log10 over both resistivity channels.
    pub rho_max_log10: f64,
    /// max log10 over both phase channels.
    pub phi_max_log10: f64,
    /// max log10 resistivity over all models.
    pub model_max_log10: f64,
    #[serde(default)]
    pub phase_scaling: PhaseScaling,
}

impl Normalization {
    pub fn channel_max_log10(&self, c: Channel) -> f64 {
        if c.is_phase() {
            self.phi_max_log10
        } else {
            self.rho_max_log10
        }
    }

    pub fn normalize_channel(&self, c: Channel, values: &[f64]) -> Result<Vec<f64>> {
        if c.is_phase() && self.phase_scaling == PhaseScaling::Linear90 {
            return Ok(values.iter().map(|v| v / 90.0).collect());
        }
        normalize(values, self.channel_max_log10(c))
    }

    pub fn denormalize_channel(&self, c: Channel, values: &[f64]) -> Result<Denormalized> {
        if c.is_phase() && self.phase_scaling == PhaseScaling::Linear90 {
            let out_of_range = values
                .iter()
                .filter(|v| !(**v >= 0.0 && **v <= 1.0 + 1e-6))
                .count();
            return Ok(Denormalized {
                values: values.iter().map(|v| v * 90.0).collect(),
                out_of_range,
            });
        }
        denormalize(values, self.channel_max_log10(c))
    }

    pub fn normalize_response(&self, r: &ResponseVolume) -> Result<ResponseVolume> {
        let mut out = r.clone();
        for c in Channel::ALL {
            *out.channel_mut(c) = self.normalize_channel(c, r.channel(c))?;
        }
        Ok(out)
    }

    /// Model values (already log10 Ωm) divided by the model maximum.
    pub fn normalize_model(&self, m: &ResistivityModel) -> Result<Vec<f64>> {
        if !(self.model_max_log10 > 0.0) {
            return Err(invalid("model normalization maximum must be positive"));
        }
        Ok(m.log10_rho
            .iter()
            .map(|v| v.max(libm::log10(LOG_FLOOR)) / self.model_max_log10)
            .collect())
    }
}

/// Running maxima for [`Normalization`] over a dataset.
#[derive(Debug, Clone, Copy)]
pub struct NormalizationAccumulator {
    rho: f64,
    phi: f64,
    model: f64,
    phase_scaling: PhaseScaling,
}

impl NormalizationAccumulator {
    pub fn new(phase_scaling: PhaseScaling) -> Self {
        Self {
            rho: f64::NEG_INFINITY,
            phi: f64::NEG_INFINITY,
            model: f64::NEG_INFINITY,
            phase_scaling,
        }
    }

    pub fn add(&mut self, model: &ResistivityModel, response: &ResponseVolume) {
        let lg = |v: f64| libm::log10(v.max(LOG_FLOOR));
        for c in Channel::ALL {
            let m = response
                .channel(c)
                .iter()
                .fold(f64::NEG_INFINITY, |a, &v| a.max(lg(v)));
            if c.is_phase() {
                self.phi = self.phi.max(m);
            } else {
                self.rho = self.rho.max(m);
            }
        }
        self.model = model.log10_rho.iter().fold(self.model, |a, &v| a.max(v));
    }

    pub fn finish(self) -> Result<Normalization> {
        let n = Normalization {
            rho_max_log10: self.rho,
            phi_max_log10: self.phi,
            model_max_log10: self.model,
            phase_scaling: self.phase_scaling,
        };
        if !(n.rho_max_log10 > 0.0 && n.phi_max_log10 > 0.0 && n.model_max_log10 > 0.0) {
            return Err(invalid(format!(
                "dataset maxima must be positive, got {n:?}"
            )));
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Relative standard deviation, e.g. 0.05 for 5 %.
    pub level: f64,
    pub seed: u64,
}

/// Multiplicative Gaussian noise `d·(1 + level·g)` on every value, channel by
/// channel in file order. Resistivities stay positive and phases stay inside
/// (0°, 90°).
pub fn add_noise(response: &ResponseVolume, spec: &NoiseSpec) -> Result<ResponseVolume> {
    if !(spec.level >= 0.0 && spec.level < 1.0) {
        return Err(invalid(format!(
            "noise level must be in [0, 1), got {}",
            spec.level
        )));
    }
    let mut out = response.clone();
    if spec.level == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for c in Channel::ALL {
        for v in out.channel_mut(c).iter_mut() {
            let g: f64 = StandardNormal.sample(&mut rng);
            let noisy = *v * (1.0 + spec.level * g);
            *v = if c.is_phase() {
                noisy.clamp(LOG_FLOOR, 90.0 - LOG_FLOOR)
            } else {
                noisy.max(LOG_FLOOR)
            };
        }
    }
    Ok(out)
}

/// Default train / validation / test fractions.
pub const DEFAULT_FRACTIONS: [f64; 3] = [0.85, 0.10, 0.05];

/// Shuffles `ids` with `seed` and cuts it into train / validation / test
/// parts whose sizes follow `fractions` by the largest-remainder rule.
pub fn split(ids: &[String], fractions: [f64; 3], seed: u64) -> Result<SplitIds> {
    if ids.is_empty() {
        return Err(invalid("cannot split an empty id list"));
    }
    if fractions.iter().any(|f| !(*f >= 0.0)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(invalid(format!(
            "fractions must be non-negative and sum to 1, got {fractions:?}"
        )));
    }
    let counts = largest_remainder(ids.len(), fractions);
    let mut shuffled: Vec<String> = ids.to_vec();
    shuffled.sort();
    shuffled.dedup();
    if shuffled.len() != ids.len() {
        return Err(invalid("sample ids must be unique"));
    }
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = shuffled.split_off(counts[0] + counts[1]);
    let validation = shuffled.split_off(counts[0]);
    Ok(SplitIds {
        train: shuffled,
        validation,
        test,
    })
}

fn largest_remainder(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let exact = fractions.map(|f| f * n as f64);
    let mut counts = exact.map(|e| libm::floor(e + 1e-9) as usize);
    let mut left = n - counts.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    // Larger remainder first; ties go to the earlier part.
    order.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a] as f64;
        let rb = exact[b] - counts[b] as f64;
        rb.partial_cmp(&ra)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn standard_sweep_matches_closed_form() {
        let s = standard_frequencies();
        assert_eq!(s.len(), 16);
        assert!((s.freqs()[0] - 1e-3).abs() < 1e-18);
        assert!((s.freqs()[10] - 10.0).abs() < 1e-12);
        assert!((s.freqs()[15] - 1000.0).abs() < 1e-9);
        let r = libm::pow(10.0, 0.4);
        for w in s.freqs().windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_validation() {
        assert!(FrequencySweep::new(vec![]).is_err());
        assert!(FrequencySweep::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencySweep::new(vec![-1.0]).is_err());
        assert!(FrequencySweep::new(vec![0.1, 2.0]).is_ok());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[1e4], 4.0).unwrap(), [1.0]);
        assert_eq!(normalize(&[10.0], 4.0).unwrap(), [0.25]);
        assert_eq!(normalize(&[0.0], 6.0).unwrap(), [-1.0]);
        assert!(normalize(&[f64::NAN], 4.0).is_err());
        assert!(normalize(&[1.0], 0.0).is_err());
        let d = denormalize(&[1.0, 0.0, 0.5, 1.5], 4.0).unwrap();
        assert!((d.values[0] - 1e4).abs() < 1e-9);
        assert_eq!(d.values[1], 1.0);
        assert!((d.values[2] - 100.0).abs() < 1e-10);
        assert_eq!(d.out_of_range, 1);
    }

    #[test]
    fn linear_phase_scaling() {
        let n = Normalization {
            rho_max_log10: 4.0,
            phi_max_log10: 2.0,
            model_max_log10: 4.0,
            phase_scaling: PhaseScaling::Linear90,
        };
        assert_eq!(n.normalize_channel(Channel::PhiXy, &[45.0]).unwrap(), [0.5]);
        assert_eq!(
            n.normalize_channel(Channel::RhoXy, &[100.0]).unwrap(),
            [0.5]
        );
        assert_eq!(
            n.denormalize_channel(Channel::PhiYx, &[0.5])
                .unwrap()
                .values,
            [45.0]
        );
    }

    #[test]
    fn split_counts() {
        let ids = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let s = split(&ids(20), DEFAULT_FRACTIONS, 1).unwrap();
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (17, 2, 1)
        );
        let s = split(&ids(10000), DEFAULT_FRACTIONS, 1).unwrap();
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (8500, 1000, 500)
        );
        assert_eq!(largest_remainder(7, [0.5, 0.25, 0.25]), [3, 2, 2]);
        assert!(split(&[], DEFAULT_FRACTIONS, 1).is_err());
        assert!(split(&ids(3), [0.5, 0.5, 0.5], 1).is_err());
        assert!(split(&["a".into(), "a".into()], DEFAULT_FRACTIONS, 1).is_err());
    }

    #[test]
    fn noise_level_zero_is_identity() {
        let mut r = ResponseVolume::zeros([2, 2, 2], vec![1.0, 2.0]);
        r.rho_xy.fill(100.0);
        r.phi_xy.fill(120.0);
        let out = add_noise(
            &r,
            &NoiseSpec {
                level: 0.0,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(out, r);
        assert!(add_noise(
            &r,
            &NoiseSpec {
                level: 1.0,
                seed: 3
            }
        )
        .is_err());
    }
}
