//! Stochastic resistivity models.
//!
//! Models are synthesized as 3D Gaussian random fields whose power spectrum
//! falls off as `|K|^(-alpha/2)`, then mapped in log10 space onto a
//! resistivity range. Regular anomaly blocks can be embedded afterwards.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fft::{fft3, signed_index, Direction};

/// Standardized values beyond this many standard deviations are clipped
/// before the affine map onto the resistivity range.
pub const CLIP_SIGMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfSpec {
    pub dims: [usize; 3],
    /// Cell spacing in meters; sets the physical wavenumbers.
    pub spacing: [f64; 3],
    /// Spectral exponent ("smoothing factor").
    pub alpha: f64,
    pub seed: u64,
    /// Resistivity bounds in Ωm.
    pub rho_min: f64,
    pub rho_max: f64,
}

impl GrfSpec {
    /// 1 Ωm – 10 kΩm range on 1 km cells.
    pub fn new(dims: [usize; 3], alpha: f64, seed: u64) -> Self {
        Self {
            dims,
            spacing: [1000.0; 3],
            alpha,
            seed,
            rho_min: 1.0,
            rho_max: 1.0e4,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&n| n < 4) {
            return Err(invalid(format!(
                "random-field dims must each be >= 4, got {:?}",
                self.dims
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.rho_min > 0.0 && self.rho_min < self.rho_max && self.rho_max.is_finite()) {
            return Err(invalid(format!(
                "need 0 < rho_min < rho_max, got [{}, {}]",
                self.rho_min, self.rho_max
            )));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(invalid("spacing must be positive"));
        }
        Ok(())
    }
}

/// Where a model came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub alpha: f64,
    pub rho_bounds: [f64; 2],
}

/// log10 resistivity on the core cells, x fastest, then y, then z (down).
#[derive(Debug, Clone, PartialEq)]
pub struct ResistivityModel {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub log10_rho: Vec<f64>,
    pub provenance: Option<Provenance>,
}

impl ResistivityModel {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], log10_rho: Vec<f64>) -> Result<Self> {
        if log10_rho.len() != dims[0] * dims[1] * dims[2] {
            return Err(invalid(format!(
                "model has {} values but dims {:?}",
                log10_rho.len(),
                dims
            )));
        }
        if let Some(v) = log10_rho.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite log10 resistivity {v}")));
        }
        Ok(Self {
            dims,
            spacing,
            log10_rho,
            provenance: None,
        })
    }

    pub fn uniform(dims: [usize; 3], spacing: [f64; 3], rho: f64) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        Self {
            dims,
            spacing,
            log10_rho: vec![libm::log10(rho); n],
            provenance: None,
        }
    }

    /// Horizontally uniform model; `layers` are `(thickness_m, rho)` from the
    /// top, the last one filling the rest of the grid.
    pub fn layered(dims: [usize; 3], spacing: [f64; 3], layers: &[(f64, f64)]) -> Self {
        let mut model = Self::uniform(dims, spacing, 1.0);
        let plane = dims[0] * dims[1];
        for k in 0..dims[2] {
            let depth = (k as f64 + 0.5) * spacing[2];
            let mut top = 0.0;
            let mut rho = layers.last().map_or(1.0, |l| l.1);
            for &(h, r) in layers {
                if depth < top + h {
                    rho = r;
                    break;
                }
                top += h;
            }
            model.log10_rho[k * plane..(k + 1) * plane].fill(libm::log10(rho));
        }
        model
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn resistivity(&self, i: usize, j: usize, k: usize) -> f64 {
        libm::pow(10.0, self.log10_rho[self.index(i, j, k)])
    }

    pub fn len(&self) -> usize {
        self.log10_rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log10_rho.is_empty()
    }

    /// Reflects the model across the x axis (i -> nx-1-i).
    pub fn mirrored_x(&self) -> Self {
        let mut out = self.clone();
        let [nx, ny, nz] = self.dims;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    out.log10_rho[self.index(i, j, k)] =
                        self.log10_rho[self.index(nx - 1 - i, j, k)];
                }
            }
        }
        out
    }
}

/// The standardized (zero mean, unit variance) random field before clipping.
pub fn standardized_field(spec: &GrfSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let [nx, ny, nz] = spec.dims;
    let n = nx * ny * nz;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // White real noise has a Hermitian-symmetric spectrum, so filtering by a
    // radially symmetric amplitude keeps the inverse transform real.
    let mut data: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    fft3(&mut data, spec.dims, Direction::Forward);

    let kx = wavenumbers(nx, spec.spacing[0]);
    let ky = wavenumbers(ny, spec.spacing[1]);
    let kz = wavenumbers(nz, spec.spacing[2]);
    let exponent = -spec.alpha / 4.0;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = i + nx * (j + ny * k);
                let mag = libm::sqrt(kx[i] * kx[i] + ky[j] * ky[j] + kz[k] * kz[k]);
                data[idx] *= if mag == 0.0 {
                    0.0
                } else {
                    libm::pow(mag, exponent)
                };
            }
        }
    }
    fft3(&mut data, spec.dims, Direction::Inverse);

    let mut field: Vec<f64> = data.iter().map(|c| c.re).collect();
    let mean = field.iter().sum::<f64>() / n as f64;
    let var = field.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(Error::NumericFailure {
            message: "random field has zero variance".into(),
            residual: var,
        });
    }
    let sd = libm::sqrt(var);
    field.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    Ok(field)
}

fn wavenumbers(n: usize, spacing: f64) -> Vec<f64> {
    let extent = n as f64 * spacing;
    (0..n)
        .map(|k| 2.0 * PI * signed_index(k, n) as f64 / extent)
        .collect()
}

/// Draws a spectrally controlled random model. Deterministic in `spec.seed`.
pub fn generate_grf(spec: &GrfSpec) -> Result<ResistivityModel> {
    let field = standardized_field(spec)?;
    let lo = libm::log10(spec.rho_min);
    let hi = libm::log10(spec.rho_max);
    let log10_rho = field
        .into_iter()
        .map(|s| {
            let t = (s.clamp(-CLIP_SIGMA, CLIP_SIGMA) + CLIP_SIGMA) / (2.0 * CLIP_SIGMA);
            (lo + t * (hi - lo)).clamp(lo, hi)
        })
        .collect();
    Ok(ResistivityModel {
        dims: spec.dims,
        spacing: spec.spacing,
        log10_rho,
        provenance: Some(Provenance {
            seed: spec.seed,
            alpha: spec.alpha,
            rho_bounds: [spec.rho_min, spec.rho_max],
        }),
    })
}

/// A box of cells with one resistivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub origin: [usize; 3],
    pub size: [usize; 3],
    /// Ωm
    pub rho: f64,
}

/// Overwrites the cells covered by `block` with `log10(block.rho)`.
pub fn embed_block(model: &ResistivityModel, block: &BlockSpec) -> Result<ResistivityModel> {
    for a in 0..3 {
        if block.origin[a] + block.size[a] > model.dims[a] {
            return Err(invalid(format!(
                "block {:?}+{:?} exceeds model dims {:?}",
                block.origin, block.size, model.dims
            )));
        }
    }
    if !(block.rho > 0.0 && block.rho.is_finite()) {
        return Err(invalid(format!(
            "block resistivity must be positive, got {}",
            block.rho
        )));
    }
    if let Some(p) = model.provenance {
        if block.rho < p.rho_bounds[0] || block.rho > p.rho_bounds[1] {
            return Err(invalid(format!(
                "block resistivity {} outside model bounds {:?}",
                block.rho, p.rho_bounds
            )));
        }
    }
    let mut out = model.clone();
    let value = libm::log10(block.rho);
    let [oi, oj, ok] = block.origin;
    let [li, lj, lk] = block.size;
    for k in ok..ok + lk {
        for j in oj..oj + lj {
            for i in oi..oi + li {
                let idx = out.index(i, j, k);
                out.log10_rho[idx] = value;
            }
        }
    }
    Ok(out)
}

/// Least-squares slope of log power against log |K| over radial shells
/// between twice the fundamental and half the Nyquist wavenumber.
pub fn radial_spectrum_slope(model: &ResistivityModel) -> Result<f64> {
    let [n, ny, nz] = model.dims;
    if n != ny || n != nz {
        return Err(invalid(format!(
            "spectrum slope needs a cubic model, got {:?}",
            model.dims
        )));
    }
    let lo_shell = 2;
    let hi_shell = n / 4;
    if hi_shell <= lo_shell {
        return Err(invalid(format!(
            "cube of side {n} has fewer than two usable shells"
        )));
    }

    let mean = model.log10_rho.iter().sum::<f64>() / model.len() as f64;
    let mut data: Vec<Complex64> = model
        .log10_rho
        .iter()
        .map(|v| Complex64::new(v - mean, 0.0))
        .collect();
    fft3(&mut data, model.dims, Direction::Forward);

    let mut sums = vec![0.0; hi_shell + 1];
    let mut counts = vec![0usize; hi_shell + 1];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let (a, b, c) = (signed_index(i, n), signed_index(j, n), signed_index(k, n));
                let r = libm::sqrt((a * a + b * b + c * c) as f64);
                let shell = libm::round(r) as usize;
                if (lo_shell..=hi_shell).contains(&shell) {
                    sums[shell] += data[i + n * (j + n * k)].norm_sqr();
                    counts[shell] += 1;
                }
            }
        }
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in lo_shell..=hi_shell {
        let p = sums[s] / counts[s] as f64;
        if !(p > 0.0 && p.is_finite()) {
            return Err(invalid("field has no power in the fitting band"));
        }
        xs.push(libm::log(s as f64));
        ys.push(libm::log(p));
    }
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
