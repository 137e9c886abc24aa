//! Plane-wave response of horizontally layered media.
//!
//! Time dependence is `e^{+iωt}` and z points down, so a wave decaying with
//! depth is `e^{-kz}` with `k = sqrt(iωμσ)` (principal root) and the surface
//! impedance `Z = Ex/Hy` lies in the first quadrant.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Vacuum permeability (H/m).
pub const MU0: f64 = 4.0e-7 * PI;

/// Conductivity used for air wherever a number is needed (S/m).
pub const AIR_CONDUCTIVITY: f64 = 1.0e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredModel {
    /// Thicknesses of all layers but the terminal half-space (m).
    pub thicknesses: Vec<f64>,
    /// Layer resistivities from the top (Ωm).
    pub resistivities: Vec<f64>,
}

impl LayeredModel {
    pub fn new(thicknesses: Vec<f64>, resistivities: Vec<f64>) -> Result<Self> {
        let model = Self {
            thicknesses,
            resistivities,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn half_space(rho: f64) -> Self {
        Self {
            thicknesses: Vec::new(),
            resistivities: alloc::vec![rho],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resistivities.is_empty() {
            return Err(invalid("layered model needs at least one layer"));
        }
        if self.thicknesses.len() + 1 != self.resistivities.len() {
            return Err(invalid(format!(
                "{} resistivities need {} thicknesses, got {}",
                self.resistivities.len(),
                self.resistivities.len() - 1,
                self.thicknesses.len()
            )));
        }
        if let Some(r) = self
            .resistivities
            .iter()
            .find(|r| !(**r > 0.0 && r.is_finite()))
        {
            return Err(invalid(format!("resistivity must be positive, got {r}")));
        }
        if let Some(h) = self
            .thicknesses
            .iter()
            .find(|h| !(**h > 0.0 && h.is_finite()))
        {
            return Err(invalid(format!(
                "layer thickness must be positive, got {h}"
            )));
        }
        Ok(())
    }

    /// Builds a model from per-layer conductivities (S/m).
    pub fn from_conductivities(thicknesses: Vec<f64>, sigma: &[f64]) -> Result<Self> {
        Self::new(thicknesses, sigma.iter().map(|s| 1.0 / s).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveResponse {
    /// Surface impedance Ex/Hy (Ω).
    pub z: Complex64,
    pub frequency: f64,
}

impl PlaneWaveResponse {
    pub fn apparent_resistivity(&self) -> f64 {
        self.z.norm_sqr() / (MU0 * omega(self.frequency))
    }

    pub fn phase_deg(&self) -> f64 {
        self.z.arg().to_degrees()
    }
}

pub fn omega(freq: f64) -> f64 {
    2.0 * PI * freq
}

/// Plane-wave skin depth `sqrt(2/(ωμσ))` in meters.
pub fn skin_depth(rho: f64, freq: f64) -> f64 {
    libm::sqrt(2.0 * rho / (omega(freq) * MU0))
}

fn wavenumber(sigma: f64, w: f64) -> Complex64 {
    Complex64::new(0.0, w * MU0 * sigma).sqrt()
}

/// `tanh` that stays finite for large arguments with positive real part.
fn tanh_stable(x: Complex64) -> Complex64 {
    let e = (-2.0 * x).exp();
    (1.0 - e) / (1.0 + e)
}

fn check_freq(freq: f64) -> Result<()> {
    if !(freq > 0.0 && freq.is_finite()) {
        return Err(invalid(format!("frequency must be positive, got {freq}")));
    }
    Ok(())
}

/// Impedances at the top of every layer, deepest last.
fn layer_top_impedances(
    model: &LayeredModel,
    w: f64,
) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let n = model.resistivities.len();
    let k: Vec<Complex64> = model
        .resistivities
        .iter()
        .map(|r| wavenumber(1.0 / r, w))
        .collect();
    let intrinsic: Vec<Complex64> = k
        .iter()
        .map(|kn| Complex64::new(0.0, w * MU0) / kn)
        .collect();
    let mut tops = alloc::vec![Complex64::new(0.0, 0.0); n];
    tops[n - 1] = intrinsic[n - 1];
    for layer in (0..n - 1).rev() {
        let zn = intrinsic[layer];
        let below = tops[layer + 1];
        let t = tanh_stable(k[layer] * model.thicknesses[layer]);
        tops[layer] = zn * (below + zn * t) / (zn + below * t);
    }
    (tops, k, intrinsic)
}

/// Surface impedance by upward impedance recursion from the basal half-space.
pub fn impedance_recursion(model: &LayeredModel, freq: f64) -> Result<PlaneWaveResponse> {
    check_freq(freq)?;
    model.validate()?;
    let (tops, _, _) = layer_top_impedances(model, omega(freq));
    Ok(PlaneWaveResponse {
        z: tops[0],
        frequency: freq,
    })
}

/// Tangential fields at one depth, normalized so that E = 1 at z = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub e: Complex64,
    pub h: Complex64,
}

/// Evaluates the plane-wave E/H pair at arbitrary depths below and heights
/// above the surface of a layered earth.
#[derive(Debug, Clone)]
pub struct FieldProfile {
    w: f64,
    k: Vec<Complex64>,
    intrinsic: Vec<Complex64>,
    tops: Vec<f64>,
    thicknesses: Vec<f64>,
    /// Down-going amplitude at each layer top and up-going amplitude at each
    /// layer bottom.
    down: Vec<Complex64>,
    up_bottom: Vec<Complex64>,
    surface_h: Complex64,
    k_air: Complex64,
    z_air: Complex64,
}

impl FieldProfile {
    pub fn new(model: &LayeredModel, freq: f64) -> Result<Self> {
        check_freq(freq)?;
        model.validate()?;
        let w = omega(freq);
        let (imp, k, intrinsic) = layer_top_impedances(model, w);
        let n = model.resistivities.len();
        let mut tops = Vec::with_capacity(n);
        let mut depth = 0.0;
        tops.push(0.0);
        for h in &model.thicknesses {
            depth += h;
            tops.push(depth);
        }

        let mut down = Vec::with_capacity(n);
        let mut up_bottom = Vec::with_capacity(n);
        let mut e = Complex64::new(1.0, 0.0);
        let mut h = e / imp[0];
        for layer in 0..n {
            let zn = intrinsic[layer];
            let a = (e + zn * h) / 2.0;
            down.push(a);
            if layer + 1 < n {
                let d = a * (-k[layer] * model.thicknesses[layer]).exp();
                let below = imp[layer + 1];
                let u = d * (below - zn) / (below + zn);
                up_bottom.push(u);
                e = d + u;
                h = (d - u) / zn;
            } else {
                up_bottom.push(Complex64::new(0.0, 0.0));
            }
        }
        let k_air = wavenumber(AIR_CONDUCTIVITY, w);
        Ok(Self {
            w,
            k,
            intrinsic,
            tops,
            thicknesses: model.thicknesses.clone(),
            down,
            up_bottom,
            surface_h: Complex64::new(1.0, 0.0) / imp[0],
            k_air,
            z_air: Complex64::new(0.0, w * MU0) / k_air,
        })
    }

    pub fn angular_frequency(&self) -> f64 {
        self.w
    }

    /// Fields at depth `z` (negative in air).
    pub fn at(&self, z: f64) -> FieldSample {
        if z < 0.0 {
            let (c, s) = ((self.k_air * z).cosh(), (self.k_air * z).sinh());
            let e = c - self.z_air * self.surface_h * s;
            let h = self.surface_h * c - s / self.z_air;
            return FieldSample { e, h };
        }
        let layer = self.tops.iter().rposition(|&t| t <= z).unwrap_or(0);
        let dz = z - self.tops[layer];
        let k = self.k[layer];
        let down = self.down[layer] * (-k * dz).exp();
        let up = if layer < self.thicknesses.len() {
            self.up_bottom[layer] * (-k * (self.thicknesses[layer] - dz)).exp()
        } else {
            Complex64::new(0.0, 0.0)
        };
        FieldSample {
            e: down + up,
            h: (down - up) / self.intrinsic[layer],
        }
    }
}

/// Fields at each node depth, which must lie inside `domain = [top, bottom]`.
pub fn boundary_field_profile(
    model: &LayeredModel,
    freq: f64,
    z_nodes: &[f64],
    domain: [f64; 2],
) -> Result<Vec<FieldSample>> {
    let profile = FieldProfile::new(model, freq)?;
    z_nodes
        .iter()
        .map(|&z| {
            if !(z >= domain[0] && z <= domain[1]) {
                return Err(invalid(format!(
                    "node depth {z} outside domain [{}, {}]",
                    domain[0], domain[1]
                )));
            }
            Ok(profile.at(z))
        })
        .collect()
}
