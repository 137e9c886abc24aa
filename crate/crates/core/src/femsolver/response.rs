//! Surface fields, impedance tensors and apparent resistivity / phase.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::element::curl_at;
use crate::analytic1d::{omega, MU0};
use crate::error::{invalid, Error, Result};
use crate::mesh::{Axis, EdgeCoord, PaddedGrid};

/// Horizontal E and H at the stations of one polarization and frequency.
/// Stations sit at the centers of the core surface cells, index `ix + nx·iy`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFields {
    pub dims: [usize; 2],
    pub frequency: f64,
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
    pub hx: Vec<Complex64>,
    pub hy: Vec<Complex64>,
}

/// Extracts station fields from a solved edge field.
///
/// E is the mean of the two surface edges of the station cell. H comes from
/// Faraday's law, `H = -curl E / (iωμ0)`, evaluated at the station on the
/// bottom face of the air cell above it, where the field varies smoothly.
/// Without air layers the top face of the first earth cell is used.
pub fn surface_fields(grid: &PaddedGrid, field: &[Complex64], freq: f64) -> Result<SurfaceFields> {
    let edges = grid.edges();
    if field.len() != edges.total_edges() {
        return Err(invalid(format!(
            "edge field has {} values, grid has {} edges",
            field.len(),
            edges.total_edges()
        )));
    }
    let [cx, cy, _] = grid.core.dims();
    let ks = grid.surface_level();
    let (kc, tz) = if ks > 0 { (ks - 1, 1.0) } else { (ks, 0.0) };
    let h = grid.width(Axis::Z, kc);
    let scale = Complex64::new(0.0, -omega(freq) * MU0).inv();
    let x_edge = |i, j| {
        field[edges.index(EdgeCoord {
            axis: Axis::X,
            i,
            j,
            k: ks,
        })]
    };
    let y_edge = |i, j| {
        field[edges.index(EdgeCoord {
            axis: Axis::Y,
            i,
            j,
            k: ks,
        })]
    };

    let n = cx * cy;
    let mut out = SurfaceFields {
        dims: [cx, cy],
        frequency: freq,
        ex: Vec::with_capacity(n),
        ey: Vec::with_capacity(n),
        hx: Vec::with_capacity(n),
        hy: Vec::with_capacity(n),
    };
    for iy in 0..cy {
        for ix in 0..cx {
            let i = ix + grid.core_offset[0];
            let j = iy + grid.core_offset[1];
            out.ex.push((x_edge(i, j) + x_edge(i, j + 1)) * 0.5);
            out.ey.push((y_edge(i, j) + y_edge(i + 1, j)) * 0.5);
            let ids = edges.cell_edges(i, j, kc);
            let coef = ids.map(|e| field[e]);
            let widths = [grid.width(Axis::X, i), grid.width(Axis::Y, j), h];
            let curl = curl_at(&coef, [0.5, 0.5, tz], widths);
            out.hx.push(curl[0] * scale);
            out.hy.push(curl[1] * scale);
        }
    }
    Ok(out)
}

/// Complex impedance tensor per station and frequency, index
/// `ix + nx·(iy + ny·f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceMap {
    pub dims: [usize; 3],
    pub frequencies: Vec<f64>,
    pub zxx: Vec<Complex64>,
    pub zxy: Vec<Complex64>,
    pub zyx: Vec<Complex64>,
    pub zyy: Vec<Complex64>,
}

/// Below this fraction of `|H1|·|H2|` the two polarizations are treated as
/// degenerate at a station.
pub const SINGULAR_STATION_RATIO: f64 = 1.0e-3;

/// Solves `E = Z·H` for the two polarizations at every station, with
/// `ζ = Hy2·Hx1 - Hx2·Hy1` as the determinant.
pub fn impedance_tensor(p1: &SurfaceFields, p2: &SurfaceFields) -> Result<ImpedanceMap> {
    if p1.dims != p2.dims || p1.frequency != p2.frequency {
        return Err(invalid(
            "polarizations cover different stations or frequencies",
        ));
    }
    let [nx, ny] = p1.dims;
    let n = nx * ny;
    let mut z = ImpedanceMap {
        dims: [nx, ny, 1],
        frequencies: alloc::vec![p1.frequency],
        zxx: Vec::with_capacity(n),
        zxy: Vec::with_capacity(n),
        zyx: Vec::with_capacity(n),
        zyy: Vec::with_capacity(n),
    };
    for s in 0..n {
        let (hx1, hy1, hx2, hy2) = (p1.hx[s], p1.hy[s], p2.hx[s], p2.hy[s]);
        let zeta = hy2 * hx1 - hx2 * hy1;
        let norm1 = libm::hypot(hx1.norm(), hy1.norm());
        let norm2 = libm::hypot(hx2.norm(), hy2.norm());
        let threshold = SINGULAR_STATION_RATIO * norm1 * norm2;
        if !(zeta.norm() >= threshold) || zeta.norm() == 0.0 {
            return Err(Error::SingularStation {
                ix: s % nx,
                iy: s / nx,
                zeta: zeta.norm(),
                threshold,
            });
        }
        let (ex1, ey1, ex2, ey2) = (p1.ex[s], p1.ey[s], p2.ex[s], p2.ey[s]);
        z.zxx.push((ex1 * hy2 - ex2 * hy1) / zeta);
        z.zxy.push((ex2 * hx1 - ex1 * hx2) / zeta);
        z.zyx.push((ey1 * hy2 - ey2 * hy1) / zeta);
        z.zyy.push((ey2 * hx1 - ey1 * hx2) / zeta);
    }
    Ok(z)
}

impl ImpedanceMap {
    /// Concatenates per-frequency maps in the given order.
    pub fn stack(parts: &[ImpedanceMap]) -> Result<ImpedanceMap> {
        let first = parts.first().ok_or_else(|| invalid("nothing to stack"))?;
        let [nx, ny, _] = first.dims;
        let mut out = ImpedanceMap {
            dims: [nx, ny, 0],
            frequencies: Vec::new(),
            zxx: Vec::new(),
            zxy: Vec::new(),
            zyx: Vec::new(),
            zyy: Vec::new(),
        };
        for p in parts {
            if p.dims[0] != nx || p.dims[1] != ny {
                return Err(invalid("impedance maps have different station grids"));
            }
            out.dims[2] += p.dims[2];
            out.frequencies.extend_from_slice(&p.frequencies);
            out.zxx.extend_from_slice(&p.zxx);
            out.zxy.extend_from_slice(&p.zxy);
            out.zyx.extend_from_slice(&p.zyx);
            out.zyy.extend_from_slice(&p.zyy);
        }
        Ok(out)
    }

    pub fn index(&self, ix: usize, iy: usize, f: usize) -> usize {
        ix + self.dims[0] * (iy + self.dims[1] * f)
    }
}

/// The four response channels, in file order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    RhoXy,
    RhoYx,
    PhiXy,
    PhiYx,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::RhoXy,
        Channel::RhoYx,
        Channel::PhiXy,
        Channel::PhiYx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::RhoXy => "rho_xy",
            Channel::RhoYx => "rho_yx",
            Channel::PhiXy => "phi_xy",
            Channel::PhiYx => "phi_yx",
        }
    }

    pub fn from_name(name: &str) -> Option<Channel> {
        Channel::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn is_phase(self) -> bool {
        matches!(self, Channel::PhiXy | Channel::PhiYx)
    }
}

/// Apparent resistivity (Ωm) and phase (degrees) per station and
/// frequency, index `ix + nx·(iy + ny·f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseVolume {
    pub dims: [usize; 3],
    pub frequencies: Vec<f64>,
    pub rho_xy: Vec<f64>,
    pub rho_yx: Vec<f64>,
    pub phi_xy: Vec<f64>,
    pub phi_yx: Vec<f64>,
}

impl ResponseVolume {
    pub fn zeros(dims: [usize; 3], frequencies: Vec<f64>) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        Self {
            dims,
            frequencies,
            rho_xy: alloc::vec![0.0; n],
            rho_yx: alloc::vec![0.0; n],
            phi_xy: alloc::vec![0.0; n],
            phi_yx: alloc::vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, ix: usize, iy: usize, f: usize) -> usize {
        ix + self.dims[0] * (iy + self.dims[1] * f)
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        match c {
            Channel::RhoXy => &self.rho_xy,
            Channel::RhoYx => &self.rho_yx,
            Channel::PhiXy => &self.phi_xy,
            Channel::PhiYx => &self.phi_yx,
        }
    }

    pub fn channel_mut(&mut self, c: Channel) -> &mut Vec<f64> {
        match c {
            Channel::RhoXy => &mut self.rho_xy,
            Channel::RhoYx => &mut self.rho_yx,
            Channel::PhiXy => &mut self.phi_xy,
            Channel::PhiYx => &mut self.phi_yx,
        }
    }

    /// Reflects the station grid across x (ix -> nx-1-ix).
    pub fn mirrored_x(&self) -> Self {
        let mut out = self.clone();
        let [nx, ny, nf] = self.dims;
        for c in Channel::ALL {
            let src = self.channel(c);
            let dst = out.channel_mut(c);
            for f in 0..nf {
                for iy in 0..ny {
                    for ix in 0..nx {
                        dst[ix + nx * (iy + ny * f)] = src[(nx - 1 - ix) + nx * (iy + ny * f)];
                    }
                }
            }
        }
        out
    }
}

fn phase_deg(z: Complex64) -> f64 {
    libm::atan2(z.im, z.re) * 180.0 / PI
}

/// `ρ = |Z|²/(μ0·ω)` and `φ = arg Z` in degrees. φyx is shifted by 180° so
/// that a layered earth gives both phases in the first quadrant.
pub fn rho_phase(z: &ImpedanceMap) -> ResponseVolume {
    let mut out = ResponseVolume::zeros(z.dims, z.frequencies.clone());
    let plane = z.dims[0] * z.dims[1];
    for (f, &freq) in z.frequencies.iter().enumerate() {
        let wmu = omega(freq) * MU0;
        for s in f * plane..(f + 1) * plane {
            out.rho_xy[s] = z.zxy[s].norm_sqr() / wmu;
            out.rho_yx[s] = z.zyx[s].norm_sqr() / wmu;
            out.phi_xy[s] = phase_deg(z.zxy[s]);
            let mut p = phase_deg(z.zyx[s]) + 180.0;
            if p > 180.0 {
                p -= 360.0;
            }
            out.phi_yx[s] = p;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn fields_from(z: [Complex64; 4], h: [(Complex64, Complex64); 2]) -> [SurfaceFields; 2] {
        h.map(|(hx, hy)| SurfaceFields {
            dims: [1, 1],
            frequency: 2.0,
            ex: vec![z[0] * hx + z[1] * hy],
            ey: vec![z[2] * hx + z[3] * hy],
            hx: vec![hx],
            hy: vec![hy],
        })
    }

    #[test]
    fn recovers_synthetic_impedance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let z = [0; 4].map(|_| rand_c(&mut rng));
            let h = [0; 2].map(|_| (rand_c(&mut rng), rand_c(&mut rng)));
            let [p1, p2] = fields_from(z, h);
            let Ok(m) = impedance_tensor(&p1, &p2) else {
                continue;
            };
            let got = [m.zxx[0], m.zxy[0], m.zyx[0], m.zyy[0]];
            for (a, b) in got.iter().zip(&z) {
                assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn polarization_order_does_not_matter() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let mk = |rng: &mut ChaCha8Rng| SurfaceFields {
                dims: [2, 1],
                frequency: 1.0,
                ex: vec![rand_c(rng), rand_c(rng)],
                ey: vec![rand_c(rng), rand_c(rng)],
                hx: vec![rand_c(rng), rand_c(rng)],
                hy: vec![rand_c(rng), rand_c(rng)],
            };
            let (a, b) = (mk(&mut rng), mk(&mut rng));
            let (Ok(ab), Ok(ba)) = (impedance_tensor(&a, &b), impedance_tensor(&b, &a)) else {
                continue;
            };
            for (u, v) in [
                (&ab.zxx, &ba.zxx),
                (&ab.zxy, &ba.zxy),
                (&ab.zyx, &ba.zyx),
                (&ab.zyy, &ba.zyy),
            ] {
                for (p, q) in u.iter().zip(v.iter()) {
                    assert!((p - q).norm() <= 1e-12 * (1.0 + p.norm()));
                }
            }
        }
    }

    #[test]
    fn parallel_magnetic_fields_are_singular() {
        let h = c(1.0, 0.5);
        let z = [c(0.0, 0.0), c(1.0, 1.0), c(-1.0, -1.0), c(0.0, 0.0)];
        let [p1, p2] = fields_from(z, [(h, h * 2.0), (h * 3.0, h * 6.0)]);
        match impedance_tensor(&p1, &p2) {
            Err(Error::SingularStation { ix: 0, iy: 0, .. }) => {}
            other => panic!("expected singular station, got {other:?}"),
        }
    }

    #[test]
    fn rho_phase_closed_forms() {
        let w = omega(1.0) * MU0;
        let mag = libm::sqrt(100.0 * w);
        let zxy = Complex64::from_polar(mag, PI / 4.0);
        let map = ImpedanceMap {
            dims: [1, 1, 1],
            frequencies: vec![1.0],
            zxx: vec![c(0.0, 0.0)],
            zxy: vec![zxy],
            zyx: vec![-zxy],
            zyy: vec![c(0.0, 0.0)],
        };
        assert!((mag - 0.0281).abs() < 5e-5);
        let r = rho_phase(&map);
        assert!((r.rho_xy[0] - 100.0).abs() < 1e-10);
        assert!((r.rho_yx[0] - 100.0).abs() < 1e-10);
        assert!((r.phi_xy[0] - 45.0).abs() < 1e-12);
        assert!((r.phi_yx[0] - 45.0).abs() < 1e-12);
    }

    #[test]
    fn phase_wraps_into_half_open_circle() {
        let map = ImpedanceMap {
            dims: [2, 1, 1],
            frequencies: vec![1.0],
            zxx: vec![c(0.0, 0.0); 2],
            zxy: vec![c(1.0, 1.0); 2],
            zyx: vec![c(1.0, 0.0), c(1.0, 1.0)],
            zyy: vec![c(0.0, 0.0); 2],
        };
        let r = rho_phase(&map);
        assert_eq!(r.phi_yx[0], 180.0);
        assert!((r.phi_yx[1] + 135.0).abs() < 1e-12);
    }

    #[test]
    fn stacking_appends_frequencies() {
        let one = |f: f64| ImpedanceMap {
            dims: [1, 2, 1],
            frequencies: vec![f],
            zxx: vec![c(f, 0.0); 2],
            zxy: vec![c(f, 1.0); 2],
            zyx: vec![c(f, 2.0); 2],
            zyy: vec![c(f, 3.0); 2],
        };
        let s = ImpedanceMap::stack(&[one(1.0), one(2.0)]).unwrap();
        assert_eq!(s.dims, [1, 2, 2]);
        assert_eq!(s.zxy[s.index(0, 1, 1)], c(2.0, 1.0));
        assert!(ImpedanceMap::stack(&[]).is_err());
    }

    #[test]
    fn channel_names_round_trip() {
        for ch in Channel::ALL {
            assert_eq!(Channel::from_name(ch.name()), Some(ch));
        }
        assert_eq!(Channel::from_name("rho"), None);
    }
}
