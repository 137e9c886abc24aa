use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::element::element_matrices;
use crate::analytic1d::{omega, LayeredModel, AIR_CONDUCTIVITY, MU0};
use crate::error::{invalid, Result};
use crate::geomodel::ResistivityModel;
use crate::mesh::{Axis, EdgeNumbering, PaddedGrid};
use crate::sparse::CsrMatrix;

/// Per-cell conductivity (S/m) on the padded grid, x fastest.
///
/// Lateral pad cells copy the nearest core column, bottom pad cells repeat
/// the deepest core layer and air cells get [`AIR_CONDUCTIVITY`].
pub fn padded_conductivity(grid: &PaddedGrid, model: &ResistivityModel) -> Result<Vec<f64>> {
    let core = grid.core.dims();
    if model.dims != core {
        return Err(invalid(format!(
            "model dims {:?} do not match core grid {:?}",
            model.dims, core
        )));
    }
    let [nx, ny, nz] = grid.dims();
    let clamp = |v: usize, off: usize, n: usize| v.saturating_sub(off).min(n - 1);
    let mut sigma = Vec::with_capacity(grid.cell_count());
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if grid.is_air_layer(k) {
                    sigma.push(AIR_CONDUCTIVITY);
                    continue;
                }
                let ci = clamp(i, grid.core_offset[0], core[0]);
                let cj = clamp(j, grid.core_offset[1], core[1]);
                let ck = clamp(k, grid.core_offset[2], core[2]);
                sigma.push(libm::pow(10.0, -model.log10_rho[model.index(ci, cj, ck)]));
            }
        }
    }
    Ok(sigma)
}

/// Layered background: arithmetic mean of σ over each padded earth layer,
/// the deepest layer acting as the half-space.
pub fn background_model(grid: &PaddedGrid, sigma: &[f64]) -> Result<LayeredModel> {
    let [nx, ny, nz] = grid.dims();
    if sigma.len() != grid.cell_count() {
        return Err(invalid("conductivity length does not match the grid"));
    }
    let plane = nx * ny;
    let mut mean = Vec::new();
    let mut thick = Vec::new();
    for k in grid.n_air..nz {
        let layer = &sigma[k * plane..(k + 1) * plane];
        mean.push(layer.iter().sum::<f64>() / plane as f64);
        thick.push(grid.width(Axis::Z, k));
    }
    if mean.is_empty() {
        return Err(invalid("grid has no earth layers"));
    }
    thick.pop();
    LayeredModel::from_conductivities(thick, &mean)
}

/// Frequency-independent pieces of the FEM operator, sharing one sparsity
/// pattern: the curl-curl stiffness and the σ-weighted mass.
#[derive(Debug, Clone)]
pub struct Operators {
    pub stiffness: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
}

impl Operators {
    pub fn new(grid: &PaddedGrid, sigma: &[f64]) -> Result<Self> {
        if sigma.len() != grid.cell_count() {
            return Err(invalid(format!(
                "{} conductivities for {} cells",
                sigma.len(),
                grid.cell_count()
            )));
        }
        if let Some(s) = sigma.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(invalid(format!("conductivity must be positive, got {s}")));
        }
        let edges = grid.edges();
        let pattern = pattern(grid, &edges);
        let mut stiffness = pattern.clone();
        let mut mass = pattern;
        let [nx, ny, nz] = grid.dims();
        let mut slots = [[0usize; 12]; 12];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let h = [
                        grid.width(Axis::X, i),
                        grid.width(Axis::Y, j),
                        grid.width(Axis::Z, k),
                    ];
                    let (ke, me) = element_matrices(h);
                    let s = sigma[grid.cell_index(i, j, k)];
                    let ids = edges.cell_edges(i, j, k);
                    for (a, &r) in ids.iter().enumerate() {
                        for (b, &c) in ids.iter().enumerate() {
                            slots[a][b] = stiffness
                                .position(r, c)
                                .expect("pattern covers cell couplings");
                        }
                    }
                    let kv = stiffness.values_mut();
                    for a in 0..12 {
                        for b in 0..12 {
                            kv[slots[a][b]] += ke[a][b];
                        }
                    }
                    let mv = mass.values_mut();
                    for a in 0..12 {
                        for b in 0..12 {
                            mv[slots[a][b]] += s * me[a][b];
                        }
                    }
                }
            }
        }
        Ok(Self { stiffness, mass })
    }

    /// `K + iωμ0·M` at frequency `freq`.
    pub fn system_matrix(&self, freq: f64) -> CsrMatrix<Complex64> {
        let wmu = omega(freq) * MU0;
        let mass = self.mass.values();
        self.stiffness.map(|p, &k| Complex64::new(k, wmu * mass[p]))
    }
}

/// Every pair of edges that share a cell.
fn pattern(grid: &PaddedGrid, edges: &EdgeNumbering) -> CsrMatrix<f64> {
    let n = edges.total_edges();
    let [nx, ny, nz] = grid.dims();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let ids = edges.cell_edges(i, j, k);
                for &r in &ids {
                    rows[r].extend_from_slice(&ids);
                }
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for row in &mut rows {
        row.sort_unstable();
        row.dedup();
        col_idx.extend_from_slice(row);
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::from_pattern(n, n, row_ptr, col_idx)
}

/// The full (pre-boundary) FEM matrix at one frequency.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix<Complex64>,
    pub frequency: f64,
}

impl AssembledSystem {
    /// `max|A - Aᵀ| / max|A|`.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.matrix.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            self.matrix.max_asymmetry() / scale
        }
    }
}

/// Assembles `K + iωμσM` for the padded grid with per-cell conductivity
/// `sigma`. The source term is zero; excitation enters through the boundary.
pub fn assemble(grid: &PaddedGrid, sigma: &[f64], freq: f64) -> Result<AssembledSystem> {
    if !(freq > 0.0 && freq.is_finite()) {
        return Err(invalid(format!("frequency must be positive, got {freq}")));
    }
    let ops = Operators::new(grid, sigma)?;
    Ok(AssembledSystem {
        matrix: ops.system_matrix(freq),
        frequency: freq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_padded_grid, CoreGrid};

    fn grid(core: usize, pad: usize, air: usize) -> PaddedGrid {
        let c = CoreGrid::new([core; 3], [100.0, 120.0, 80.0]).unwrap();
        build_padded_grid(&c, pad, 1.3, air).unwrap()
    }

    fn pseudo_sigma(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 0.001 + 0.01 * ((i * 37 % 11) as f64))
            .collect()
    }

    #[test]
    fn single_cell_matches_element_matrices() {
        let g = grid(1, 0, 0);
        let ops = Operators::new(&g, &[0.5]).unwrap();
        let (ke, me) = element_matrices([100.0, 120.0, 80.0]);
        let ids = g.edges().cell_edges(0, 0, 0);
        assert_eq!(ops.stiffness.n_rows(), 12);
        for a in 0..12 {
            for b in 0..12 {
                assert_eq!(ops.stiffness.get(ids[a], ids[b]).unwrap(), ke[a][b]);
                assert_eq!(ops.mass.get(ids[a], ids[b]).unwrap(), 0.5 * me[a][b]);
            }
        }
    }

    #[test]
    fn sparse_assembly_matches_dense_reference() {
        let g = grid(2, 1, 0);
        assert_eq!(g.dims(), [4, 4, 3]);
        let sigma = pseudo_sigma(g.cell_count());
        let sys = assemble(&g, &sigma, 3.0).unwrap();
        let e = g.edges();
        let n = e.total_edges();
        let wmu = omega(3.0) * MU0;
        let mut dense = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        let [nx, ny, nz] = g.dims();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let h = [
                        g.width(Axis::X, i),
                        g.width(Axis::Y, j),
                        g.width(Axis::Z, k),
                    ];
                    let (ke, me) = element_matrices(h);
                    let s = sigma[g.cell_index(i, j, k)];
                    let ids = e.cell_edges(i, j, k);
                    for a in 0..12 {
                        for b in 0..12 {
                            dense[ids[a]][ids[b]] += Complex64::new(ke[a][b], wmu * s * me[a][b]);
                        }
                    }
                }
            }
        }
        let scale = sys.matrix.max_abs();
        for r in 0..n {
            for c in 0..n {
                let v = sys.matrix.get(r, c).unwrap_or_default();
                assert!((v - dense[r][c]).norm() <= 1e-13 * scale, "({r},{c})");
            }
        }
    }

    #[test]
    fn matrix_is_complex_symmetric_with_bounded_rows() {
        let g = grid(3, 2, 2);
        let sigma = pseudo_sigma(g.cell_count());
        let sys = assemble(&g, &sigma, 0.1).unwrap();
        assert_eq!(sys.relative_asymmetry(), 0.0);
        assert!(sys.matrix.is_structurally_symmetric());
        assert_eq!(sys.matrix.max_row_nnz(), 33);
    }

    #[test]
    fn discrete_gradients_span_the_stiffness_null_space() {
        let g = grid(3, 1, 1);
        let ops = Operators::new(&g, &vec![1e-30; g.cell_count()]).unwrap();
        let e = g.edges();
        let phi = |i: usize, j: usize, k: usize| {
            libm::sin(i as f64 * 1.3 + j as f64 * 0.7) + (k * k) as f64
        };
        let grad: Vec<f64> = (0..e.total_edges())
            .map(|n| {
                let c = e.coord(n);
                let (i, j, k) = (c.i, c.j, c.k);
                let (hi, len) = match c.axis {
                    Axis::X => (phi(i + 1, j, k), g.width(Axis::X, i)),
                    Axis::Y => (phi(i, j + 1, k), g.width(Axis::Y, j)),
                    Axis::Z => (phi(i, j, k + 1), g.width(Axis::Z, k)),
                };
                (hi - phi(i, j, k)) / len
            })
            .collect();
        let kg = ops.stiffness.matvec(&grad);
        let scale = ops
            .stiffness
            .values()
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let gmax = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(kg.iter().all(|v| v.abs() < 1e-12 * scale * gmax));
        // The mass term vanishes with σ, leaving the pure stiffness.
        let sys = ops.system_matrix(1.0);
        assert!(sys.values().iter().all(|v| v.im.abs() < 1e-20));
    }

    #[test]
    fn padding_copies_nearest_core_values() {
        let g = grid(2, 2, 1);
        let mut m = ResistivityModel::uniform([2; 3], [100.0, 120.0, 80.0], 1.0);
        for (n, v) in m.log10_rho.iter_mut().enumerate() {
            *v = n as f64 * 0.25;
        }
        let s = padded_conductivity(&g, &m).unwrap();
        let at = |i, j, k| s[g.cell_index(i, j, k)];
        let core = |i, j, k| libm::pow(10.0, -m.log10_rho[m.index(i, j, k)]);
        assert_eq!(at(0, 0, 0), AIR_CONDUCTIVITY);
        assert_eq!(at(0, 0, 1), core(0, 0, 0));
        assert_eq!(at(5, 3, 2), core(1, 1, 1));
        assert_eq!(at(5, 0, 4), core(1, 0, 1));
        assert_eq!(at(2, 3, 1), core(0, 1, 0));
        let wrong = ResistivityModel::uniform([3, 2, 2], [1.0; 3], 1.0);
        assert!(padded_conductivity(&g, &wrong).is_err());
    }

    #[test]
    fn background_of_layered_model_is_exact() {
        let g = grid(4, 2, 2);
        let m = ResistivityModel::layered(
            [4; 3],
            [100.0, 120.0, 80.0],
            &[(160.0, 10.0), (1.0, 1000.0)],
        );
        let s = padded_conductivity(&g, &m).unwrap();
        let bg = background_model(&g, &s).unwrap();
        assert_eq!(bg.resistivities.len(), 6);
        let want = [80.0, 80.0, 80.0, 80.0, 80.0 * 1.3];
        assert_eq!(bg.thicknesses.len(), want.len());
        assert!(bg
            .thicknesses
            .iter()
            .zip(want)
            .all(|(a, b)| (a - b).abs() < 1e-9));
        for (n, r) in bg.resistivities.iter().enumerate() {
            let want = if n < 2 { 10.0 } else { 1000.0 };
            assert!((r - want).abs() < 1e-9 * want);
        }
    }
}
