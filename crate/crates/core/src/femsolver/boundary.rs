use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::assemble::AssembledSystem;
use crate::analytic1d::{FieldProfile, LayeredModel};
use crate::error::{invalid, Result};
use crate::mesh::{Axis, EdgeNumbering, PaddedGrid};
use crate::sparse::CsrMatrix;

/// Direction of the incident plane-wave electric field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    X,
    Y,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::X, Polarization::Y];

    fn axis(self) -> Axis {
        match self {
            Polarization::X => Axis::X,
            Polarization::Y => Axis::Y,
        }
    }
}

/// Partition of the edges into free (interior) and prescribed (boundary)
/// unknowns.
#[derive(Debug, Clone)]
pub struct DirichletSplit {
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    /// For every global edge its position in `interior` or `boundary`.
    local: Vec<usize>,
    is_boundary: Vec<bool>,
}

impl DirichletSplit {
    pub fn new(edges: &EdgeNumbering) -> Self {
        let n = edges.total_edges();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut local = vec![0; n];
        let mut is_boundary = vec![false; n];
        for e in 0..n {
            if edges.is_boundary(e) {
                local[e] = boundary.len();
                boundary.push(e);
                is_boundary[e] = true;
            } else {
                local[e] = interior.len();
                interior.push(e);
            }
        }
        Self {
            interior,
            boundary,
            local,
            is_boundary,
        }
    }

    pub fn is_boundary(&self, edge: usize) -> bool {
        self.is_boundary[edge]
    }

    /// Splits `A` into the interior block `A_II` and the coupling `A_IB`
    /// (columns indexed by boundary position).
    pub fn reduce(&self, a: &CsrMatrix<Complex64>) -> (CsrMatrix<Complex64>, CsrMatrix<Complex64>) {
        let ni = self.interior.len();
        let mut ii_ptr = vec![0];
        let mut ii_col = Vec::new();
        let mut ii_val = Vec::new();
        let mut ib_ptr = vec![0];
        let mut ib_col = Vec::new();
        let mut ib_val = Vec::new();
        for &r in &self.interior {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if self.is_boundary[c] {
                    ib_col.push(self.local[c]);
                    ib_val.push(v);
                } else {
                    ii_col.push(self.local[c]);
                    ii_val.push(v);
                }
            }
            ii_ptr.push(ii_col.len());
            ib_ptr.push(ib_col.len());
        }
        let mut ii = CsrMatrix::from_pattern(ni, ni, ii_ptr, ii_col);
        ii.values_mut().copy_from_slice(&ii_val);
        let mut ib = CsrMatrix::from_pattern(ni, self.boundary.len(), ib_ptr, ib_col);
        ib.values_mut().copy_from_slice(&ib_val);
        (ii, ib)
    }

    /// Global field from interior unknowns and boundary values.
    pub fn scatter(&self, interior: &[Complex64], boundary: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.local.len()];
        for (&g, &v) in self.interior.iter().zip(interior) {
            out[g] = v;
        }
        for (&g, &v) in self.boundary.iter().zip(boundary) {
            out[g] = v;
        }
        out
    }
}

/// Prescribed values on the boundary edges: the layered-earth plane-wave
/// field along the polarization axis, zero on every other edge direction.
pub fn boundary_values(
    grid: &PaddedGrid,
    split: &DirichletSplit,
    profile: &FieldProfile,
    polarization: Polarization,
) -> Vec<Complex64> {
    let edges = grid.edges();
    let z0 = grid.z_coords[grid.surface_level()];
    let nz = grid.z_coords.len();
    let levels: Vec<Complex64> = (0..nz)
        .map(|k| profile.at(grid.z_coords[k] - z0).e)
        .collect();
    let axis = polarization.axis();
    split
        .boundary
        .iter()
        .map(|&e| {
            let c = edges.coord(e);
            if c.axis == axis {
                levels[c.k]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// The interior system left after Dirichlet elimination, with one right-hand
/// side per polarization. The matrix is shared by both.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix<Complex64>,
    pub rhs: [Vec<Complex64>; 2],
    pub boundary_values: [Vec<Complex64>; 2],
    pub frequency: f64,
}

impl ReducedSystem {
    pub fn build(
        system: &AssembledSystem,
        grid: &PaddedGrid,
        split: &DirichletSplit,
        background: &LayeredModel,
    ) -> Result<Self> {
        if system.matrix.n_rows() != split.interior.len() + split.boundary.len() {
            return Err(invalid(format!(
                "matrix has {} rows but the grid has {} edges",
                system.matrix.n_rows(),
                split.interior.len() + split.boundary.len()
            )));
        }
        let profile = FieldProfile::new(background, system.frequency)?;
        let (a_ii, a_ib) = split.reduce(&system.matrix);
        let mk = |pol| {
            let ub = boundary_values(grid, split, &profile, pol);
            let rhs: Vec<Complex64> = a_ib.matvec(&ub).into_iter().map(|v| -v).collect();
            (rhs, ub)
        };
        let (rx, ux) = mk(Polarization::X);
        let (ry, uy) = mk(Polarization::Y);
        Ok(Self {
            matrix: a_ii,
            rhs: [rx, ry],
            boundary_values: [ux, uy],
            frequency: system.frequency,
        })
    }
}

/// Dirichlet elimination for one polarization: returns the interior matrix,
/// the right-hand side `-A_IB·u_B` and the boundary values `u_B`.
pub fn apply_boundary(
    system: &AssembledSystem,
    grid: &PaddedGrid,
    background: &LayeredModel,
    polarization: Polarization,
) -> Result<(CsrMatrix<Complex64>, Vec<Complex64>, Vec<Complex64>)> {
    let split = DirichletSplit::new(&grid.edges());
    let reduced = ReducedSystem::build(system, grid, &split, background)?;
    let [rx, ry] = reduced.rhs;
    let [ux, uy] = reduced.boundary_values;
    Ok(match polarization {
        Polarization::X => (reduced.matrix, rx, ux),
        Polarization::Y => (reduced.matrix, ry, uy),
    })
}
