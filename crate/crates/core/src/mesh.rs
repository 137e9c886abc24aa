//! Structured hexahedral meshes: the core study grid, the padded
//! computational grid (geometric padding plus air layers) and the global
//! edge numbering used by the edge-element assembly.
//!
//! Coordinates are right-handed with x north, y east and z positive
//! downward. The air-earth interface sits at z = 0; air cells have negative z.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// The regular study grid the resistivity models live on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreGrid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Cell spacing in meters.
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl CoreGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let grid = Self {
            nx: dims[0],
            ny: dims[1],
            nz: dims[2],
            dx: spacing[0],
            dy: spacing[1],
            dz: spacing[2],
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(invalid(format!(
                "core grid counts must be >= 1, got {}x{}x{}",
                self.nx, self.ny, self.nz
            )));
        }
        for s in [self.dx, self.dy, self.dz] {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid(format!("cell spacing must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn spacing(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dz]
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny * self.nz
    }
}

/// Grid description as exchanged in JSON:
/// `{"core":[nx,ny,nz], "spacing_m":[dx,dy,dz], "n_pad":5, "expansion":1.25, "n_air":5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub core: [usize; 3],
    pub spacing_m: [f64; 3],
    pub n_pad: usize,
    pub expansion: f64,
    pub n_air: usize,
}

impl GridSpec {
    pub fn core_grid(&self) -> Result<CoreGrid> {
        CoreGrid::new(self.core, self.spacing_m)
    }

    pub fn build(&self) -> Result<PaddedGrid> {
        build_padded_grid(&self.core_grid()?, self.n_pad, self.expansion, self.n_air)
    }
}

/// Computational grid: the core surrounded by geometrically growing pad
/// cells on the four lateral sides and the bottom, with air layers on top.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedGrid {
    pub x_coords: Vec<f64>,
    pub y_coords: Vec<f64>,
    pub z_coords: Vec<f64>,
    pub n_pad: usize,
    pub expansion: f64,
    pub n_air: usize,
    /// Index of the first core cell along each axis.
    pub core_offset: [usize; 3],
    pub core: CoreGrid,
}

/// Pads every lateral side and the bottom with `n_pad` cells whose widths grow
/// as `w·expansion^k`, and stacks `n_air` air cells (same growth law) on top.
pub fn build_padded_grid(
    core: &CoreGrid,
    n_pad: usize,
    expansion: f64,
    n_air: usize,
) -> Result<PaddedGrid> {
    core.validate()?;
    if !(expansion >= 1.0 && expansion.is_finite()) {
        return Err(invalid(format!("expansion must be >= 1, got {expansion}")));
    }

    let x_coords = axis_coords(core.nx, core.dx, expansion, n_pad, n_pad);
    let y_coords = axis_coords(core.ny, core.dy, expansion, n_pad, n_pad);
    let z_coords = axis_coords(core.nz, core.dz, expansion, n_air, n_pad);

    Ok(PaddedGrid {
        x_coords,
        y_coords,
        z_coords,
        n_pad,
        expansion,
        n_air,
        core_offset: [n_pad, n_pad, n_air],
        core: *core,
    })
}

/// Node coordinates of one axis: the core spans `[0, n·w]`, with `before`
/// growing cells prepended and `after` growing cells appended.
fn axis_coords(n: usize, w: f64, expansion: f64, before: usize, after: usize) -> Vec<f64> {
    let growth = |k: usize| w * libm::pow(expansion, k as f64);
    let mut coords = Vec::with_capacity(before + n + after + 1);
    let mut acc = 0.0;
    let mut left = Vec::with_capacity(before);
    for k in 1..=before {
        acc -= growth(k);
        left.push(acc);
    }
    coords.extend(left.into_iter().rev());
    coords.extend((0..=n).map(|i| i as f64 * w));
    let mut acc = n as f64 * w;
    for k in 1..=after {
        acc += growth(k);
        coords.push(acc);
    }
    coords
}

impl PaddedGrid {
    /// Cell counts `[Nx, Ny, Nz]`.
    pub fn dims(&self) -> [usize; 3] {
        [
            self.x_coords.len() - 1,
            self.y_coords.len() - 1,
            self.z_coords.len() - 1,
        ]
    }

    pub fn cell_count(&self) -> usize {
        let [nx, ny, nz] = self.dims();
        nx * ny * nz
    }

    pub fn coords(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.x_coords,
            Axis::Y => &self.y_coords,
            Axis::Z => &self.z_coords,
        }
    }

    /// Width of cell `index` along `axis`.
    pub fn width(&self, axis: Axis, index: usize) -> f64 {
        let c = self.coords(axis);
        c[index + 1] - c[index]
    }

    /// Linear cell index, x fastest.
    pub fn cell_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.dims();
        i + nx * (j + ny * k)
    }

    /// Padded cell indices of core cell `(i, j, k)`.
    pub fn core_to_padded(&self, i: usize, j: usize, k: usize) -> [usize; 3] {
        [
            i + self.core_offset[0],
            j + self.core_offset[1],
            k + self.core_offset[2],
        ]
    }

    /// Whether padded cell layer `k` is an air layer.
    pub fn is_air_layer(&self, k: usize) -> bool {
        k < self.n_air
    }

    /// Node level of the air-earth interface along z.
    pub fn surface_level(&self) -> usize {
        self.n_air
    }

    pub fn edges(&self) -> EdgeNumbering {
        EdgeNumbering::new(self.dims())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Global numbering of the edges of an `Nx × Ny × Nz` cell block.
///
/// x-directed edges come first, then y-directed, then z-directed; each block
/// is lexicographic with the x index fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeNumbering {
    dims: [usize; 3],
    counts: [usize; 3],
}

/// An edge in grid coordinates: its direction and the node index of its
/// lower endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeCoord {
    pub axis: Axis,
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl EdgeNumbering {
    pub fn new(dims: [usize; 3]) -> Self {
        let [nx, ny, nz] = dims;
        Self {
            dims,
            counts: [
                nx * (ny + 1) * (nz + 1),
                (nx + 1) * ny * (nz + 1),
                (nx + 1) * (ny + 1) * nz,
            ],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn total_edges(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Number of edges along each axis.
    pub fn block_sizes(&self) -> [usize; 3] {
        self.counts
    }

    /// Node-count extents of the index box for edges along `axis`.
    fn extents(&self, axis: Axis) -> [usize; 3] {
        let [nx, ny, nz] = self.dims;
        match axis {
            Axis::X => [nx, ny + 1, nz + 1],
            Axis::Y => [nx + 1, ny, nz + 1],
            Axis::Z => [nx + 1, ny + 1, nz],
        }
    }

    fn offset(&self, axis: Axis) -> usize {
        self.counts[..axis.index()].iter().sum()
    }

    pub fn index(&self, edge: EdgeCoord) -> usize {
        let [ex, ey, ez] = self.extents(edge.axis);
        debug_assert!(
            edge.i < ex && edge.j < ey && edge.k < ez,
            "edge out of range"
        );
        self.offset(edge.axis) + edge.i + ex * (edge.j + ey * edge.k)
    }

    pub fn coord(&self, index: usize) -> EdgeCoord {
        let mut local = index;
        for axis in Axis::ALL {
            let n = self.counts[axis.index()];
            if local < n {
                let [ex, ey, _] = self.extents(axis);
                return EdgeCoord {
                    axis,
                    i: local % ex,
                    j: (local / ex) % ey,
                    k: local / (ex * ey),
                };
            }
            local -= n;
        }
        panic!("edge index {index} out of range");
    }

    /// The 12 global edges of cell `(i, j, k)` in local order: four x-edges
    /// `(dj, dk) = (0,0), (1,0), (0,1), (1,1)`, then four y-edges over
    /// `(di, dk)`, then four z-edges over `(di, dj)`.
    pub fn cell_edges(&self, i: usize, j: usize, k: usize) -> [usize; 12] {
        let mut out = [0usize; 12];
        for (n, (a, b)) in LOCAL_PAIRS.iter().enumerate() {
            out[n] = self.index(EdgeCoord {
                axis: Axis::X,
                i,
                j: j + a,
                k: k + b,
            });
            out[4 + n] = self.index(EdgeCoord {
                axis: Axis::Y,
                i: i + a,
                j,
                k: k + b,
            });
            out[8 + n] = self.index(EdgeCoord {
                axis: Axis::Z,
                i: i + a,
                j: j + b,
                k,
            });
        }
        out
    }

    /// Edge midpoint in doubled integer node coordinates.
    pub fn doubled_midpoint(&self, index: usize) -> [usize; 3] {
        let e = self.coord(index);
        let mut p = [2 * e.i, 2 * e.j, 2 * e.k];
        p[e.axis.index()] += 1;
        p
    }

    /// Whether the edge lies in the outer surface of the block (so its
    /// tangential value is prescribed by a Dirichlet condition).
    pub fn is_boundary(&self, index: usize) -> bool {
        let e = self.coord(index);
        let n = [e.i, e.j, e.k];
        Axis::ALL
            .iter()
            .filter(|&&a| a != e.axis)
            .any(|&a| n[a.index()] == 0 || n[a.index()] == self.dims[a.index()])
    }
}

/// Offsets of the four edges of one direction within a cell.
pub(crate) const LOCAL_PAIRS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];
