//! Edge-element solution of the MT curl-curl problem.
//!
//! For each frequency the system `curl curl E + iωμ0σE = 0` is assembled on
//! the padded grid, the boundary edges are fixed to the layered background
//! plane wave for an x- and a y-polarized source, and the shared interior
//! matrix is factored once and solved for both right-hand sides. Station
//! fields from the two solutions give the impedance tensor and from it the
//! apparent resistivity and phase.

mod assemble;
mod boundary;
mod element;
mod response;

pub use assemble::{assemble, background_model, padded_conductivity, AssembledSystem, Operators};
pub use boundary::{apply_boundary, boundary_values, DirichletSplit, Polarization, ReducedSystem};
pub use element::{basis, curl_at, element_matrices, ElementMatrix};
pub use response::{
    impedance_tensor, rho_phase, surface_fields, Channel, ImpedanceMap, ResponseVolume,
    SurfaceFields, SINGULAR_STATION_RATIO,
};

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic1d::LayeredModel;
use crate::error::{invalid, Error, Result};
use crate::geomodel::ResistivityModel;
use crate::mesh::{GridSpec, PaddedGrid};
use crate::sparse::{nested_dissection, FactorStats, MultifrontalLdlt, SeparatorTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Largest accepted relative residual `‖Au - b‖/‖b‖`.
    pub tolerance: f64,
    /// Iterative-refinement steps allowed after the direct solve.
    pub max_refinement_steps: usize,
    /// Nested dissection stops splitting regions at this many unknowns.
    pub leaf_size: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_refinement_steps: 6,
            leaf_size: 64,
        }
    }
}

/// What happened while solving one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDiagnostics {
    pub frequency: f64,
    pub unknowns: usize,
    /// `max|A - Aᵀ| / max|A|` of the assembled matrix.
    pub relative_asymmetry: f64,
    /// Final relative residual for the x and y polarizations.
    pub residuals: [f64; 2],
    pub max_front: usize,
    pub factor_entries: usize,
}

/// Solves the reduced system for both polarizations with one factorization.
/// Fails with [`Error::NumericFailure`] if a residual stays above tolerance.
pub fn solve(
    system: &ReducedSystem,
    tree: &SeparatorTree,
    options: &SolverOptions,
) -> Result<([Vec<Complex64>; 2], [f64; 2], FactorStats)> {
    let lu = MultifrontalLdlt::factor(&system.matrix, tree)?;
    let target = options.tolerance * 1e-2;
    let mut res = [0.0; 2];
    let mut sols: [Vec<Complex64>; 2] = [Vec::new(), Vec::new()];
    for p in 0..2 {
        let (x, r) = lu.solve_refined(
            &system.matrix,
            &system.rhs[p],
            target,
            options.max_refinement_steps,
        );
        if !(r <= options.tolerance) {
            return Err(Error::NumericFailure {
                message: format!(
                    "{:?}-polarization solve at {} Hz missed the residual target",
                    Polarization::BOTH[p],
                    system.frequency
                ),
                residual: r,
            });
        }
        res[p] = r;
        sols[p] = x;
    }
    Ok((sols, res, lu.stats()))
}

/// Full edge fields of both polarizations at one frequency.
#[derive(Debug, Clone)]
pub struct EdgeSolution {
    pub fields: [Vec<Complex64>; 2],
    pub diagnostics: FrequencyDiagnostics,
}

#[derive(Debug, Clone)]
pub struct FrequencySolution {
    pub impedance: ImpedanceMap,
    pub diagnostics: FrequencyDiagnostics,
}

/// Everything produced by a multi-frequency run.
#[derive(Debug, Clone)]
pub struct ForwardResult {
    pub response: ResponseVolume,
    pub impedance: ImpedanceMap,
    pub diagnostics: Vec<FrequencyDiagnostics>,
}

impl ForwardResult {
    /// Merges per-frequency solutions (already in frequency order).
    pub fn from_parts(parts: Vec<FrequencySolution>) -> Result<Self> {
        let mut maps = Vec::with_capacity(parts.len());
        let mut diagnostics = Vec::with_capacity(parts.len());
        for p in parts {
            maps.push(p.impedance);
            diagnostics.push(p.diagnostics);
        }
        let impedance = ImpedanceMap::stack(&maps)?;
        Ok(Self {
            response: rho_phase(&impedance),
            impedance,
            diagnostics,
        })
    }
}

/// Frequency-independent state of a forward problem: grid, conductivity
/// operators, boundary split, background model and elimination order.
/// Immutable once built, so frequencies can be solved concurrently.
#[derive(Debug, Clone)]
pub struct ForwardSolver {
    grid: PaddedGrid,
    operators: Operators,
    split: DirichletSplit,
    tree: SeparatorTree,
    background: LayeredModel,
    options: SolverOptions,
}

impl ForwardSolver {
    pub fn new(model: &ResistivityModel, spec: &GridSpec) -> Result<Self> {
        Self::with_options(model, spec, SolverOptions::default())
    }

    pub fn with_options(
        model: &ResistivityModel,
        spec: &GridSpec,
        options: SolverOptions,
    ) -> Result<Self> {
        if model.dims != spec.core {
            return Err(invalid(format!(
                "model dims {:?} do not match grid core {:?}",
                model.dims, spec.core
            )));
        }
        let grid = spec.build()?;
        let sigma = padded_conductivity(&grid, model)?;
        Self::from_conductivity(grid, &sigma, options)
    }

    /// Builds the solver from an explicit per-cell conductivity on `grid`.
    pub fn from_conductivity(
        grid: PaddedGrid,
        sigma: &[f64],
        options: SolverOptions,
    ) -> Result<Self> {
        if !(options.tolerance > 0.0) || options.leaf_size == 0 {
            return Err(invalid("solver tolerance and leaf size must be positive"));
        }
        let operators = Operators::new(&grid, sigma)?;
        let background = background_model(&grid, sigma)?;
        let edges = grid.edges();
        let split = DirichletSplit::new(&edges);
        let points: Vec<[usize; 3]> = split
            .interior
            .iter()
            .map(|&e| edges.doubled_midpoint(e))
            .collect();
        let tree = nested_dissection(&points, options.leaf_size);
        Ok(Self {
            grid,
            operators,
            split,
            tree,
            background,
            options,
        })
    }

    pub fn grid(&self) -> &PaddedGrid {
        &self.grid
    }

    pub fn background(&self) -> &LayeredModel {
        &self.background
    }

    pub fn split(&self) -> &DirichletSplit {
        &self.split
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn assemble(&self, freq: f64) -> Result<AssembledSystem> {
        check_frequency(freq)?;
        Ok(AssembledSystem {
            matrix: self.operators.system_matrix(freq),
            frequency: freq,
        })
    }

    pub fn solve_edges(&self, freq: f64) -> Result<EdgeSolution> {
        let system = self.assemble(freq)?;
        let reduced = ReducedSystem::build(&system, &self.grid, &self.split, &self.background)?;
        let (sols, residuals, stats) = solve(&reduced, &self.tree, &self.options)?;
        let [sx, sy] = sols;
        let [bx, by] = &reduced.boundary_values;
        Ok(EdgeSolution {
            fields: [self.split.scatter(&sx, bx), self.split.scatter(&sy, by)],
            diagnostics: FrequencyDiagnostics {
                frequency: freq,
                unknowns: self.split.interior.len(),
                relative_asymmetry: system.relative_asymmetry(),
                residuals,
                max_front: stats.max_front,
                factor_entries: stats.factor_entries,
            },
        })
    }

    pub fn solve_frequency(&self, freq: f64) -> Result<FrequencySolution> {
        let sol = self.solve_edges(freq)?;
        let [ex, ey] = &sol.fields;
        let f1 = surface_fields(&self.grid, ex, freq)?;
        let f2 = surface_fields(&self.grid, ey, freq)?;
        Ok(FrequencySolution {
            impedance: impedance_tensor(&f1, &f2)?,
            diagnostics: sol.diagnostics,
        })
    }

    /// Solves every frequency in order.
    pub fn run(&self, freqs: &[f64]) -> Result<ForwardResult> {
        if freqs.is_empty() {
            return Err(invalid("no frequencies given"));
        }
        let parts = freqs
            .iter()
            .map(|&f| self.solve_frequency(f))
            .collect::<Result<Vec<_>>>()?;
        ForwardResult::from_parts(parts)
    }
}

fn check_frequency(freq: f64) -> Result<()> {
    if freq > 0.0 && freq.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("frequency must be positive, got {freq}")))
    }
}

/// Apparent resistivity and phase of `model` on the grid `spec` at `freqs`.
pub fn forward(model: &ResistivityModel, spec: &GridSpec, freqs: &[f64]) -> Result<ResponseVolume> {
    Ok(ForwardSolver::new(model, spec)?.run(freqs)?.response)
}
