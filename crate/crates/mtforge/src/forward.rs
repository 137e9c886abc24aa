use mtforge_core::femsolver::{ForwardResult, ForwardSolver, SolverOptions};
use mtforge_core::geomodel::ResistivityModel;
use mtforge_core::mesh::GridSpec;
use rayon::prelude::*;

use crate::error::Result;

/// Builds a rayon pool with `threads` workers (all cores when `None` or 0).
pub fn thread_pool(
    threads: Option<usize>,
) -> Result<rayon::ThreadPool, rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
}

/// Forward response with the frequencies solved concurrently on the current
/// rayon pool. Results are merged in frequency order, so the output does not
/// depend on the number of workers.
pub fn forward_parallel(
    model: &ResistivityModel,
    spec: &GridSpec,
    freqs: &[f64],
    options: SolverOptions,
) -> Result<ForwardResult> {
    let solver = ForwardSolver::with_options(model, spec, options)?;
    let parts = freqs
        .par_iter()
        .map(|&f| {
            let part = solver.solve_frequency(f);
            if let Ok(p) = &part {
                log::debug!(
                    "{f} Hz: {} unknowns, residuals {:.1e}/{:.1e}",
                    p.diagnostics.unknowns,
                    p.diagnostics.residuals[0],
                    p.diagnostics.residuals[1]
                );
            }
            part
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ForwardResult::from_parts(parts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_count_does_not_change_result() {
        let spec = GridSpec {
            core: [4, 4, 4],
            spacing_m: [500.0; 3],
            n_pad: 2,
            expansion: 1.5,
            n_air: 2,
        };
        let model =
            ResistivityModel::layered(spec.core, spec.spacing_m, &[(1000.0, 30.0), (0.0, 300.0)]);
        let freqs = [0.1, 1.0, 10.0];
        let one = thread_pool(Some(1)).unwrap();
        let three = thread_pool(Some(3)).unwrap();
        let a = one
            .install(|| forward_parallel(&model, &spec, &freqs, SolverOptions::default()))
            .unwrap();
        let b = three
            .install(|| forward_parallel(&model, &spec, &freqs, SolverOptions::default()))
            .unwrap();
        assert_eq!(a.response, b.response);
        assert_eq!(a.diagnostics.len(), 3);
    }
}
