use mtforge_core::analytic1d::{impedance_recursion, FieldProfile, LayeredModel};
use mtforge_core::femsolver::{rho_phase, surface_fields, ForwardSolver, SolverOptions};
use mtforge_core::geomodel::{generate_grf, GrfSpec, ResistivityModel};
use mtforge_core::mesh::{Axis, EdgeCoord, GridSpec};

fn spec(n: usize, h: f64) -> GridSpec {
    GridSpec {
        core: [n; 3],
        spacing_m: [h; 3],
        n_pad: 3,
        expansion: 1.3,
        n_air: 3,
    }
}

/// Largest relative resistivity error and phase error (degrees) over all
/// stations of a 100 Ωm half-space with a 2 km deep core of `n` cells.
fn max_errors(n: usize, f: f64) -> (f64, f64) {
    let s = spec(n, 2000.0 / n as f64);
    let m = ResistivityModel::uniform(s.core, s.spacing_m, 100.0);
    let r = ForwardSolver::new(&m, &s)
        .unwrap()
        .run(&[f])
        .unwrap()
        .response;
    let rho = r
        .rho_xy
        .iter()
        .chain(&r.rho_yx)
        .map(|v| (v - 100.0).abs() / 100.0)
        .fold(0.0, f64::max);
    let phi = r
        .phi_xy
        .iter()
        .chain(&r.phi_yx)
        .map(|v| (v - 45.0).abs())
        .fold(0.0, f64::max);
    (rho, phi)
}

#[test]
fn half_space_small_grid() {
    let s = spec(6, 250.0);
    let m = ResistivityModel::uniform(s.core, s.spacing_m, 100.0);
    let solver = ForwardSolver::new(&m, &s).unwrap();
    let out = solver.run(&[0.1, 1.0, 10.0]).unwrap();
    let r = &out.response;
    assert_eq!(r.dims, [6, 6, 3]);
    for i in 0..r.len() {
        assert!((r.rho_xy[i] - 100.0).abs() < 5.0, "rho_xy {}", r.rho_xy[i]);
        assert!((r.rho_yx[i] - 100.0).abs() < 5.0, "rho_yx {}", r.rho_yx[i]);
        assert!((r.phi_xy[i] - 45.0).abs() < 1.5, "phi_xy {}", r.phi_xy[i]);
        assert!((r.phi_yx[i] - 45.0).abs() < 1.5, "phi_yx {}", r.phi_yx[i]);
    }
    let z = &out.impedance;
    for i in 0..r.len() {
        let scale = z.zxy[i].norm();
        assert!(z.zxx[i].norm() < 1e-2 * scale && z.zyy[i].norm() < 1e-2 * scale);
        assert!((z.zxy[i] + z.zyx[i]).norm() < 1e-2 * scale);
    }
    for d in &out.diagnostics {
        assert!(d.residuals.iter().all(|&r| r <= 1e-8));
        assert!(d.relative_asymmetry <= 1e-12);
    }
}

#[test]
fn surface_impedance_magnitude_at_one_hertz() {
    let s = spec(6, 500.0);
    let m = ResistivityModel::uniform(s.core, s.spacing_m, 100.0);
    let solver = ForwardSolver::new(&m, &s).unwrap();
    let sol = solver.solve_edges(1.0).unwrap();
    let fx = surface_fields(solver.grid(), &sol.fields[0], 1.0).unwrap();
    let want = impedance_recursion(&LayeredModel::half_space(100.0), 1.0)
        .unwrap()
        .z;
    assert!((want.norm() - 0.0281).abs() < 5e-5);
    for i in 0..fx.ex.len() {
        let z = fx.ex[i] / fx.hy[i];
        assert!((z - want).norm() < 0.02 * want.norm(), "{z} vs {want}");
        // x-polarization over a 1D earth has no cross components.
        assert!(fx.ey[i].norm() < 1e-3 * fx.ex[i].norm());
        assert!(fx.hx[i].norm() < 1e-3 * fx.hy[i].norm());
    }
}

#[test]
fn interior_field_follows_plane_wave_decay() {
    let s = spec(8, 250.0);
    let m = ResistivityModel::uniform(s.core, s.spacing_m, 100.0);
    let solver = ForwardSolver::new(&m, &s).unwrap();
    let f = 10.0;
    let sol = solver.solve_edges(f).unwrap();
    let g = solver.grid();
    let e = g.edges();
    let profile = FieldProfile::new(&LayeredModel::half_space(100.0), f).unwrap();
    let (i, j) = (g.core_offset[0] + 4, g.core_offset[1] + 4);
    for k in g.n_air..g.n_air + 8 {
        let v = sol.fields[0][e.index(EdgeCoord {
            axis: Axis::X,
            i,
            j,
            k,
        })];
        let want = profile.at(g.z_coords[k]).e;
        assert!(
            (v - want).norm() < 0.02 * want.norm(),
            "level {k}: {v} vs {want}"
        );
    }
}

#[test]
fn mirrored_model_gives_mirrored_response() {
    let s = spec(6, 400.0);
    let mut grf = GrfSpec::new([6; 3], 6.0, 11);
    grf.spacing = s.spacing_m;
    let m = generate_grf(&grf).unwrap();
    let freqs = [0.3, 3.0];
    let a = ForwardSolver::new(&m, &s)
        .unwrap()
        .run(&freqs)
        .unwrap()
        .response;
    let b = ForwardSolver::new(&m.mirrored_x(), &s)
        .unwrap()
        .run(&freqs)
        .unwrap()
        .response;
    let am = a.mirrored_x();
    for (u, v) in [
        (&am.rho_xy, &b.rho_xy),
        (&am.rho_yx, &b.rho_yx),
        (&am.phi_xy, &b.phi_xy),
        (&am.phi_yx, &b.phi_yx),
    ] {
        for (p, q) in u.iter().zip(v) {
            assert!((p - q).abs() <= 1e-6 * p.abs().max(1.0), "{p} vs {q}");
        }
    }
}

#[test]
fn refinement_reduces_half_space_error() {
    // Same 2 km core, cell size halved. The phase error falls steadily; the
    // resistivity error is tiny and may change sign, so it is only compared
    // where it is still dominated by the coarse cells.
    for f in [3.0, 100.0] {
        let (rc, pc) = max_errors(4, f);
        let (rf, pf) = max_errors(8, f);
        assert!(rf < rc, "{f} Hz: rho fine {rf} coarse {rc}");
        assert!(pf < pc, "{f} Hz: phase fine {pf} coarse {pc}");
    }
}

#[test]
fn swapping_x_and_y_transposes_the_response() {
    let s = spec(4, 300.0);
    let m = ResistivityModel::layered(s.core, s.spacing_m, &[(600.0, 30.0), (1.0, 300.0)]);
    let solver = ForwardSolver::new(&m, &s).unwrap();
    let r = rho_phase(&solver.solve_frequency(2.0).unwrap().impedance);
    for ix in 0..4 {
        for iy in 0..4 {
            let (a, b) = (r.index(ix, iy, 0), r.index(iy, ix, 0));
            assert!((r.rho_xy[a] - r.rho_yx[b]).abs() < 1e-9 * r.rho_xy[a]);
            assert!((r.phi_xy[a] - r.phi_yx[b]).abs() < 1e-9);
        }
    }
}

#[test]
fn loose_solver_options_are_validated() {
    let s = spec(4, 300.0);
    let m = ResistivityModel::uniform(s.core, s.spacing_m, 10.0);
    let bad = SolverOptions {
        tolerance: 0.0,
        ..SolverOptions::default()
    };
    assert!(ForwardSolver::with_options(&m, &s, bad).is_err());
    let wrong = ResistivityModel::uniform([5, 4, 4], s.spacing_m, 10.0);
    assert!(ForwardSolver::new(&wrong, &s).is_err());
    let solver = ForwardSolver::new(&m, &s).unwrap();
    assert!(solver.solve_frequency(0.0).is_err());
    assert!(solver.run(&[]).is_err());
}
