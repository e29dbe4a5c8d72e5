//! Prolongation, solver and baseline invariants on small meshes, with the
//! dense generalized eigensolver as the oracle.

mod common;

use faer::Mat;
use hsim::baselines::{block_pcg_eigensolver, coarse_one_shot, dense_oracle, BpcgOptions};
use hsim::basis::{construct_prolongation, galerkin_project, BasisParams, DistanceEngine};
use hsim::dense::{max_principal_angle, orthonormality_error};
use hsim::factor::Cholesky;
use hsim::geodesics::{dijkstra_all, DistanceScheme, HeatMethod};
use hsim::mesh::{EdgeGraph, TriangleMesh};
use hsim::operators::LaplaceOperators;
use hsim::sampling::{build_hierarchy, farthest_point_ordering, HierarchyParams};
use hsim::shapes;
use hsim::solver::{hsim_solve, subspace_iteration_step, SolverConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_params() -> HierarchyParams {
    HierarchyParams { coarse_factor: 8.0, floor: 50, coarse_cap: 3000, max_ratio: 4.0 }
}

fn test_meshes() -> Vec<(&'static str, TriangleMesh)> {
    vec![
        ("icosphere", shapes::icosphere(4, 1.0)),
        ("bumpy", shapes::bumpy_ellipsoid(&shapes::cube_sphere(16, 2.0))),
        ("torus", shapes::torus(1.0, 0.35, 60, 20)),
        ("star", shapes::star(3)),
        ("open grid", shapes::warped_grid(30, 30, |x, y| [x, y, 0.2 * (3.0 * x).sin() * y])),
    ]
}

#[test]
fn prolongations_are_local_partitions_of_unity() {
    for (name, mesh) in test_meshes() {
        let g = EdgeGraph::from_mesh(&mesh).unwrap();
        let h = build_hierarchy(&g, 10, &small_params(), 0).unwrap();
        for scheme in [DistanceScheme::Dijkstra, DistanceScheme::Stvd { window: 4 }] {
            let engine = DistanceEngine::new(scheme, &mesh, &g, None).unwrap();
            for l in 0..h.level_count() - 1 {
                let (coarse, fine) = (&h.levels[l], &h.levels[l + 1]);
                let u = construct_prolongation(&engine, coarse, h.radii[l], fine, &BasisParams::default()).unwrap();
                for i in 0..u.matrix.nrows() {
                    let (cols, vals) = u.matrix.row(i);
                    assert!(!cols.is_empty(), "{name}: empty row {i}");
                    assert!(vals.iter().all(|&v| (0.0..=1.0).contains(&v)));
                    assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-10, "{name}: row {i}");
                }
                // Constant reproduction.
                let ones = u.matrix.apply(&vec![1.0; coarse.len()]);
                assert!(ones.iter().all(|&v| (v - 1.0).abs() < 1e-10));
                if u.uncovered == 0 && scheme == DistanceScheme::Dijkstra {
                    // Column j vanishes outside the support ball around sample j.
                    let t = u.matrix.transpose();
                    for (j, &c) in coarse.iter().enumerate().step_by(7) {
                        let d = dijkstra_all(&g, c).unwrap();
                        let (rows, _) = t.row(j);
                        assert!(rows.iter().all(|&i| d.values[fine[i]] < u.support_radius), "{name}: column {j}");
                    }
                }
            }
        }
    }
}

#[test]
fn galerkin_identities_and_upper_bounds() {
    let mesh = shapes::icosphere(2, 1.0);
    let ops = LaplaceOperators::assemble(&mesh);
    let n = mesh.vertex_count();
    let (s, m) = galerkin_project(&ops.stiffness, &ops.mass, &hsim::sparse::CsrMatrix::identity(n)).unwrap();
    for ((_, _, a), (_, _, b)) in s.triplets().zip(ops.stiffness.triplets()) {
        assert!((a - b).abs() < 1e-14);
    }
    assert!((m.trace() - ops.mass.trace()).abs() < 1e-12);
    let ones = hsim::sparse::CsrMatrix::from_triplets(n, 1, &(0..n).map(|i| (i, 0, 1.0)).collect::<Vec<_>>()).unwrap();
    let (s1, m1) = galerkin_project(&ops.stiffness, &ops.mass, &ones).unwrap();
    assert!(s1.get(0, 0).abs() < 1e-12);
    assert!((m1.get(0, 0) - mesh.surface_area()).abs() < 1e-12);

    // Courant–Fischer: coarse Galerkin eigenvalues bound the fine ones.
    let mesh = shapes::bumpy_ellipsoid(&shapes::icosphere(3, 1.0));
    let ops = LaplaceOperators::assemble(&mesh);
    let g = EdgeGraph::from_mesh(&mesh).unwrap();
    let ord = farthest_point_ordering(&g, 120, 0).unwrap();
    let fine: Vec<usize> = (0..mesh.vertex_count()).collect();
    let engine = DistanceEngine::graph(&g, 1);
    let u = construct_prolongation(&engine, &ord.order, ord.radii[119], &fine, &BasisParams::default()).unwrap();
    let (sc, mc) = galerkin_project(&ops.stiffness, &ops.mass, &u.matrix).unwrap();
    let coarse = dense_oracle(&sc, &mc, 120, 5000).unwrap();
    let exact = dense_oracle(&ops.stiffness, &ops.mass, 120, 5000).unwrap();
    for (i, (c, f)) in coarse.eigenvalues.iter().zip(&exact.eigenvalues).enumerate().skip(1) {
        assert!(c >= &(f * (1.0 - 1e-10)), "index {i}: {c} < {f}");
    }
}

#[test]
fn heat_distances_approximate_euclidean_and_great_circle() {
    let grid = shapes::planar_grid(41, 41, 0.025);
    let ops = LaplaceOperators::assemble(&grid);
    let heat = HeatMethod::new(&grid, &ops.stiffness, &ops.mass, 1.0).unwrap();
    let center = 20 * 41 + 20;
    let d = heat.distance_field(center).unwrap();
    assert_eq!(d.values[center], 0.0);
    let c = grid.position(center);
    for v in 0..grid.vertex_count() {
        let p = grid.position(v);
        let e = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        assert!(d.values[v] >= 0.0);
        if e >= 3.0 * 0.025 {
            assert!((d.values[v] - e).abs() <= 0.05 * e, "vertex {v}: {} vs {e}", d.values[v]);
        }
    }

    let mut errors = Vec::new();
    for sub in [3, 4, 5] {
        let sphere = shapes::icosphere(sub, 1.0);
        let ops = LaplaceOperators::assemble(&sphere);
        let heat = HeatMethod::new(&sphere, &ops.stiffness, &ops.mass, 1.0).unwrap();
        let src = 0;
        let far = shapes::extreme_vertex(&sphere, sphere.position(src).map(|x| -x));
        let d = heat.distance_field(src).unwrap();
        errors.push((d.values[far] - std::f64::consts::PI).abs() / std::f64::consts::PI);
    }
    assert!(errors[2] < 0.05, "{errors:?}");
    assert!(errors[2] < errors[0], "{errors:?}");
}

#[test]
fn hsim_matches_the_dense_oracle_and_is_m_orthonormal() {
    for (name, mesh) in test_meshes() {
        let ops = LaplaceOperators::assemble(&mesh);
        let mut config = SolverConfig::new(20).with_tolerance(1e-6);
        config.hierarchy = small_params();
        let (sol, log) = hsim_solve(&mesh, &ops.stiffness, &ops.mass, &config).unwrap();
        assert!(log.level_sizes.len() >= 2, "{name}");
        assert_eq!(log.level_iterations.len(), log.level_sizes.len() - 1);
        assert!(log.level_iterations.iter().all(|&c| c <= config.max_iters_per_level));
        assert_eq!(log.to_string().matches('|').count(), log.level_sizes.len() - 1);
        assert!(orthonormality_error(sol.eigenvectors.as_ref(), &ops.mass) < 1e-8, "{name}");
        assert!(sol.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        if !mesh.has_boundary() {
            assert!(sol.eigenvalues[0] < 1e-8 * sol.eigenvalues[1], "{name}");
        }
        let oracle = dense_oracle(&ops.stiffness, &ops.mass, 20, 5000).unwrap();
        for (i, (a, b)) in sol.eigenvalues.iter().zip(&oracle.eigenvalues).enumerate().skip(1) {
            assert!((a - b).abs() <= 1e-4 * b, "{name} index {i}: {a} vs {b}");
        }

        // Ritz values never increase within a level.
        for level in &log.ritz_history {
            for w in level.windows(2) {
                for (a, b) in w[0].iter().zip(&w[1]) {
                    assert!(b <= &(a + 1e-12 * a.abs().max(1.0)), "{name}: {b} > {a}");
                }
            }
        }
    }
}

#[test]
fn identical_inputs_give_identical_logs() {
    let mesh = shapes::bumpy_ellipsoid(&shapes::cube_sphere(14, 2.0));
    let ops = LaplaceOperators::assemble(&mesh);
    let mut config = SolverConfig::new(15).with_tolerance(1e-4);
    config.hierarchy = small_params();
    let (a, la) = hsim_solve(&mesh, &ops.stiffness, &ops.mass, &config).unwrap();
    let (b, lb) = hsim_solve(&mesh, &ops.stiffness, &ops.mass, &config).unwrap();
    assert_eq!(la.level_iterations, lb.level_iterations);
    assert_eq!(la.level_sizes, lb.level_sizes);
    assert!(a.eigenvalues.iter().zip(&b.eigenvalues).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn tighter_tolerance_gives_smaller_residuals() {
    let mesh = shapes::bumpy_ellipsoid(&shapes::cube_sphere(24, 2.0));
    let ops = LaplaceOperators::assemble(&mesh);
    let loose = hsim_solve(&mesh, &ops.stiffness, &ops.mass, &SolverConfig::new(30).with_tolerance(1e-2)).unwrap().0;
    let tight = hsim_solve(&mesh, &ops.stiffness, &ops.mass, &SolverConfig::new(30).with_tolerance(1e-4)).unwrap().0;
    assert!(tight.median_residual() * 10.0 <= loose.median_residual(), "{} vs {}", tight.median_residual(), loose.median_residual());
    let worse = tight.residuals.iter().zip(&loose.residuals).filter(|(t, l)| t > l).count();
    assert_eq!(worse, 0, "tight {:?}\nloose {:?}", tight.residuals, loose.residuals);
}

#[test]
fn an_invariant_subspace_stays_invariant() {
    let mesh = shapes::bumpy_ellipsoid(&shapes::icosphere(3, 1.0));
    let ops = LaplaceOperators::assemble(&mesh);
    let exact = dense_oracle(&ops.stiffness, &ops.mass, 12, 5000).unwrap();
    let sigma = 1e-8 * ops.stiffness.trace() / mesh.vertex_count() as f64;
    let shifted = ops.stiffness.combine(1.0, &ops.mass, sigma).unwrap();
    let factor = Cholesky::new(&shifted).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let next = subspace_iteration_step(&factor, &ops.mass, exact.eigenvectors.as_ref(), &mut rng);
    assert_eq!(next.replaced, 0);
    let angle = max_principal_angle(exact.eigenvectors.as_ref(), next.block.as_ref(), &ops.mass);
    assert!(angle < 1e-7, "{angle}");
}

#[test]
fn baselines_are_m_orthonormal_and_bounded_by_the_oracle() {
    let mesh = shapes::bumpy_ellipsoid(&shapes::cube_sphere(18, 2.0));
    let ops = LaplaceOperators::assemble(&mesh);
    let k = 20;
    let oracle = dense_oracle(&ops.stiffness, &ops.mass, k, 5000).unwrap();
    assert!(oracle.residuals.iter().all(|&r| r < 1e-10));
    assert!(orthonormality_error(oracle.eigenvectors.as_ref(), &ops.mass) < 1e-8);

    let mut config = SolverConfig::new(k);
    config.hierarchy = small_params();
    let coarse = coarse_one_shot(&mesh, &ops.stiffness, &ops.mass, &config, None).unwrap();
    assert!(orthonormality_error(coarse.eigenvectors.as_ref(), &ops.mass) < 1e-8);
    for (c, o) in coarse.eigenvalues.iter().zip(&oracle.eigenvalues).skip(1) {
        assert!(c >= &(o * (1.0 - 1e-10)));
    }

    let options = BpcgOptions { tolerance: 1e-6, ..Default::default() };
    let (bpcg, report) = block_pcg_eigensolver(&ops.stiffness, &ops.mass, k, None, &options).unwrap();
    assert!(bpcg.converged && report.converged_pairs >= k && !report.timed_out);
    assert!(orthonormality_error(bpcg.eigenvectors.as_ref(), &ops.mass) < 1e-8);
    for (b, o) in bpcg.eigenvalues.iter().zip(&oracle.eigenvalues).skip(1) {
        assert!((b - o).abs() <= 1e-6 * o, "{b} vs {o}");
    }
    let init = Mat::from_fn(mesh.vertex_count(), k, |i, j| oracle.eigenvectors[(i, j)]);
    let (_, warm) = block_pcg_eigensolver(&ops.stiffness, &ops.mass, k, Some(&init), &options).unwrap();
    assert!(warm.iterations <= 2, "{}", warm.iterations);
}
