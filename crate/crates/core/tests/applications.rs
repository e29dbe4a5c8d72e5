//! Spectral applications on dense-oracle spectra.

use std::sync::OnceLock;

use hsim::applications::{
    default_hks_times, eigen_difference_metrics, heat_kernel_distance, heat_kernel_signature, heat_trace, parse_correspondence,
    project_block, projection_error, similar_points, sphere_analytic_spectrum, spectral_projection, VectorComparison,
};
use hsim::baselines::dense_oracle;
use hsim::mesh::TriangleMesh;
use hsim::operators::LaplaceOperators;
use hsim::shapes;
use hsim::solver::EigenSolution;
use proptest::prelude::*;

struct Fixture {
    mesh: TriangleMesh,
    ops: LaplaceOperators,
    full: EigenSolution,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mesh = shapes::bumpy_ellipsoid(&shapes::icosphere(2, 1.0));
        let ops = LaplaceOperators::assemble(&mesh);
        let full = dense_oracle(&ops.stiffness, &ops.mass, mesh.vertex_count(), 5000).unwrap();
        Fixture { mesh, ops, full }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hks_is_nonnegative(log_t in -4.0..2.0f64, k in 2usize..162) {
        let f = fixture();
        let sol = f.full.truncated(k);
        let hks = heat_kernel_signature(&sol, &[10f64.powf(log_t)]).unwrap();
        prop_assert!(hks.col(0).iter().all(|&h| h >= 0.0));
    }

    #[test]
    fn heat_trace_identity(log_t in -3.0..1.0f64, k in 1usize..162) {
        let f = fixture();
        let sol = f.full.truncated(k);
        let t = 10f64.powf(log_t);
        let hks = heat_kernel_signature(&sol, &[t]).unwrap();
        let weighted: f64 = f.ops.mass.diagonal().iter().zip(hks.col(0).iter()).map(|(m, h)| m * h).sum();
        let trace = heat_trace(&sol.eigenvalues, t);
        prop_assert!((weighted - trace).abs() <= 1e-8 * trace.max(1.0), "{} vs {}", weighted, trace);
    }

    #[test]
    fn heat_kernel_distance_is_a_pseudometric(a in 0usize..162, b in 0usize..162, c in 0usize..162, log_t in -2.0..0.0f64) {
        let f = fixture();
        let sol = f.full.truncated(40);
        let t = 10f64.powf(log_t);
        let da = heat_kernel_distance(&sol, a, t).unwrap();
        let db = heat_kernel_distance(&sol, b, t).unwrap();
        prop_assert_eq!(da[a], 0.0);
        prop_assert!((da[b] - db[a]).abs() <= 1e-10);
        prop_assert!(da[c] <= da[b] + db[c] + 1e-10);
    }

    #[test]
    fn projection_is_idempotent(n in 1usize..162) {
        let f = fixture();
        let once = spectral_projection(&f.mesh, &f.full, &f.ops.mass, n).unwrap();
        let block = faer::Mat::from_fn(once.len(), 3, |v, c| once[v][c]);
        let twice = project_block(&f.full, &f.ops.mass, block.as_ref(), n).unwrap();
        for v in 0..once.len() {
            for c in 0..3 {
                prop_assert!((twice[(v, c)] - once[v][c]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn projection_error_decreases_to_zero() {
    let f = fixture();
    let n = f.mesh.vertex_count();
    let mut last = f64::INFINITY;
    for k in (1..=n).step_by(7).chain([n]) {
        let p = spectral_projection(&f.mesh, &f.full, &f.ops.mass, k).unwrap();
        let e = projection_error(&f.mesh, &f.ops.mass, &p);
        assert!(e <= last + 1e-12, "k {k}: {e} > {last}");
        last = e;
    }
    assert!(last < 1e-8, "{last}");
    assert!(spectral_projection(&f.mesh, &f.full.truncated(10), &f.ops.mass, 11).is_err());
}

#[test]
fn hks_times_span_the_spectrum() {
    let f = fixture();
    let times = default_hks_times(&f.full.eigenvalues, 5).unwrap();
    let c = 4.0 * std::f64::consts::LN_10;
    assert!((times[0] - c / f.full.eigenvalues.last().unwrap()).abs() < 1e-12 * times[0]);
    assert!((times[4] - c / f.full.eigenvalues[1]).abs() < 1e-12 * times[4]);
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    assert!(default_hks_times(&[0.0, 0.0], 3).is_err());
}

#[test]
fn sphere_multiplicities_follow_odd_group_sizes() {
    assert_eq!(sphere_analytic_spectrum(4), vec![0.0, 2.0, 2.0, 2.0]);
    assert_eq!(sphere_analytic_spectrum(9), vec![0.0, 2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0]);
    // Clusters in the numerical spectrum of a fine sphere: 1, 3, 5, 7, 9.
    let mesh = shapes::icosphere(5, 1.0);
    let ops = LaplaceOperators::assemble(&mesh);
    let config = hsim::solver::SolverConfig::new(36).with_tolerance(1e-6);
    let (sol, _) = hsim::solver::hsim_solve(&mesh, &ops.stiffness, &ops.mass, &config).unwrap();
    let mut groups = vec![1usize];
    for w in sol.eigenvalues.windows(2) {
        if w[1] - w[0] > 0.05 * w[1] {
            groups.push(1);
        } else {
            *groups.last_mut().unwrap() += 1;
        }
    }
    assert_eq!(&groups[..5], &[1, 3, 5, 7, 9], "{:?}", sol.eigenvalues);
}

#[test]
fn identical_meshes_have_zero_inter_mesh_difference() {
    let f = fixture();
    let sol = f.full.truncated(30);
    let identity: Vec<usize> = (0..f.mesh.vertex_count()).collect();
    let d = eigen_difference_metrics(&sol, &sol, 30, Some(VectorComparison { mass: &f.ops.mass, correspondence: Some(&identity) })).unwrap();
    assert!(d.value_diffs.iter().all(|&x| x == 0.0));
    assert!(d.vector_discrepancies.unwrap().iter().all(|&x| x < 1e-10));
}

#[test]
fn similar_points_picks_out_symmetric_tips() {
    let mesh = shapes::star(3);
    let ops = LaplaceOperators::assemble(&mesh);
    let sol = dense_oracle(&ops.stiffness, &ops.mass, 200, 5000).unwrap();
    let tips: Vec<usize> = shapes::star_arm_directions().iter().map(|&d| shapes::extreme_vertex(&mesh, d)).collect();
    let t = default_hks_times(&sol.eigenvalues, 2).unwrap()[0];
    let s = similar_points(&sol, &ops.mass, tips[0], t, 0.05).unwrap();
    assert!(s.labels[tips[0]]);
    assert!(s.distances.iter().all(|&d| d >= 0.0));
    let found = tips.iter().filter(|&&v| s.labels[v]).count();
    assert!(found >= 3, "{found} tips");
    // Most of the surface is not similar to a tip.
    assert!(s.labels.iter().filter(|&&l| l).count() < mesh.vertex_count() / 4);
}

#[test]
fn correspondence_files_are_validated() {
    assert_eq!(parse_correspondence("# map\n0\n2\n\n1\n", 3).unwrap(), vec![0, 2, 1]);
    assert!(parse_correspondence("0\n3\n", 3).is_err());
    assert!(parse_correspondence("0\nx\n", 3).is_err());
}
