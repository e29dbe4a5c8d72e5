//! Mesh validation, I/O round trips and operator invariants.

mod common;

use std::f64::consts::PI;

use common::rel_close;
use hsim::baselines::dense_oracle;
use hsim::matrix_market::{parse_symmetric, write_symmetric};
use hsim::mesh::{load_mesh, parse_obj, parse_off, write_off, EdgeGraph, MeshError, TriangleMesh};
use hsim::operators::{assemble_hamiltonian, CurvaturePotential, LaplaceOperators};
use hsim::shapes;
use proptest::prelude::*;

fn rotate(p: [f64; 3], axis: [f64; 3], angle: f64) -> [f64; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let k = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let kxp = [k[1] * p[2] - k[2] * p[1], k[2] * p[0] - k[0] * p[2], k[0] * p[1] - k[1] * p[0]];
    let kdp = k[0] * p[0] + k[1] * p[1] + k[2] * p[2];
    std::array::from_fn(|i| p[i] * c + kxp[i] * s + k[i] * kdp * (1.0 - c))
}

#[test]
fn equilateral_triangle_area() {
    let h = 3f64.sqrt() / 2.0;
    let m = TriangleMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]], vec![[0, 1, 2]]).unwrap();
    assert!(rel_close(m.surface_area(), 3f64.sqrt() / 4.0, 1e-14));
    assert!(m.has_boundary());
}

#[test]
fn icosphere_area_approaches_four_pi_from_below() {
    let areas: Vec<f64> = (1..=5).map(|s| shapes::icosphere(s, 1.0).surface_area()).collect();
    for w in areas.windows(2) {
        assert!(w[0] < w[1] && w[1] < 4.0 * PI);
    }
    assert!(4.0 * PI - areas[4] < 1e-2);
}

#[test]
fn malformed_files_are_rejected() {
    let bad_index = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 99\n";
    assert!(matches!(parse_off(bad_index), Err(MeshError::IndexOutOfRange { index: 99, .. })));
    let zero_edge = "OFF\n3 1 0\n0 0 0\n0 0 0\n0 1 0\n3 0 1 2\n";
    // Loads as a mesh, but cannot become a weighted edge graph.
    let degenerate = parse_off(zero_edge).unwrap();
    assert!(matches!(EdgeGraph::from_mesh(&degenerate), Err(MeshError::ZeroLengthEdge { a: 0, b: 1 })));
    assert!(matches!(parse_off("OFF\n3 1 0\n0 0 0\n"), Err(MeshError::Parse { .. })));
    assert!(matches!(parse_off("PLY\n"), Err(MeshError::Parse { .. })));
    // Two triangles meeting at a single vertex.
    let bowtie = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv -1 0 0\nv 0 -1 0\nf 1 2 3\nf 1 4 5\n";
    assert!(matches!(parse_obj(bowtie), Err(MeshError::NonManifoldVertex { vertex: 0, .. })));
    let split = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 5 0 0\nv 6 0 0\nv 5 1 0\nf 1 2 3\nf 4 5 6\n";
    assert!(matches!(parse_obj(split), Err(MeshError::Disconnected { .. })));
}

#[test]
fn obj_strips_texture_and_normal_indices() {
    let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf 1/1/1 2/1/1 3//1\n";
    let m = parse_obj(text).unwrap();
    assert_eq!(m.triangles(), &[[0, 1, 2]]);
}

#[test]
fn off_round_trip_through_a_file() {
    let mesh = shapes::torus(1.0, 0.4, 12, 6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("torus.off");
    write_off(&mesh, std::fs::File::create(&path).unwrap()).unwrap();
    let back = load_mesh(&path, None).unwrap();
    assert_eq!(back.triangles(), mesh.triangles());
    for (a, b) in back.positions().iter().zip(mesh.positions()) {
        assert_eq!(a, b);
    }
    let missing = dir.path().join("missing.off");
    let err = load_mesh(&missing, None).unwrap_err().to_string();
    assert!(err.contains("missing.off"), "{err}");
}

#[test]
fn edge_count_matches_unique_triangle_pairs() {
    let mesh = shapes::icosphere(3, 1.0);
    let mut pairs = std::collections::BTreeSet::new();
    for t in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let g = EdgeGraph::from_mesh(&mesh).unwrap();
    assert_eq!(g.edge_count(), pairs.len());
    // Closed genus-0 surface: V − E + F = 2.
    assert_eq!(mesh.vertex_count() + mesh.triangle_count() - pairs.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn area_is_invariant_under_rigid_motion(axis in prop::array::uniform3(-1.0..1.0f64), angle in -PI..PI, shift in prop::array::uniform3(-5.0..5.0f64)) {
        prop_assume!(axis.iter().map(|a| a * a).sum::<f64>() > 1e-3);
        let mesh = shapes::bumpy_ellipsoid(&shapes::icosphere(2, 1.0));
        let moved = mesh.map_positions(|p| {
            let r = rotate(p, axis, angle);
            [r[0] + shift[0], r[1] + shift[1], r[2] + shift[2]]
        });
        prop_assert!(rel_close(mesh.surface_area(), moved.surface_area(), 1e-10));
    }

    #[test]
    fn operators_scale_with_the_mesh(scale in 0.1..10.0f64) {
        let mesh = shapes::bumpy_ellipsoid(&shapes::icosphere(2, 1.0));
        let a = LaplaceOperators::assemble(&mesh);
        let b = LaplaceOperators::assemble(&mesh.map_positions(|p| [p[0] * scale, p[1] * scale, p[2] * scale]));
        for (x, y) in a.mass.diagonal().iter().zip(b.mass.diagonal()) {
            prop_assert!(rel_close(x * scale * scale, y, 1e-12));
        }
        for ((i, j, x), (_, _, y)) in a.stiffness.triplets().zip(b.stiffness.triplets()) {
            prop_assert!((x - y).abs() <= 1e-10 * a.stiffness.max_abs(), "({i},{j}) {x} vs {y}");
        }
    }
}

#[test]
fn laplace_operators_are_symmetric_psd_with_constant_kernel() {
    for mesh in [shapes::icosphere(3, 1.0), shapes::bumpy_ellipsoid(&shapes::cube_sphere(8, 2.0)), shapes::torus(1.0, 0.4, 24, 10)] {
        let ops = LaplaceOperators::assemble(&mesh);
        assert!(ops.stiffness.symmetry_error() <= 1e-12);
        assert!(ops.mass.is_diagonal());
        assert!(ops.mass.diagonal().iter().all(|&m| m > 0.0));
        assert!(rel_close(ops.mass.trace(), mesh.surface_area(), 1e-12));
        let max = ops.stiffness.max_abs();
        assert!(ops.stiffness.row_sums().iter().all(|s| s.abs() < 1e-10 * max));
        // Pattern: every mesh edge plus the diagonal.
        let g = EdgeGraph::from_mesh(&mesh).unwrap();
        assert_eq!(ops.stiffness.nnz(), 2 * g.edge_count() + mesh.vertex_count());

        let all = dense_oracle(&ops.stiffness, &ops.mass, mesh.vertex_count(), 5000).unwrap();
        let top = *all.eigenvalues.last().unwrap();
        assert!(all.eigenvalues[0] >= -1e-10 * top);
        assert!(all.eigenvalues[0] < 1e-8 * all.eigenvalues[1]);
    }
}

#[test]
fn hamiltonian_at_zero_is_the_stiffness_matrix() {
    let mesh = shapes::bumpy_ellipsoid(&shapes::icosphere(3, 1.0));
    let ops = LaplaceOperators::assemble(&mesh);
    let v = CurvaturePotential::of_mesh(&mesh, 0.0).unwrap();
    assert!(v.values.iter().all(|&x| x == 0.0));
    let h = assemble_hamiltonian(&ops.stiffness, &ops.mass, &v.values).unwrap();
    for ((_, _, a), (_, _, b)) in h.triplets().zip(ops.stiffness.triplets()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn constant_potential_shifts_the_spectrum() {
    let mesh = shapes::icosphere(3, 1.0);
    let ops = LaplaceOperators::assemble(&mesh);
    let c = 2.5;
    let h = assemble_hamiltonian(&ops.stiffness, &ops.mass, &vec![c; mesh.vertex_count()]).unwrap();
    let a = dense_oracle(&ops.stiffness, &ops.mass, 30, 5000).unwrap();
    let b = dense_oracle(&h, &ops.mass, 30, 5000).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x + c - y).abs() < 1e-9 * (1.0 + y), "{x} + {c} vs {y}");
    }
}

#[test]
fn curvature_potential_raises_every_eigenvalue() {
    let mesh = shapes::bumpy_ellipsoid(&shapes::icosphere(3, 1.0));
    let ops = LaplaceOperators::assemble(&mesh);
    let lap = dense_oracle(&ops.stiffness, &ops.mass, 60, 5000).unwrap();
    for t in [0.1, 1.0] {
        let v = CurvaturePotential::of_mesh(&mesh, t).unwrap();
        assert!(v.values.iter().all(|&x| x >= 0.0));
        let h = assemble_hamiltonian(&ops.stiffness, &ops.mass, &v.values).unwrap();
        let ham = dense_oracle(&h, &ops.mass, 60, 5000).unwrap();
        for (i, (a, b)) in lap.eigenvalues.iter().zip(&ham.eigenvalues).enumerate() {
            assert!(b >= &(a - 1e-10 * a.abs().max(1e-12)), "t {t} index {i}: {b} < {a}");
        }
    }
    assert!(CurvaturePotential::of_mesh(&mesh, -1.0).is_err());
}

#[test]
fn sphere_curvatures_are_close_to_one() {
    let mesh = shapes::icosphere(4, 1.0);
    let v = CurvaturePotential::of_mesh(&mesh, 1.0).unwrap();
    for (k1, k2) in v.kappa1.iter().zip(&v.kappa2) {
        assert!((k1 - 1.0).abs() < 0.05 && (k2 - 1.0).abs() < 0.05, "{k1} {k2}");
    }
}

#[test]
fn matrix_market_round_trip() {
    let mesh = shapes::icosphere(2, 1.0);
    let ops = LaplaceOperators::assemble(&mesh);
    let mut buf = Vec::new();
    write_symmetric(&ops.stiffness, &mut buf).unwrap();
    let back = parse_symmetric(std::str::from_utf8(&buf).unwrap()).unwrap();
    for ((i, j, a), (k, l, b)) in ops.stiffness.triplets().zip(back.triplets()) {
        assert_eq!((i, j, a.to_bits()), (k, l, b.to_bits()));
    }
}
