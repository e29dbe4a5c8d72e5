//! Procedural test surfaces: spheres, rounded cubes, tori, planar patches,
//! cylinders and a five-armed star. Used by the test suites and the
//! `generate` CLI command; every generator returns a validated mesh with
//! consistently (outward) oriented triangles.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::mesh::{MeshError, TriangleMesh, Vec3};

/// Icosahedron refined `subdivisions` times and projected to a sphere.
/// Vertex count is `10·4^s + 2` (12, 42, 162, 642, 2562, 10242, 40962, ...).
pub fn icosphere(subdivisions: u32, radius: f64) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut positions: Vec<Vec3> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for p in &mut positions {
        *p = normalize(*p);
    }
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        let mut mid = |a: usize, b: usize, positions: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let pa = positions[a];
                let pb = positions[b];
                positions.push(normalize([pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]]));
                positions.len() - 1
            })
        };
        for &[a, b, c] in &triangles {
            let ab = mid(a, b, &mut positions);
            let bc = mid(b, c, &mut positions);
            let ca = mid(c, a, &mut positions);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    let positions = positions.into_iter().map(|p| scale(p, radius)).collect();
    TriangleMesh::new(positions, triangles).expect("icosphere is a valid mesh")
}

/// Cube surface gridded with `segments` quads per edge, each quad split in
/// two, then pushed radially onto the superquadric `Σ|x_i|^exponent = 1`.
/// `exponent = 2` gives the unit sphere; larger exponents give increasingly
/// sharp rounded cubes. Vertex count is `6·segments² + 2`.
pub fn cube_sphere(segments: usize, exponent: f64) -> TriangleMesh {
    assert!(segments >= 1);
    let n = segments as i64;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut positions: Vec<Vec3> = Vec::new();
    let mut vertex = |g: [i64; 3], positions: &mut Vec<Vec3>| -> usize {
        *index.entry(g).or_insert_with(|| {
            // Equal-angle warp keeps cells closer to uniform after projection.
            let c = g.map(|k| (PI / 4.0 * (2.0 * k as f64 / n as f64 - 1.0)).tan());
            let d = normalize(c);
            let r = d.iter().map(|x| x.abs().powf(exponent)).sum::<f64>().powf(-1.0 / exponent);
            positions.push(scale(d, r));
            positions.len() - 1
        })
    };
    let mut triangles = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            let outward = side == n;
            for i in 0..n {
                for j in 0..n {
                    let corner = |di: i64, dj: i64| {
                        let mut g = [0i64; 3];
                        g[axis] = side;
                        g[u] = i + di;
                        g[v] = j + dj;
                        g
                    };
                    let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)].map(|g| vertex(g, &mut positions));
                    // Alternate the diagonal so the pattern has no preferred direction.
                    let (t0, t1) = if (i + j) % 2 == 0 {
                        ([q[0], q[1], q[2]], [q[0], q[2], q[3]])
                    } else {
                        ([q[0], q[1], q[3]], [q[1], q[2], q[3]])
                    };
                    if outward {
                        triangles.push(t0);
                        triangles.push(t1);
                    } else {
                        triangles.push([t0[0], t0[2], t0[1]]);
                        triangles.push([t1[0], t1[2], t1[1]]);
                    }
                }
            }
        }
    }
    TriangleMesh::new(positions, triangles).expect("cube sphere is a valid mesh")
}

/// Torus around the z axis with `major` and `minor` radii.
pub fn torus(major: f64, minor: f64, around: usize, tube: usize) -> TriangleMesh {
    assert!(around >= 3 && tube >= 3);
    let mut positions = Vec::with_capacity(around * tube);
    for i in 0..around {
        let u = 2.0 * PI * i as f64 / around as f64;
        for j in 0..tube {
            let v = 2.0 * PI * j as f64 / tube as f64;
            let r = major + minor * v.cos();
            positions.push([r * u.cos(), r * u.sin(), minor * v.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % around) * tube + (j % tube);
    let mut triangles = Vec::with_capacity(2 * around * tube);
    for i in 0..around {
        for j in 0..tube {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh::new(positions, triangles).expect("torus is a valid mesh")
}

/// Flat `nx × ny` vertex grid in the z = 0 plane with the given spacing,
/// lower-left corner at the origin.
pub fn planar_grid(nx: usize, ny: usize, spacing: f64) -> TriangleMesh {
    warped_grid(nx, ny, |x, y| [x * spacing * (nx - 1) as f64, y * spacing * (ny - 1) as f64, 0.0])
}

/// Grid over the unit square `[0,1]²` mapped through `f`.
pub fn warped_grid(nx: usize, ny: usize, f: impl Fn(f64, f64) -> Vec3) -> TriangleMesh {
    assert!(nx >= 2 && ny >= 2);
    let mut positions = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            positions.push(f(i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64));
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    TriangleMesh::new(positions, triangles).expect("grid is a valid mesh")
}

/// Open cylinder of the given radius around the z axis, `z ∈ [0, length]`.
pub fn cylinder(radius: f64, length: f64, around: usize, along: usize) -> TriangleMesh {
    assert!(around >= 3 && along >= 2);
    let mut positions = Vec::with_capacity(around * along);
    for j in 0..along {
        let z = length * j as f64 / (along - 1) as f64;
        for i in 0..around {
            let u = 2.0 * PI * i as f64 / around as f64;
            positions.push([radius * u.cos(), radius * u.sin(), z]);
        }
    }
    let id = |i: usize, j: usize| j * around + (i % around);
    let mut triangles = Vec::new();
    for j in 0..along - 1 {
        for i in 0..around {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh::new(positions, triangles).expect("cylinder is a valid mesh")
}

/// Pushes every vertex of a star-shaped (about the origin) mesh radially
/// to `radius(direction)`.
pub fn radial_map(mesh: &TriangleMesh, radius: impl Fn(Vec3) -> f64) -> TriangleMesh {
    mesh.map_positions(|p| {
        let d = normalize(p);
        scale(d, radius(d))
    })
}

/// Smooth, non-symmetric closed surface: an ellipsoid with low-frequency
/// bumps. Applied to different base triangulations it yields distinct
/// meshes of the same surface.
pub fn bumpy_ellipsoid(base: &TriangleMesh) -> TriangleMesh {
    let surface = radial_map(base, |d| 1.0 + 0.12 * (3.0 * d[0]).sin() * (2.0 * d[1]).cos() + 0.08 * (4.0 * d[2] + 0.5).sin());
    surface.map_positions(|p| [1.2 * p[0], p[1], 0.8 * p[2]])
}

/// Directions of the five arms of [`star`].
pub fn star_arm_directions() -> [Vec3; 5] {
    [
        normalize([1.0, 0.1, 0.2]),
        normalize([-0.3, 1.0, -0.1]),
        normalize([-0.8, -0.6, 0.3]),
        normalize([0.2, -0.5, -1.0]),
        normalize([0.1, 0.2, 1.0]),
    ]
}

/// A round body with five thin arms, built by radially displacing an
/// icosphere. Arm lengths differ slightly so no two tips are exactly
/// symmetric.
pub fn star(subdivisions: u32) -> TriangleMesh {
    let arms = star_arm_directions();
    let lengths = [1.0, 0.95, 1.05, 0.9, 1.1];
    let base = icosphere(subdivisions, 1.0);
    radial_map(&base, |d| {
        let mut r = 1.0;
        for (c, len) in arms.iter().zip(lengths) {
            let cos = d[0] * c[0] + d[1] * c[1] + d[2] * c[2];
            let width = 0.93;
            if cos > width {
                let s = (cos - width) / (1.0 - width);
                r += len * s.powf(0.8);
            }
        }
        r
    })
}

/// Index of the vertex farthest along `direction`.
pub fn extreme_vertex(mesh: &TriangleMesh, direction: Vec3) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (v, p) in mesh.positions().iter().enumerate() {
        let val = p[0] * direction[0] + p[1] * direction[1] + p[2] * direction[2];
        if val > best_val {
            best_val = val;
            best = v;
        }
    }
    best
}

/// Builds a mesh from raw arrays, for callers assembling their own shapes.
pub fn from_arrays(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<TriangleMesh, MeshError> {
    TriangleMesh::new(positions, triangles)
}

fn normalize(p: Vec3) -> Vec3 {
    let len = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    scale(p, 1.0 / len)
}

fn scale(p: Vec3, s: f64) -> Vec3 {
    [p[0] * s, p[1] * s, p[2] * s]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_combinatorics() {
        let m = icosphere(0, 1.0);
        assert_eq!(m.vertex_count(), 12);
        assert_eq!(m.triangle_count(), 20);
        assert_eq!(m.edges().len(), 30);
        assert!(!m.has_boundary());
        assert_eq!(icosphere(3, 1.0).vertex_count(), 642);
    }

    #[test]
    fn cube_sphere_counts() {
        for s in [1, 2, 5, 10] {
            let m = cube_sphere(s, 2.0);
            assert_eq!(m.vertex_count(), 6 * s * s + 2);
            assert!(!m.has_boundary());
        }
    }

    #[test]
    fn outward_orientation() {
        for m in [icosphere(2, 1.0), cube_sphere(6, 4.0), torus(2.0, 0.5, 24, 12)] {
            let normals = m.vertex_normals();
            let outward = m
                .positions()
                .iter()
                .zip(&normals)
                .filter(|(p, n)| {
                    let radial = if m.bounding_diagonal() > 5.0 {
                        // torus: radial direction away from the tube center
                        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                        [p[0] - 2.0 * p[0] / r, p[1] - 2.0 * p[1] / r, p[2]]
                    } else {
                        **p
                    };
                    radial[0] * n[0] + radial[1] * n[1] + radial[2] * n[2] > 0.0
                })
                .count();
            assert_eq!(outward, m.vertex_count());
        }
    }

    #[test]
    fn open_shapes_have_boundary() {
        assert!(planar_grid(4, 3, 1.0).has_boundary());
        assert!(cylinder(1.0, 2.0, 12, 5).has_boundary());
        assert!(!torus(2.0, 0.5, 10, 6).has_boundary());
    }
}
