//! Discrete Laplace–Beltrami pair (stiffness `S`, lumped mass `M`),
//! principal curvature estimates, and the Hamiltonian `S + M·diag(V)`.
//!
//! Sign convention: `S` is positive semidefinite, so the generalized problem
//! `S φ = λ M φ` has nonnegative eigenvalues approximating those of `-Δ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::mesh::{cross, dot3, norm, sub, TriangleMesh, Vec3};
use crate::sparse::{CsrMatrix, SparseError, SymmetricMatrix};

/// Cotangents are clamped to this magnitude on degenerate triangles.
pub const COT_CLAMP: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("potential value {value} at vertex {vertex} is negative or not finite")]
    InvalidPotential { vertex: usize, value: f64 },
    #[error("potential scale t = {0} must be finite and nonnegative")]
    InvalidScale(f64),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Cotangents of the three interior angles, `cots[k]` at corner `k`.
fn corner_cotangents(p: [Vec3; 3]) -> [f64; 3] {
    let mut cots = [0.0; 3];
    for k in 0..3 {
        let a = sub(p[(k + 1) % 3], p[k]);
        let b = sub(p[(k + 2) % 3], p[k]);
        let sin = norm(cross(a, b));
        let cos = dot3(a, b);
        cots[k] = if sin > 0.0 {
            (cos / sin).clamp(-COT_CLAMP, COT_CLAMP)
        } else if cos >= 0.0 {
            COT_CLAMP
        } else {
            -COT_CLAMP
        };
    }
    cots
}

fn corner_angles(p: [Vec3; 3]) -> [f64; 3] {
    let mut angles = [0.0; 3];
    for k in 0..3 {
        let a = sub(p[(k + 1) % 3], p[k]);
        let b = sub(p[(k + 2) % 3], p[k]);
        angles[k] = norm(cross(a, b)).atan2(dot3(a, b));
    }
    angles
}

/// Cotangent stiffness matrix: `S_ij = -½(cot α_ij + cot β_ij)` for each
/// edge, diagonal equal to minus the off-diagonal row sum.
pub fn cotan_stiffness(mesh: &TriangleMesh) -> SymmetricMatrix {
    let positions = mesh.positions();
    let per_triangle: Vec<[f64; 3]> = mesh
        .triangles()
        .par_iter()
        .map(|t| corner_cotangents(t.map(|i| positions[i])))
        .collect();
    let mut triplets = Vec::with_capacity(mesh.triangle_count() * 12);
    for (t, cots) in mesh.triangles().iter().zip(&per_triangle) {
        for k in 0..3 {
            // Corner k is opposite edge (k+1, k+2).
            let i = t[(k + 1) % 3];
            let j = t[(k + 2) % 3];
            let w = 0.5 * cots[k];
            triplets.push((i, j, -w));
            triplets.push((j, i, -w));
            triplets.push((i, i, w));
            triplets.push((j, j, w));
        }
    }
    let n = mesh.vertex_count();
    let csr = CsrMatrix::from_triplets(n, n, &triplets).expect("mesh indices are validated");
    SymmetricMatrix::new(csr).expect("cotan assembly is symmetric by construction")
}

/// Barycentric lumped mass: each triangle gives a third of its area to each
/// corner. Zero-area triangles contribute nothing.
pub fn lumped_mass(mesh: &TriangleMesh) -> SymmetricMatrix {
    let mut diag = vec![0.0; mesh.vertex_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let share = mesh.triangle_area(t) / 3.0;
        for &v in tri {
            diag[v] += share;
        }
    }
    SymmetricMatrix::from_diagonal(&diag)
}

/// Stiffness and mass of one mesh.
#[derive(Debug, Clone)]
pub struct LaplaceOperators {
    pub stiffness: SymmetricMatrix,
    pub mass: SymmetricMatrix,
}

impl LaplaceOperators {
    pub fn assemble(mesh: &TriangleMesh) -> Self {
        Self { stiffness: cotan_stiffness(mesh), mass: lumped_mass(mesh) }
    }
}

/// Mixed Voronoi areas: Voronoi regions for non-obtuse triangles, and the
/// half/quarter split for obtuse ones.
pub fn mixed_areas(mesh: &TriangleMesh) -> Vec<f64> {
    let mut areas = vec![0.0; mesh.vertex_count()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|i| mesh.position(i));
        let area = mesh.triangle_area(t);
        if area == 0.0 {
            continue;
        }
        let angles = corner_angles(p);
        let obtuse = angles.iter().position(|&a| a > PI / 2.0);
        match obtuse {
            None => {
                let cots = corner_cotangents(p);
                for k in 0..3 {
                    let (j, l) = ((k + 1) % 3, (k + 2) % 3);
                    let e_j = sub(p[j], p[k]);
                    let e_l = sub(p[l], p[k]);
                    areas[tri[k]] += (dot3(e_j, e_j) * cots[l] + dot3(e_l, e_l) * cots[j]) / 8.0;
                }
            }
            Some(o) => {
                for k in 0..3 {
                    areas[tri[k]] += if k == o { area / 2.0 } else { area / 4.0 };
                }
            }
        }
    }
    areas
}

/// Per-vertex principal curvatures (`kappa1 ≥ kappa2`).
#[derive(Debug, Clone)]
pub struct PrincipalCurvatures {
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
}

/// Principal curvatures from the mean curvature normal `S·P / A_mixed`
/// (signed against the vertex normal) and the angle-defect Gaussian
/// curvature. Boundary vertices take the average of their interior
/// neighbors.
pub fn principal_curvatures(mesh: &TriangleMesh) -> PrincipalCurvatures {
    let n = mesh.vertex_count();
    let stiffness = cotan_stiffness(mesh);
    let areas = mixed_areas(mesh);
    let normals = mesh.vertex_normals();

    let mut angle_sum = vec![0.0; n];
    for tri in mesh.triangles() {
        let angles = corner_angles(tri.map(|i| mesh.position(i)));
        for k in 0..3 {
            angle_sum[tri[k]] += angles[k];
        }
    }

    let coords: Vec<Vec<f64>> = (0..3).map(|c| mesh.positions().iter().map(|p| p[c]).collect()).collect();
    let lap: Vec<Vec<f64>> = coords.iter().map(|x| stiffness.apply(x)).collect();

    let mut kappa1 = vec![0.0; n];
    let mut kappa2 = vec![0.0; n];
    for v in 0..n {
        if mesh.is_boundary_vertex(v) || areas[v] <= 0.0 {
            continue;
        }
        let hn = [lap[0][v], lap[1][v], lap[2][v]];
        let sign = if dot3(hn, normals[v]) < 0.0 { -1.0 } else { 1.0 };
        let mean = sign * norm(hn) / (2.0 * areas[v]);
        // Snap roundoff-level angle defects to zero; the square root below
        // would otherwise turn 1e-15 into 1e-7 on flat regions.
        let defect = 2.0 * PI - angle_sum[v];
        let defect = if defect.abs() < 64.0 * f64::EPSILON * 2.0 * PI { 0.0 } else { defect };
        let gauss = defect / areas[v];
        let spread = (mean * mean - gauss).max(0.0).sqrt();
        kappa1[v] = mean + spread;
        kappa2[v] = mean - spread;
    }

    if mesh.has_boundary() {
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (a, b) in mesh.edges() {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for v in (0..n).filter(|&v| mesh.is_boundary_vertex(v)) {
            let interior: Vec<usize> = neighbors[v].iter().copied().filter(|&w| !mesh.is_boundary_vertex(w)).collect();
            if !interior.is_empty() {
                let k = interior.len() as f64;
                kappa1[v] = interior.iter().map(|&w| kappa1[w]).sum::<f64>() / k;
                kappa2[v] = interior.iter().map(|&w| kappa2[w]).sum::<f64>() / k;
            }
        }
    }
    PrincipalCurvatures { kappa1, kappa2 }
}

/// Potential `V = t(κ₁² + κ₂²)` together with the curvatures it came from.
#[derive(Debug, Clone)]
pub struct CurvaturePotential {
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub t: f64,
    pub values: Vec<f64>,
}

impl CurvaturePotential {
    pub fn from_curvatures(curvatures: PrincipalCurvatures, t: f64) -> Result<Self, OperatorError> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(OperatorError::InvalidScale(t));
        }
        let values = curvatures
            .kappa1
            .iter()
            .zip(&curvatures.kappa2)
            .map(|(a, b)| if t == 0.0 { 0.0 } else { t * (a * a + b * b) })
            .collect();
        Ok(Self { kappa1: curvatures.kappa1, kappa2: curvatures.kappa2, t, values })
    }

    pub fn of_mesh(mesh: &TriangleMesh, t: f64) -> Result<Self, OperatorError> {
        Self::from_curvatures(principal_curvatures(mesh), t)
    }
}

/// `H = S + ½(M·diag(V) + diag(V)·M)`; for the lumped mass this is
/// `S + diag(m_i V_i)`.
pub fn assemble_hamiltonian(
    stiffness: &SymmetricMatrix,
    mass: &SymmetricMatrix,
    potential: &[f64],
) -> Result<SymmetricMatrix, OperatorError> {
    let n = stiffness.dim();
    if mass.dim() != n || potential.len() != n {
        return Err(OperatorError::DimensionMismatch(format!(
            "S is {n}x{n}, M is {0}x{0}, V has {1} values",
            mass.dim(),
            potential.len()
        )));
    }
    if let Some((vertex, &value)) = potential.iter().enumerate().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
        return Err(OperatorError::InvalidPotential { vertex, value });
    }
    let weighted: Vec<(usize, usize, f64)> = mass
        .triplets()
        .map(|(i, j, m)| (i, j, 0.5 * m * (potential[i] + potential[j])))
        .collect();
    let term = CsrMatrix::from_triplets(n, n, &weighted)?;
    let sum = stiffness.as_csr().linear_combination(1.0, &term, 1.0)?;
    Ok(SymmetricMatrix::new(sum)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn equilateral() -> TriangleMesh {
        let h = 3f64.sqrt() / 2.0;
        TriangleMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn single_triangle_stiffness() {
        let s = cotan_stiffness(&equilateral());
        let off = -1.0 / (2.0 * 3f64.sqrt());
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { -2.0 * off } else { off };
                assert!((s.get(i, j) - expected).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn single_triangle_mass() {
        let m = lumped_mass(&equilateral());
        for v in m.diagonal() {
            assert!((v - 3f64.sqrt() / 12.0).abs() < 1e-16);
        }
    }

    #[test]
    fn closed_mesh_row_sums_vanish() {
        let mesh = shapes::icosphere(3, 1.0);
        let s = cotan_stiffness(&mesh);
        let worst = s.row_sums().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-10 * s.max_abs());
    }

    #[test]
    fn mass_trace_is_area() {
        let mesh = shapes::torus(2.0, 0.7, 20, 11);
        let m = lumped_mass(&mesh);
        let area = mesh.surface_area();
        assert!((m.trace() - area).abs() < 1e-12 * area);
    }

    #[test]
    fn mixed_areas_partition_area() {
        for mesh in [shapes::icosphere(2, 1.0), shapes::cube_sphere(5, 3.0)] {
            let total: f64 = mixed_areas(&mesh).iter().sum();
            assert!((total - mesh.surface_area()).abs() < 1e-10 * total);
        }
    }

    #[test]
    fn degenerate_triangle_is_clamped() {
        // Collinear vertices: zero area, huge cotangents.
        let mesh = TriangleMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        let s = cotan_stiffness(&mesh);
        assert!(s.values().iter().all(|v| v.is_finite() && v.abs() <= COT_CLAMP));
        assert_eq!(lumped_mass(&mesh).trace(), 0.0);
    }

    #[test]
    fn flat_grid_has_zero_curvature() {
        let mesh = shapes::planar_grid(9, 7, 0.3);
        let c = principal_curvatures(&mesh);
        for v in (0..mesh.vertex_count()).filter(|&v| !mesh.is_boundary_vertex(v)) {
            assert!(c.kappa1[v].abs() < 1e-8 && c.kappa2[v].abs() < 1e-8, "{} {}", c.kappa1[v], c.kappa2[v]);
        }
    }

    #[test]
    fn zero_scale_potential_vanishes() {
        let mesh = shapes::icosphere(2, 1.0);
        let pot = CurvaturePotential::of_mesh(&mesh, 0.0).unwrap();
        assert!(pot.values.iter().all(|&v| v == 0.0));
        assert!(CurvaturePotential::of_mesh(&mesh, -1.0).is_err());
    }

    #[test]
    fn hamiltonian_rejects_bad_input() {
        let mesh = shapes::icosphere(1, 1.0);
        let ops = LaplaceOperators::assemble(&mesh);
        let n = mesh.vertex_count();
        assert!(matches!(
            assemble_hamiltonian(&ops.stiffness, &ops.mass, &vec![0.0; n - 1]),
            Err(OperatorError::DimensionMismatch(_))
        ));
        let mut v = vec![0.0; n];
        v[3] = -1.0;
        assert!(matches!(
            assemble_hamiltonian(&ops.stiffness, &ops.mass, &v),
            Err(OperatorError::InvalidPotential { vertex: 3, .. })
        ));
    }

    #[test]
    fn hamiltonian_with_zero_potential_is_stiffness() {
        let mesh = shapes::cube_sphere(4, 4.0);
        let ops = LaplaceOperators::assemble(&mesh);
        let h = assemble_hamiltonian(&ops.stiffness, &ops.mass, &vec![0.0; mesh.vertex_count()]).unwrap();
        for (i, j, v) in ops.stiffness.triplets() {
            assert_eq!(h.get(i, j), v);
        }
    }
}
