use faer::Mat;
use rayon::prelude::*;

use super::{DistanceField, DistanceScheme, GeodesicError};
use crate::factor::Cholesky;
use crate::mesh::{cross, dot3, norm, scale, sub, TriangleMesh, Vec3};
use crate::sparse::SymmetricMatrix;

/// Right-hand sides solved together per factorization sweep.
const BATCH: usize = 32;

/// Heat-method geodesic distances. Both factorizations are built once and
/// shared by every source; a query always returns a global field.
pub struct HeatMethod {
    triangles: Vec<[usize; 3]>,
    /// Per triangle, `area · ∇φ_k` for the three hat functions.
    weighted_gradients: Vec<[Vec3; 3]>,
    /// `1 / area` per triangle, zero for degenerate ones.
    inverse_areas: Vec<f64>,
    heat: Cholesky,
    poisson: Cholesky,
    vertex_count: usize,
    tau: f64,
    tau_scale: f64,
}

impl std::fmt::Debug for HeatMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatMethod").field("vertex_count", &self.vertex_count).field("tau", &self.tau).finish()
    }
}

impl HeatMethod {
    /// Factors `M + τS` with `τ = tau_scale · h²` (`h` the mean edge length)
    /// and the Poisson operator `S + εM`, where the tiny `ε` only removes
    /// the constant null space of `S`.
    pub fn new(mesh: &TriangleMesh, stiffness: &SymmetricMatrix, mass: &SymmetricMatrix, tau_scale: f64) -> Result<Self, GeodesicError> {
        if !(tau_scale > 0.0) || !tau_scale.is_finite() {
            return Err(GeodesicError::InvalidTimeScale(tau_scale));
        }
        let h = mesh.mean_edge_length();
        let tau = tau_scale * h * h;
        let heat_op = mass.combine(1.0, stiffness, tau)?;
        let eps = 1e-10 * stiffness.trace() / mass.trace();
        let poisson_op = stiffness.combine(1.0, mass, eps)?;
        let heat = Cholesky::new(&heat_op).map_err(|e| GeodesicError::Factorization(e.to_string()))?;
        let poisson = Cholesky::new(&poisson_op).map_err(|e| GeodesicError::Factorization(e.to_string()))?;

        let mut weighted_gradients = Vec::with_capacity(mesh.triangle_count());
        let mut inverse_areas = Vec::with_capacity(mesh.triangle_count());
        for tri in mesh.triangles() {
            let p = tri.map(|i| mesh.position(i));
            let n = cross(sub(p[1], p[0]), sub(p[2], p[0]));
            let twice_area = norm(n);
            if twice_area <= 0.0 {
                weighted_gradients.push([[0.0; 3]; 3]);
                inverse_areas.push(0.0);
                continue;
            }
            let unit = scale(n, 1.0 / twice_area);
            // area · ∇φ_k = ½ N × e_k, with e_k the edge opposite corner k.
            let g = [0, 1, 2].map(|k| scale(cross(unit, sub(p[(k + 2) % 3], p[(k + 1) % 3])), 0.5));
            weighted_gradients.push(g);
            inverse_areas.push(2.0 / twice_area);
        }
        Ok(Self {
            triangles: mesh.triangles().to_vec(),
            weighted_gradients,
            inverse_areas,
            heat,
            poisson,
            vertex_count: mesh.vertex_count(),
            tau,
            tau_scale,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn scheme(&self) -> DistanceScheme {
        DistanceScheme::Heat { tau_scale: self.tau_scale }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Right-hand side of the Poisson step for one heat column: the
    /// integrated divergence of the normalized, reversed heat gradient.
    fn divergence(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.inverse_areas[t] == 0.0 {
                continue;
            }
            let g = &self.weighted_gradients[t];
            let mut grad = [0.0; 3];
            for k in 0..3 {
                for c in 0..3 {
                    grad[c] += u[tri[k]] * g[k][c];
                }
            }
            let len = norm(grad);
            if !(len > 0.0) {
                continue;
            }
            let x = scale(grad, -1.0 / len);
            // ∫ ∇φ_k · X over the triangle = (area ∇φ_k) · X.
            for k in 0..3 {
                out[tri[k]] += dot3(g[k], x);
            }
        }
    }

    /// Distance columns for a batch of sources (`vertex_count × sources`).
    pub fn distance_block(&self, sources: &[usize]) -> Result<Mat<f64>, GeodesicError> {
        for &s in sources {
            if s >= self.vertex_count {
                return Err(GeodesicError::VertexOutOfRange { vertex: s, vertex_count: self.vertex_count });
            }
        }
        let n = self.vertex_count;
        let mut out = Mat::<f64>::zeros(n, sources.len());
        for (chunk_index, chunk) in sources.chunks(BATCH).enumerate() {
            let mut u = Mat::<f64>::zeros(n, chunk.len());
            for (j, &s) in chunk.iter().enumerate() {
                u[(s, j)] = 1.0;
            }
            self.heat.solve_in_place(u.as_mut());
            let cols: Vec<Vec<f64>> = (0..chunk.len())
                .into_par_iter()
                .map(|j| {
                    let col: Vec<f64> = u.col(j).iter().copied().collect();
                    let mut rhs = vec![0.0; n];
                    self.divergence(&col, &mut rhs);
                    rhs
                })
                .collect();
            let mut phi = Mat::from_fn(n, chunk.len(), |i, j| cols[j][i]);
            self.poisson.solve_in_place(phi.as_mut());
            for (j, &s) in chunk.iter().enumerate() {
                let base = phi[(s, j)];
                let target = chunk_index * BATCH + j;
                for i in 0..n {
                    // Heat distances can dip slightly below the source value
                    // right next to it; distances are clamped at zero.
                    out[(i, target)] = (phi[(i, j)] - base).max(0.0);
                }
            }
        }
        Ok(out)
    }

    pub fn distance_field(&self, source: usize) -> Result<DistanceField, GeodesicError> {
        let block = self.distance_block(&[source])?;
        Ok(DistanceField { source, values: block.col(0).iter().copied().collect(), scheme: self.scheme() })
    }
}
