//! Locally supported prolongation operators between hierarchy levels.
//!
//! Coarse sample `j` owns a basis function `(1 − d_j/r)^e` of the distance
//! `d_j` to it, truncated at radius `r`. Rows are normalized so the basis
//! is a partition of unity, which makes constants exactly representable on
//! every level.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesics::{nearest_source, DistanceScheme, GeodesicError, HeatMethod, Propagation, Stop};
use crate::mesh::{EdgeGraph, TriangleMesh};
use crate::sparse::{CsrMatrix, SparseError, SymmetricMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("coarse sample set is empty")]
    EmptyCoarseSet,
    #[error("coarse sample {0} is not part of the fine level")]
    NotNested(usize),
    #[error("radius factor {0} must be at least 1")]
    InvalidRadiusFactor(f64),
    #[error("profile exponent {0} must be positive")]
    InvalidExponent(f64),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    /// Support radius as a multiple of the coarse covering radius.
    pub radius_factor: f64,
    /// Exponent of the `(1 − d/r)` profile.
    pub exponent: f64,
}

impl Default for BasisParams {
    fn default() -> Self {
        Self { radius_factor: 5.0, exponent: 2.0 }
    }
}

/// Distance queries for basis construction under one scheme. The heat
/// method's factorizations are built once here and reused for every level.
pub struct DistanceEngine<'g> {
    graph: &'g EdgeGraph,
    kind: EngineKind,
}

enum EngineKind {
    Graph { window: usize },
    Heat(Box<HeatMethod>),
}

impl<'g> DistanceEngine<'g> {
    /// `laplace` is the Laplace–Beltrami pair `(S, M)`, required by the heat
    /// method and ignored by the graph schemes.
    pub fn new(
        scheme: DistanceScheme,
        mesh: &TriangleMesh,
        graph: &'g EdgeGraph,
        laplace: Option<(&SymmetricMatrix, &SymmetricMatrix)>,
    ) -> Result<Self, GeodesicError> {
        let kind = match scheme {
            DistanceScheme::Dijkstra => EngineKind::Graph { window: 1 },
            DistanceScheme::Stvd { window } => {
                if window == 0 {
                    return Err(GeodesicError::InvalidWindow);
                }
                EngineKind::Graph { window }
            }
            DistanceScheme::Heat { tau_scale } => {
                let owned;
                let (s, m) = match laplace {
                    Some(pair) => pair,
                    None => {
                        owned = crate::operators::LaplaceOperators::assemble(mesh);
                        (&owned.stiffness, &owned.mass)
                    }
                };
                EngineKind::Heat(Box::new(HeatMethod::new(mesh, s, m, tau_scale)?))
            }
        };
        Ok(Self { graph, kind })
    }

    /// Graph-only engine (Dijkstra or STVD).
    pub fn graph(graph: &'g EdgeGraph, window: usize) -> Self {
        Self { graph, kind: EngineKind::Graph { window: window.max(1) } }
    }

    pub fn edge_graph(&self) -> &EdgeGraph {
        self.graph
    }

    /// For each source, the vertices strictly closer than `radius` with
    /// their distances.
    pub fn within(&self, sources: &[usize], radius: f64) -> Result<Vec<Vec<(usize, f64)>>, GeodesicError> {
        let n = self.graph.vertex_count();
        if let Some(&bad) = sources.iter().find(|&&s| s >= n) {
            return Err(GeodesicError::VertexOutOfRange { vertex: bad, vertex_count: n });
        }
        match &self.kind {
            EngineKind::Graph { window } => Ok(sources
                .par_iter()
                .map_init(
                    || Propagation::new(n),
                    |prop, &s| {
                        let mut list: Vec<(usize, f64)> =
                            prop.run(self.graph, s, *window, Stop::Radius(radius)).into_iter().filter(|&(_, d)| d < radius).collect();
                        list.sort_unstable_by_key(|&(v, _)| v);
                        list
                    },
                )
                .collect()),
            EngineKind::Heat(heat) => {
                let mut out = Vec::with_capacity(sources.len());
                for chunk in sources.chunks(64) {
                    let block: Mat<f64> = heat.distance_block(chunk)?;
                    for j in 0..chunk.len() {
                        out.push(block.col(j).iter().copied().enumerate().filter(|&(_, d)| d < radius).collect());
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProlongationOperator {
    /// Fine rows × coarse columns.
    pub matrix: CsrMatrix,
    pub support_radius: f64,
    /// Fine vertices no support reached; they copy their nearest sample.
    pub uncovered: usize,
}

/// Prolongation from `coarse` (global vertex ids, each also in `fine`) to
/// `fine` (global vertex ids). Row `i` belongs to `fine[i]`, column `j` to
/// `coarse[j]`.
pub fn construct_prolongation(
    engine: &DistanceEngine<'_>,
    coarse: &[usize],
    coarse_radius: f64,
    fine: &[usize],
    params: &BasisParams,
) -> Result<ProlongationOperator, BasisError> {
    if coarse.is_empty() {
        return Err(BasisError::EmptyCoarseSet);
    }
    if !(params.radius_factor >= 1.0) || !params.radius_factor.is_finite() {
        return Err(BasisError::InvalidRadiusFactor(params.radius_factor));
    }
    if !(params.exponent > 0.0) || !params.exponent.is_finite() {
        return Err(BasisError::InvalidExponent(params.exponent));
    }
    let graph = engine.edge_graph();
    let n = graph.vertex_count();
    const NONE: usize = usize::MAX;
    let mut fine_row = vec![NONE; n];
    for (i, &v) in fine.iter().enumerate() {
        if v >= n {
            return Err(GeodesicError::VertexOutOfRange { vertex: v, vertex_count: n }.into());
        }
        fine_row[v] = i;
    }
    if let Some(&bad) = coarse.iter().find(|&&c| c >= n || fine_row[c] == NONE) {
        return Err(BasisError::NotNested(bad));
    }

    let radius = params.radius_factor * coarse_radius;
    let supports = engine.within(coarse, radius)?;
    let mut triplets = Vec::new();
    let mut row_sum = vec![0.0; fine.len()];
    for (j, support) in supports.iter().enumerate() {
        for &(v, d) in support {
            let i = fine_row[v];
            if i == NONE {
                continue;
            }
            let w = (1.0 - d / radius).max(0.0).powf(params.exponent);
            if w > 0.0 {
                triplets.push((i, j, w));
                row_sum[i] += w;
            }
        }
    }

    let mut uncovered = 0;
    if row_sum.iter().any(|&s| s == 0.0) {
        let (_, owner) = nearest_source(graph, coarse);
        let mut column_of = vec![NONE; n];
        for (j, &c) in coarse.iter().enumerate() {
            column_of[c] = j;
        }
        for (i, &v) in fine.iter().enumerate() {
            if row_sum[i] == 0.0 {
                triplets.push((i, column_of[owner[v]], 1.0));
                row_sum[i] = 1.0;
                uncovered += 1;
            }
        }
    }
    for t in &mut triplets {
        t.2 /= row_sum[t.0];
    }
    let matrix = CsrMatrix::from_triplets(fine.len(), coarse.len(), &triplets)?;
    Ok(ProlongationOperator { matrix, support_radius: radius, uncovered })
}

/// `(UᵀSU, UᵀMU)`, symmetrized to remove roundoff asymmetry.
pub fn galerkin_project(
    stiffness: &SymmetricMatrix,
    mass: &SymmetricMatrix,
    prolongation: &CsrMatrix,
) -> Result<(SymmetricMatrix, SymmetricMatrix), BasisError> {
    let n = prolongation.nrows();
    if stiffness.dim() != n || mass.dim() != n {
        return Err(SparseError::DimensionMismatch(format!(
            "operators are {}x{} and {}x{}, prolongation has {n} rows",
            stiffness.dim(),
            stiffness.dim(),
            mass.dim(),
            mass.dim()
        ))
        .into());
    }
    let ut = prolongation.transpose();
    let project = |a: &SymmetricMatrix| -> Result<SymmetricMatrix, SparseError> {
        let au = a.as_csr().matmul(prolongation)?;
        Ok(SymmetricMatrix::symmetrize(&ut.matmul(&au)?))
    };
    Ok((project(stiffness)?, project(mass)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::LaplaceOperators;
    use crate::shapes;

    fn path() -> EdgeGraph {
        EdgeGraph::from_edges(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn midpoint_splits_evenly() {
        let g = path();
        let engine = DistanceEngine::graph(&g, 1);
        let params = BasisParams { radius_factor: 2.0, exponent: 2.0 };
        let u = construct_prolongation(&engine, &[0, 2], 1.0, &[0, 1, 2], &params).unwrap();
        assert_eq!(u.support_radius, 2.0);
        assert_eq!(u.matrix.get(1, 0), 0.5);
        assert_eq!(u.matrix.get(1, 1), 0.5);
        assert_eq!(u.matrix.get(0, 0), 1.0);
    }

    #[test]
    fn single_sample_gives_ones() {
        let mesh = shapes::icosphere(2, 1.0);
        let g = EdgeGraph::from_mesh(&mesh).unwrap();
        let engine = DistanceEngine::graph(&g, 1);
        let fine: Vec<usize> = (0..mesh.vertex_count()).collect();
        let u = construct_prolongation(&engine, &[5], 0.1, &fine, &BasisParams::default()).unwrap();
        assert!(u.matrix.values().iter().all(|&w| w == 1.0));
        assert_eq!(u.matrix.nnz(), mesh.vertex_count());
    }

    #[test]
    fn identity_when_radius_vanishes() {
        let g = path();
        let engine = DistanceEngine::graph(&g, 1);
        let u = construct_prolongation(&engine, &[2, 0, 1], 0.0, &[0, 1, 2], &BasisParams::default()).unwrap();
        assert_eq!(u.uncovered, 3);
        assert_eq!(u.matrix.get(0, 1), 1.0);
        assert_eq!(u.matrix.get(1, 2), 1.0);
        assert_eq!(u.matrix.get(2, 0), 1.0);
    }

    #[test]
    fn errors() {
        let g = path();
        let engine = DistanceEngine::graph(&g, 1);
        let p = BasisParams::default();
        assert!(matches!(construct_prolongation(&engine, &[], 1.0, &[0, 1], &p), Err(BasisError::EmptyCoarseSet)));
        assert!(matches!(construct_prolongation(&engine, &[2], 1.0, &[0, 1], &p), Err(BasisError::NotNested(2))));
        let bad = BasisParams { radius_factor: 0.5, exponent: 2.0 };
        assert!(matches!(construct_prolongation(&engine, &[0], 1.0, &[0, 1], &bad), Err(BasisError::InvalidRadiusFactor(_))));
    }

    #[test]
    fn galerkin_with_ones_column() {
        let mesh = shapes::icosphere(2, 1.0);
        let ops = LaplaceOperators::assemble(&mesh);
        let n = mesh.vertex_count();
        let ones = CsrMatrix::from_triplets(n, 1, &(0..n).map(|i| (i, 0, 1.0)).collect::<Vec<_>>()).unwrap();
        let (sc, mc) = galerkin_project(&ops.stiffness, &ops.mass, &ones).unwrap();
        assert!(sc.get(0, 0).abs() < 1e-12);
        assert!((mc.get(0, 0) - mesh.surface_area()).abs() < 1e-12);
    }

    #[test]
    fn galerkin_identity() {
        let mesh = shapes::icosphere(1, 1.0);
        let ops = LaplaceOperators::assemble(&mesh);
        let id = CsrMatrix::identity(mesh.vertex_count());
        let (sc, mc) = galerkin_project(&ops.stiffness, &ops.mass, &id).unwrap();
        assert_eq!(sc.to_dense(), ops.stiffness.to_dense());
        assert_eq!(mc.to_dense(), ops.mass.to_dense());
    }
}
