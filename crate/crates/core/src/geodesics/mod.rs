//! Approximate on-surface distances from a source vertex.
//!
//! Three schemes are provided: exact graph distances ([`local_dijkstra`]),
//! vector-unfolded graph distances ([`stvd`]) and the heat method
//! ([`HeatMethod`]). The first two stop early once a given set of vertices
//! has been settled or a radius has been exceeded, which is what keeps
//! basis construction local.

mod heat;
mod propagate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::EdgeGraph;
use crate::sparse::SparseError;

pub use heat::HeatMethod;
pub use propagate::{Propagation, Stop};

/// Default number of unfolded edges for [`stvd`].
pub const DEFAULT_STVD_WINDOW: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("vertex {vertex} outside a graph with {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },
    #[error("stop set is empty")]
    EmptyStopSet,
    #[error("stop vertex {0} is not reachable from the source")]
    UnreachableStop(usize),
    #[error("stvd window must be at least 1")]
    InvalidWindow,
    #[error("heat method time scale must be positive and finite, got {0}")]
    InvalidTimeScale(f64),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum DistanceScheme {
    Dijkstra,
    Stvd { window: usize },
    Heat { tau_scale: f64 },
}

impl DistanceScheme {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dijkstra => "dijkstra",
            Self::Stvd { .. } => "stvd",
            Self::Heat { .. } => "heat",
        }
    }
}

impl Default for DistanceScheme {
    fn default() -> Self {
        Self::Dijkstra
    }
}

impl std::fmt::Display for DistanceScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Dijkstra => write!(f, "dijkstra"),
            Self::Stvd { window } => write!(f, "stvd(window={window})"),
            Self::Heat { tau_scale } => write!(f, "heat(tau_scale={tau_scale})"),
        }
    }
}

/// Per-vertex distances from one source. Unreached vertices hold
/// `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub source: usize,
    pub values: Vec<f64>,
    pub scheme: DistanceScheme,
}

impl DistanceField {
    pub fn is_reached(&self, v: usize) -> bool {
        self.values[v].is_finite()
    }

    pub fn reached(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().copied().enumerate().filter(|(_, d)| d.is_finite())
    }

    pub fn reached_count(&self) -> usize {
        self.values.iter().filter(|d| d.is_finite()).count()
    }
}

fn check_source(graph: &EdgeGraph, source: usize) -> Result<(), GeodesicError> {
    if source >= graph.vertex_count() {
        return Err(GeodesicError::VertexOutOfRange { vertex: source, vertex_count: graph.vertex_count() });
    }
    Ok(())
}

fn run(graph: &EdgeGraph, source: usize, window: usize, stop_set: &[usize], scheme: DistanceScheme) -> Result<DistanceField, GeodesicError> {
    check_source(graph, source)?;
    if stop_set.is_empty() {
        return Err(GeodesicError::EmptyStopSet);
    }
    if let Some(&bad) = stop_set.iter().find(|&&v| v >= graph.vertex_count()) {
        return Err(GeodesicError::VertexOutOfRange { vertex: bad, vertex_count: graph.vertex_count() });
    }
    let mut prop = Propagation::new(graph.vertex_count());
    let settled = prop.run(graph, source, window, Stop::Set(stop_set));
    let mut values = vec![f64::INFINITY; graph.vertex_count()];
    for &(v, d) in &settled {
        values[v] = d;
    }
    if let Some(&missing) = stop_set.iter().find(|&&v| !values[v].is_finite()) {
        return Err(GeodesicError::UnreachableStop(missing));
    }
    Ok(DistanceField { source, values, scheme })
}

/// Exact edge-graph distances, stopping once every vertex of `stop_set`
/// has been settled.
pub fn local_dijkstra(graph: &EdgeGraph, source: usize, stop_set: &[usize]) -> Result<DistanceField, GeodesicError> {
    run(graph, source, 1, stop_set, DistanceScheme::Dijkstra)
}

/// Dijkstra propagation whose updates also try straight ambient chords
/// spanning up to `window` predecessor edges. Never longer than
/// [`local_dijkstra`]; identical to it for `window == 1`.
pub fn stvd(graph: &EdgeGraph, source: usize, window: usize, stop_set: &[usize]) -> Result<DistanceField, GeodesicError> {
    if window == 0 {
        return Err(GeodesicError::InvalidWindow);
    }
    run(graph, source, window, stop_set, DistanceScheme::Stvd { window })
}

/// Full single-source graph distances.
pub fn dijkstra_all(graph: &EdgeGraph, source: usize) -> Result<DistanceField, GeodesicError> {
    check_source(graph, source)?;
    let mut prop = Propagation::new(graph.vertex_count());
    let mut values = vec![f64::INFINITY; graph.vertex_count()];
    for (v, d) in prop.run(graph, source, 1, Stop::Never) {
        values[v] = d;
    }
    Ok(DistanceField { source, values, scheme: DistanceScheme::Dijkstra })
}

/// Distance to the nearest of several sources and which source that is.
pub fn nearest_source(graph: &EdgeGraph, sources: &[usize]) -> (Vec<f64>, Vec<usize>) {
    propagate::multi_source(graph, sources)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> EdgeGraph {
        EdgeGraph::from_edges(vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn path_distances() {
        let f = local_dijkstra(&path(), 0, &[0, 1, 2]).unwrap();
        assert_eq!(f.values, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn early_stop_leaves_far_vertex_unreached() {
        let f = local_dijkstra(&path(), 0, &[0, 1]).unwrap();
        assert!(f.is_reached(1));
        assert!(!f.is_reached(2));
    }

    #[test]
    fn collinear_stvd_gains_nothing() {
        let f = stvd(&path(), 0, 2, &[2]).unwrap();
        assert_eq!(f.values[2], 2.0);
    }

    #[test]
    fn right_angle_stvd_takes_chord() {
        let g = EdgeGraph::from_edges(vec![[0.0; 3], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]], &[(0, 1), (1, 2)]).unwrap();
        let f = stvd(&g, 0, 2, &[2]).unwrap();
        assert!((f.values[2] - 2f64.sqrt()).abs() < 1e-15);
        let d = local_dijkstra(&g, 0, &[2]).unwrap();
        assert_eq!(d.values[2], 2.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(local_dijkstra(&path(), 5, &[0]), Err(GeodesicError::VertexOutOfRange { .. })));
        assert!(matches!(local_dijkstra(&path(), 0, &[]), Err(GeodesicError::EmptyStopSet)));
        assert!(matches!(stvd(&path(), 0, 0, &[1]), Err(GeodesicError::InvalidWindow)));
        let split = EdgeGraph::from_edges(vec![[0.0; 3], [1.0, 0.0, 0.0], [5.0, 0.0, 0.0]], &[(0, 1)]).unwrap();
        assert!(matches!(local_dijkstra(&split, 0, &[2]), Err(GeodesicError::UnreachableStop(2))));
    }

    #[test]
    fn nearest_source_partitions() {
        let (d, owner) = nearest_source(&path(), &[0, 2]);
        assert_eq!(d, vec![0.0, 1.0, 0.0]);
        assert_eq!(owner[0], 0);
        assert_eq!(owner[2], 2);
    }
}
