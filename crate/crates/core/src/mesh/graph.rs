use super::{distance, MeshError, TriangleMesh, Vec3};

/// Undirected vertex graph of a mesh, weighted by Euclidean edge length.
///
/// Adjacency is stored CSR-style; each undirected edge appears once in the
/// neighbor list of each endpoint. Vertex positions are kept alongside so
/// that the vector-unfolding distance scheme can measure chords.
#[derive(Debug, Clone)]
pub struct EdgeGraph {
    positions: Vec<Vec3>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl EdgeGraph {
    pub fn from_mesh(mesh: &TriangleMesh) -> Result<Self, MeshError> {
        Self::from_edges(mesh.positions().to_vec(), &mesh.edges())
    }

    /// Builds a graph from positions and undirected edges. Duplicate edges
    /// are merged; self loops are ignored.
    pub fn from_edges(positions: Vec<Vec3>, edges: &[(usize, usize)]) -> Result<Self, MeshError> {
        let n = positions.len();
        let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(edges.len() * 2);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(MeshError::IndexOutOfRange { triangle: usize::MAX, index: a.max(b), vertex_count: n });
            }
            if a == b {
                continue;
            }
            pairs.push((a, b));
            pairs.push((b, a));
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &pairs {
            offsets[a + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let mut neighbors = Vec::with_capacity(pairs.len());
        let mut weights = Vec::with_capacity(pairs.len());
        for &(a, b) in &pairs {
            let w = distance(positions[a], positions[b]);
            if !(w > 0.0) {
                return Err(MeshError::ZeroLengthEdge { a: a.min(b), b: a.max(b) });
            }
            neighbors.push(b);
            weights.push(w);
        }
        Ok(Self { positions, offsets, neighbors, weights })
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    /// `(neighbor, weight)` pairs of `v`.
    #[inline]
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.neighbors[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let range = self.offsets[u]..self.offsets[u + 1];
        let slice = &self.neighbors[range.clone()];
        slice.binary_search(&v).ok().map(|k| self.weights[range.start + k])
    }

    /// Iterates each undirected edge once as `(a, b, weight)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.vertex_count()).flat_map(move |a| self.neighbors(a).filter(move |&(b, _)| a < b).map(move |(b, w)| (a, b, w)))
    }
}
