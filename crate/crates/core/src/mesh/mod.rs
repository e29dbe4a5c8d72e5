//! Triangle meshes: loading, validation and the weighted edge graph.

mod graph;
mod io;

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

pub use graph::EdgeGraph;
pub use io::{load_mesh, parse_mesh, parse_obj, parse_off, write_off, write_off_with_scalars, MeshFormat};

pub type Vec3 = [f64; 3];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported mesh format {0:?} (expected .off or .obj)")]
    UnsupportedFormat(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh has no triangles")]
    Empty,
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("triangle {triangle}: vertex index out of range ({index} >= {vertex_count})")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("triangle {triangle} repeats a vertex")]
    RepeatedVertex { triangle: usize },
    #[error("triangles {first} and {second} are duplicates")]
    DuplicateTriangle { first: usize, second: usize },
    #[error("non-manifold edge ({a}, {b}) is shared by {count} triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("non-manifold vertex {vertex}: its triangles form {fans} separate fans")]
    NonManifoldVertex { vertex: usize, fans: usize },
    #[error("mesh is not connected ({unreached} of {vertex_count} vertices unreachable from vertex 0)")]
    Disconnected { unreached: usize, vertex_count: usize },
    #[error("edge ({a}, {b}) has zero length")]
    ZeroLengthEdge { a: usize, b: usize },
}

/// A validated, connected, manifold triangle mesh. Immutable once built.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    positions: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    boundary_edges: usize,
}

impl TriangleMesh {
    /// Validates and wraps raw geometry. Vertex order is preserved.
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = positions.len();
        if let Some(vertex) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(MeshError::NonFinite { vertex });
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= n) {
                return Err(MeshError::IndexOutOfRange { triangle: t, index, vertex_count: n });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex { triangle: t });
            }
        }

        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut key = *tri;
            key.sort_unstable();
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateTriangle { first, second: t });
            }
            seen.insert(key, t);
        }

        let mut edge_faces: HashMap<(usize, usize), u32> = HashMap::with_capacity(triangles.len() * 2);
        for tri in &triangles {
            for k in 0..3 {
                *edge_faces.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut boundary_vertex = vec![false; n];
        let mut boundary_edges = 0;
        let mut sorted_edges: Vec<_> = edge_faces.iter().collect();
        sorted_edges.sort_unstable();
        for (&(a, b), &count) in sorted_edges {
            match count {
                1 => {
                    boundary_edges += 1;
                    boundary_vertex[a] = true;
                    boundary_vertex[b] = true;
                }
                2 => {}
                _ => return Err(MeshError::NonManifoldEdge { a, b, count: count as usize }),
            }
        }

        check_vertex_fans(n, &triangles)?;
        check_connected(n, &triangles)?;

        Ok(Self { positions, triangles, boundary_vertex, boundary_edges })
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn position(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary_edges > 0
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.boundary_edges
    }

    #[inline]
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.positions[i]);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangle_count()).map(|t| self.triangle_area(t)).sum()
    }

    /// Unique undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<_> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| edge_key(t[k], t[(k + 1) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.edges();
        let total: f64 = edges.iter().map(|&(a, b)| distance(self.positions[a], self.positions[b])).sum();
        total / edges.len() as f64
    }

    /// Area-weighted vertex normals (unit length where defined).
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut normals = vec![[0.0; 3]; self.vertex_count()];
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.positions[i]);
            let n = cross(sub(b, a), sub(c, a));
            for &v in tri {
                normals[v] = add(normals[v], n);
            }
        }
        for n in &mut normals {
            let len = norm(*n);
            if len > 0.0 {
                *n = scale(*n, 1.0 / len);
            }
        }
        normals
    }

    /// Same connectivity with every position mapped through `f`.
    pub fn map_positions(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        Self {
            positions: self.positions.iter().map(|&p| f(p)).collect(),
            triangles: self.triangles.clone(),
            boundary_vertex: self.boundary_vertex.clone(),
            boundary_edges: self.boundary_edges,
        }
    }

    /// Largest distance between any two vertices' bounding-box corners; a
    /// cheap upper bound on the ambient diameter.
    pub fn bounding_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.positions {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        distance(lo, hi)
    }
}

#[inline]
fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Every vertex's incident triangles must form one fan (connected through
/// edges that contain the vertex).
fn check_vertex_fans(n: usize, triangles: &[[usize; 3]]) -> Result<(), MeshError> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            incident[v].push(t);
        }
    }
    let mut parent: Vec<usize> = Vec::new();
    let mut by_neighbor: HashMap<usize, usize> = HashMap::new();
    for (v, tris) in incident.iter().enumerate() {
        if tris.len() <= 1 {
            continue;
        }
        parent.clear();
        parent.extend(0..tris.len());
        by_neighbor.clear();
        for (local, &t) in tris.iter().enumerate() {
            for &w in triangles[t].iter().filter(|&&w| w != v) {
                if let Some(&other) = by_neighbor.get(&w) {
                    union(&mut parent, local, other);
                } else {
                    by_neighbor.insert(w, local);
                }
            }
        }
        let fans = (0..tris.len()).filter(|&i| find(&mut parent, i) == i).count();
        if fans > 1 {
            return Err(MeshError::NonManifoldVertex { vertex: v, fans });
        }
    }
    Ok(())
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let ra = find(parent, a);
    let rb = find(parent, b);
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

fn check_connected(n: usize, triangles: &[[usize; 3]]) -> Result<(), MeshError> {
    let mut parent: Vec<usize> = (0..n).collect();
    for tri in triangles {
        union(&mut parent, tri[0], tri[1]);
        union(&mut parent, tri[1], tri[2]);
    }
    let root = find(&mut parent, 0);
    let unreached = (0..n).filter(|&v| find(&mut parent, v) != root).count();
    if unreached > 0 {
        return Err(MeshError::Disconnected { unreached, vertex_count: n });
    }
    Ok(())
}

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub(crate) fn norm(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub(crate) fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}
