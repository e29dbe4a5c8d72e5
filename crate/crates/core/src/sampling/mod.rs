//! Vertex sampling and nested vertex hierarchies.
//!
//! The hierarchy used by the solver is a prefix chain of one farthest point
//! ordering: level `ℓ` is the first `m_ℓ` samples, so nesting holds by
//! construction. Poisson disk sampling is provided for comparison.

mod fps;
mod pds;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geodesics::nearest_source;
use crate::mesh::{EdgeGraph, TriangleMesh};

pub use fps::{farthest_point_ordering, farthest_point_sampling, FpsOrdering};
pub use pds::{poisson_disk_radius, poisson_disk_sampling, poisson_disk_with_radius, PDS_RADIUS_CONSTANT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("requested {count} samples from {vertex_count} vertices")]
    CountTooLarge { count: usize, vertex_count: usize },
    #[error("sample count must be positive")]
    ZeroCount,
    #[error("seed vertex {seed} outside a graph with {vertex_count} vertices")]
    SeedOutOfRange { seed: usize, vertex_count: usize },
    #[error("{num_eigs} eigenpairs need a coarsest level of {coarse} samples, but the mesh has only {vertex_count} vertices")]
    TooManyEigenpairs { num_eigs: usize, coarse: usize, vertex_count: usize },
    #[error("invalid hierarchy parameters: {0}")]
    InvalidParameters(String),
    #[error("graph is disconnected; vertex {0} was never reached")]
    Disconnected(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMethod {
    #[default]
    Fps,
    Pds,
}

impl SamplingMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Fps => "fps",
            Self::Pds => "pds",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub indices: Vec<usize>,
    pub method: SamplingMethod,
    /// FPS: covering radius (graph distance). PDS: ambient disk radius.
    pub radius: f64,
}

/// Level sizing. The coarsest level holds `coarse_factor · p` samples,
/// capped at `coarse_cap` and raised to at least `floor`; the number of levels is the smallest for which geometrically
/// spaced sizes grow by at most `max_ratio` per level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    pub coarse_factor: f64,
    pub floor: usize,
    /// Upper bound on the coarsest level, which is solved densely.
    pub coarse_cap: usize,
    pub max_ratio: f64,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        Self { coarse_factor: 16.0, floor: 400, coarse_cap: 3000, max_ratio: 32.0 }
    }
}

impl HierarchyParams {
    fn validate(&self) -> Result<(), SamplingError> {
        if !(self.coarse_factor >= 1.0) || !self.coarse_factor.is_finite() {
            return Err(SamplingError::InvalidParameters(format!("coarse factor {} < 1", self.coarse_factor)));
        }
        if !(self.max_ratio > 1.0) || !self.max_ratio.is_finite() {
            return Err(SamplingError::InvalidParameters(format!("level ratio {} must exceed 1", self.max_ratio)));
        }
        Ok(())
    }

    pub fn coarsest_size(&self, num_eigs: usize) -> usize {
        ((self.coarse_factor * num_eigs as f64).ceil() as usize).min(self.coarse_cap).max(self.floor)
    }

    /// Sizes of every level, coarsest first, ending with `vertex_count`.
    pub fn level_sizes(&self, vertex_count: usize, num_eigs: usize) -> Result<Vec<usize>, SamplingError> {
        self.validate()?;
        if num_eigs == 0 {
            return Err(SamplingError::ZeroCount);
        }
        let coarse = self.coarsest_size(num_eigs);
        if coarse >= vertex_count {
            return Err(SamplingError::TooManyEigenpairs { num_eigs, coarse, vertex_count });
        }
        let total = vertex_count as f64 / coarse as f64;
        let mut steps = 1usize;
        while total.powf(1.0 / steps as f64) > self.max_ratio * (1.0 + 1e-12) {
            steps += 1;
        }
        let mut sizes = Vec::with_capacity(steps + 1);
        for l in 0..steps {
            let size = (coarse as f64 * total.powf(l as f64 / steps as f64)).round() as usize;
            sizes.push(size.clamp(coarse, vertex_count - 1));
        }
        sizes.push(vertex_count);
        sizes.dedup();
        Ok(sizes)
    }
}

/// Nested vertex levels, coarsest first. The finest level is every vertex
/// in natural order; coarser levels list samples in selection order, so
/// each level is a prefix of the next non-finest one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexHierarchy {
    pub levels: Vec<Vec<usize>>,
    /// Graph-distance covering radius per level (0 on the finest).
    pub radii: Vec<f64>,
    pub seed: usize,
    pub method: SamplingMethod,
}

impl VertexHierarchy {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.levels.last().map_or(0, Vec::len)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("hierarchy serializes")
    }
}

/// Farthest-point hierarchy for a `num_eigs`-pair solve.
pub fn build_hierarchy(graph: &EdgeGraph, num_eigs: usize, params: &HierarchyParams, seed: usize) -> Result<VertexHierarchy, SamplingError> {
    let n = graph.vertex_count();
    let sizes = params.level_sizes(n, num_eigs)?;
    let deepest = sizes[sizes.len() - 2];
    let ordering = farthest_point_ordering(graph, deepest, seed)?;
    let mut levels = Vec::with_capacity(sizes.len());
    let mut radii = Vec::with_capacity(sizes.len());
    for &m in &sizes[..sizes.len() - 1] {
        levels.push(ordering.order[..m].to_vec());
        radii.push(ordering.radii[m - 1]);
    }
    levels.push((0..n).collect());
    radii.push(0.0);
    Ok(VertexHierarchy { levels, radii, seed, method: SamplingMethod::Fps })
}

/// Poisson-disk hierarchy with the same level sizing. Each level is seeded
/// with the samples of the level above, so levels stay nested; counts are
/// only approximately the targets.
pub fn build_pds_hierarchy(
    mesh: &TriangleMesh,
    graph: &EdgeGraph,
    num_eigs: usize,
    params: &HierarchyParams,
    rng_seed: u64,
) -> Result<VertexHierarchy, SamplingError> {
    let n = mesh.vertex_count();
    let sizes = params.level_sizes(n, num_eigs)?;
    let area = mesh.surface_area();
    let mut levels: Vec<Vec<usize>> = Vec::with_capacity(sizes.len());
    let mut radii = Vec::with_capacity(sizes.len());
    let mut previous: Vec<usize> = Vec::new();
    for (l, &m) in sizes[..sizes.len() - 1].iter().enumerate() {
        let r = poisson_disk_radius(area, m);
        let set = poisson_disk_with_radius(mesh, r, rng_seed.wrapping_add(l as u64), &previous);
        if set.indices.len() >= n {
            break;
        }
        let (dist, _) = nearest_source(graph, &set.indices);
        let cover = dist.iter().copied().fold(0.0, f64::max);
        if let Some(v) = dist.iter().position(|d| !d.is_finite()) {
            return Err(SamplingError::Disconnected(v));
        }
        if set.indices.len() > previous.len() {
            previous = set.indices.clone();
            levels.push(set.indices);
            radii.push(cover);
        }
    }
    levels.push((0..n).collect());
    radii.push(0.0);
    let seed = levels[0].first().copied().unwrap_or(0);
    Ok(VertexHierarchy { levels, radii, seed, method: SamplingMethod::Pds })
}
