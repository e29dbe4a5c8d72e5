use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{SampleSet, SamplingError, SamplingMethod};
use crate::mesh::EdgeGraph;

/// Greedy farthest point order together with the covering radius after
/// each prefix: `radii[k]` is the largest distance of any vertex to the
/// first `k + 1` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FpsOrdering {
    pub order: Vec<usize>,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Far {
    dist: f64,
    vertex: usize,
}

impl Eq for Far {}

// Max-heap on distance, ties to the lower vertex index.
impl Ord for Far {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Far {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Near {
    dist: f64,
    vertex: usize,
}

impl Eq for Near {}

impl Ord for Near {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Near {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Farthest point ordering of `count` vertices starting at `seed`.
///
/// A single distance-to-nearest-sample field is maintained; each new sample
/// runs a Dijkstra that stops expanding wherever it cannot improve the
/// field. Since that field is 1-Lipschitz along edges, the pruning is exact.
pub fn farthest_point_ordering(graph: &EdgeGraph, count: usize, seed: usize) -> Result<FpsOrdering, SamplingError> {
    let n = graph.vertex_count();
    if count == 0 {
        return Err(SamplingError::ZeroCount);
    }
    if count > n {
        return Err(SamplingError::CountTooLarge { count, vertex_count: n });
    }
    if seed >= n {
        return Err(SamplingError::SeedOutOfRange { seed, vertex_count: n });
    }

    let mut field = vec![f64::INFINITY; n];
    let mut chosen = vec![false; n];
    let mut far = BinaryHeap::new();
    let mut near = BinaryHeap::new();
    let mut order = Vec::with_capacity(count);
    let mut radii = Vec::with_capacity(count);

    let mut next = seed;
    loop {
        chosen[next] = true;
        order.push(next);
        field[next] = 0.0;
        near.push(Near { dist: 0.0, vertex: next });
        while let Some(Near { dist: d, vertex: u }) = near.pop() {
            if d > field[u] {
                continue;
            }
            for (v, w) in graph.neighbors(u) {
                let cand = d + w;
                if cand < field[v] {
                    field[v] = cand;
                    near.push(Near { dist: cand, vertex: v });
                    far.push(Far { dist: cand, vertex: v });
                }
            }
        }
        // Discard stale entries until the top reflects the current field.
        let top = loop {
            match far.peek() {
                Some(&Far { dist, vertex }) if chosen[vertex] || dist != field[vertex] => {
                    far.pop();
                }
                other => break other.copied(),
            }
        };
        if order.len() == 1 {
            if let Some(v) = field.iter().position(|d| d.is_infinite()) {
                return Err(SamplingError::Disconnected(v));
            }
        }
        radii.push(top.map_or(0.0, |t| t.dist));
        if order.len() == count {
            break;
        }
        let t = top.expect("unchosen vertices remain");
        far.pop();
        next = t.vertex;
    }
    Ok(FpsOrdering { order, radii })
}

pub fn farthest_point_sampling(graph: &EdgeGraph, count: usize, seed: usize) -> Result<SampleSet, SamplingError> {
    let ordering = farthest_point_ordering(graph, count, seed)?;
    let radius = *ordering.radii.last().expect("count > 0");
    Ok(SampleSet { indices: ordering.order, method: SamplingMethod::Fps, radius })
}
