use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::mesh::{distance, EdgeGraph};

const NONE: usize = usize::MAX;

/// When a propagation may stop.
#[derive(Debug, Clone, Copy)]
pub enum Stop<'a> {
    /// After every listed vertex has been settled.
    Set(&'a [usize]),
    /// Before settling any vertex farther than this.
    Radius(f64),
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

// Min-heap on distance, ties to the lower vertex index.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable Dijkstra/STVD workspace. Only touched entries are reset
/// between runs, so many small local runs on a large graph stay cheap.
#[derive(Debug, Clone)]
pub struct Propagation {
    dist: Vec<f64>,
    pred: Vec<usize>,
    settled: Vec<bool>,
    marked: Vec<bool>,
    touched: Vec<usize>,
    heap: BinaryHeap<Entry>,
}

impl Propagation {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; vertex_count],
            pred: vec![NONE; vertex_count],
            settled: vec![false; vertex_count],
            marked: vec![false; vertex_count],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.dist[v] = f64::INFINITY;
            self.pred[v] = NONE;
            self.settled[v] = false;
            self.marked[v] = false;
        }
        self.touched.clear();
        self.heap.clear();
    }

    fn touch(&mut self, v: usize) {
        if self.dist[v].is_infinite() && !self.marked[v] && !self.settled[v] {
            self.touched.push(v);
        }
    }

    /// Settles vertices in order of distance from `source` and returns them
    /// as `(vertex, distance)` in settling order. `window = 1` is plain
    /// Dijkstra; larger windows also try chords to the last `window - 1`
    /// ancestors on the shortest-path tree.
    pub fn run(&mut self, graph: &EdgeGraph, source: usize, window: usize, stop: Stop<'_>) -> Vec<(usize, f64)> {
        assert_eq!(self.dist.len(), graph.vertex_count(), "workspace sized for a different graph");
        self.reset();
        let mut remaining = 0usize;
        if let Stop::Set(set) = stop {
            for &v in set {
                self.touch(v);
                if !self.marked[v] {
                    self.marked[v] = true;
                    remaining += 1;
                }
            }
        }
        self.touch(source);
        self.dist[source] = 0.0;
        self.heap.push(Entry { dist: 0.0, vertex: source });

        let mut order = Vec::new();
        while let Some(Entry { dist: d, vertex: u }) = self.heap.pop() {
            if self.settled[u] || d > self.dist[u] {
                continue;
            }
            if let Stop::Radius(r) = stop {
                if d > r {
                    break;
                }
            }
            self.settled[u] = true;
            order.push((u, d));
            if self.marked[u] {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            for (v, w) in graph.neighbors(u) {
                if self.settled[v] {
                    continue;
                }
                let mut cand = d + w;
                if window > 1 {
                    let pv = graph.position(v);
                    let mut a = u;
                    for _ in 1..window {
                        a = self.pred[a];
                        if a == NONE {
                            break;
                        }
                        let chord = self.dist[a] + distance(pv, graph.position(a));
                        if chord < cand {
                            cand = chord;
                        }
                    }
                }
                if cand < self.dist[v] {
                    self.touch(v);
                    self.dist[v] = cand;
                    self.pred[v] = u;
                    self.heap.push(Entry { dist: cand, vertex: v });
                }
            }
        }
        order
    }
}

/// Multi-source Dijkstra: distance to and index of the nearest source.
pub(crate) fn multi_source(graph: &EdgeGraph, sources: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let n = graph.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut owner = vec![NONE; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        if dist[s] > 0.0 {
            dist[s] = 0.0;
            owner[s] = s;
            heap.push(Entry { dist: 0.0, vertex: s });
        }
    }
    while let Some(Entry { dist: d, vertex: u }) = heap.pop() {
        if settled[u] || d > dist[u] {
            continue;
        }
        settled[u] = true;
        for (v, w) in graph.neighbors(u) {
            let cand = d + w;
            if cand < dist[v] {
                dist[v] = cand;
                owner[v] = owner[u];
                heap.push(Entry { dist: cand, vertex: v });
            }
        }
    }
    (dist, owner)
}
