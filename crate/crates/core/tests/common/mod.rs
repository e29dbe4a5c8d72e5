//! Shared strategies and independent oracles for the integration tests.
#![allow(dead_code)]

use hsim::mesh::{EdgeGraph, Vec3};
use proptest::prelude::*;

/// Connected random graph: a random spanning tree plus extra edges, with
/// vertices at random positions in the unit cube.
pub fn connected_graph(max_vertices: usize) -> impl Strategy<Value = (Vec<Vec3>, Vec<(usize, usize)>)> {
    (2..=max_vertices).prop_flat_map(|n| {
        let positions = prop::collection::vec(prop::array::uniform3(0.0..1.0f64), n);
        let parents: Vec<_> = (1..n).map(|i| 0..i).collect();
        let extras = prop::collection::vec((0..n, 0..n), 0..2 * n);
        (positions, parents, extras).prop_map(move |(positions, parents, extras)| {
            let mut edges: Vec<(usize, usize)> = parents.into_iter().enumerate().map(|(i, p)| (i + 1, p)).collect();
            edges.extend(extras);
            (positions, edges)
        })
    })
}

/// O(n²) array Dijkstra over every vertex; `f64::INFINITY` if unreachable.
pub fn dijkstra_oracle(graph: &EdgeGraph, source: usize) -> Vec<f64> {
    let n = graph.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&v| !done[v] && dist[v].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b))) else {
            break;
        };
        done[u] = true;
        for (v, w) in graph.neighbors(u) {
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
            }
        }
    }
    dist
}

/// All-pairs shortest paths by Floyd–Warshall.
pub fn floyd_warshall(graph: &EdgeGraph) -> Vec<Vec<f64>> {
    let n = graph.vertex_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (u, row) in d.iter_mut().enumerate() {
        row[u] = 0.0;
        for (v, w) in graph.neighbors(u) {
            row[v] = row[v].min(w);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Textbook farthest point sampling: full distance fields from every
/// vertex, then repeatedly take the vertex farthest from the chosen set,
/// ties to the lowest index.
pub fn brute_force_fps(graph: &EdgeGraph, count: usize, seed: usize) -> Vec<usize> {
    let n = graph.vertex_count();
    let fields: Vec<Vec<f64>> = (0..n).map(|s| dijkstra_oracle(graph, s)).collect();
    let mut chosen = vec![seed];
    while chosen.len() < count {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for v in 0..n {
            let d = chosen.iter().map(|&s| fields[s][v]).fold(f64::INFINITY, f64::min);
            if d > best.0 {
                best = (d, v);
            }
        }
        chosen.push(best.1);
    }
    chosen
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
