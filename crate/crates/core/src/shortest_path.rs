//! Single-source shortest paths over decoding graphs (nonnegative weights).
//!
//! Path reconstruction is canonical: the predecessor of a vertex is the
//! smallest edge id satisfying the shortest-path equation, so tied paths
//! resolve identically on every platform.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::graph::{DecodingGraph, Weight};
use crate::{EdgeIndex, VertexIndex};

/// Distances from `source` to every vertex.
pub fn distances(graph: &DecodingGraph, source: VertexIndex) -> Vec<Weight> {
    let mut dist = vec![Weight::MAX; graph.vertex_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &e in graph.incident_edges(v) {
            let u = graph.edge(e).other_endpoint(v);
            let next = d + graph.edge(e).weight;
            if next < dist[u] {
                dist[u] = next;
                heap.push(Reverse((next, u)));
            }
        }
    }
    dist
}

/// Shortest distance from `source` to any virtual vertex, with the smallest
/// qualifying virtual vertex id.
pub fn boundary_distance(graph: &DecodingGraph, source: VertexIndex) -> (Weight, VertexIndex) {
    let dist = distances(graph, source);
    let mut best: Option<(Weight, VertexIndex)> = None;
    for v in 0..graph.vertex_count() {
        if graph.is_virtual(v) && dist[v] != Weight::MAX {
            match best {
                Some((w, _)) if w <= dist[v] => {}
                _ => best = Some((dist[v], v)),
            }
        }
    }
    best.expect("decoding graphs contain at least one virtual vertex")
}

/// Edge ids of the canonical shortest path from `a` to `b`.
pub fn shortest_path_edges(
    graph: &DecodingGraph,
    a: VertexIndex,
    b: VertexIndex,
) -> Vec<EdgeIndex> {
    let dist = distances(graph, a);
    debug_assert!(dist[b] != Weight::MAX, "graph is connected");
    let mut path = Vec::new();
    let mut v = b;
    while v != a {
        // canonical predecessor: smallest edge id on a shortest path
        let e = graph
            .incident_edges(v)
            .iter()
            .cloned()
            .filter(|&e| {
                let u = graph.edge(e).other_endpoint(v);
                dist[u] != Weight::MAX && dist[u] + graph.edge(e).weight == dist[v]
            })
            .min()
            .expect("shortest path tree is complete");
        path.push(e);
        v = graph.edge(e).other_endpoint(v);
    }
    path.reverse();
    path
}
