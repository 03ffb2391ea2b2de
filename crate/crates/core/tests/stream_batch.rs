//! Stream decoding must reproduce batch results exactly: round-wise fusion
//! never changes the final solution weight.

use blossom_core::decode::{decode_batch, decode_batch_with};
use blossom_core::graph::build_surface_graph_3d;
use blossom_core::noise::{sample_errors, shot_seed, syndrome_from_errors, uniform_probabilities};
use blossom_core::stream::{decode_stream, decode_stream_with, StreamContext};

fn rounds_of(graph: &blossom_core::DecodingGraph, defects: &[usize]) -> Vec<Vec<usize>> {
    let mut rounds = vec![Vec::new(); graph.layer_count()];
    for &d in defects {
        rounds[graph.vertex(d).layer].push(d);
    }
    rounds
}

#[test]
fn empty_stream() {
    let g = build_surface_graph_3d(3, 3, 0.01, 0.01).unwrap();
    let outcome = decode_stream(&g, &vec![Vec::new(); 3]).unwrap();
    assert_eq!(outcome.solution.total_weight, 0);
    assert_eq!(outcome.stats.round_cycles.len(), 3);
}

#[test]
fn round_count_must_match() {
    let g = build_surface_graph_3d(3, 3, 0.01, 0.01).unwrap();
    assert!(decode_stream(&g, &vec![Vec::new(); 2]).is_err());
    assert!(decode_stream(&g, &vec![Vec::new(); 4]).is_err());
}

#[test]
fn out_of_order_defects_rejected() {
    let g = build_surface_graph_3d(3, 2, 0.01, 0.01).unwrap();
    let mut ctx = StreamContext::new(&g);
    // a layer-1 defect cannot be loaded with round 0
    let layer_1_defect = g
        .regular_vertices()
        .find(|&v| g.vertex(v).layer == 1)
        .unwrap();
    assert!(ctx.load_round(&[layer_1_defect]).is_err());
}

#[test]
fn all_defects_in_final_round() {
    let g = build_surface_graph_3d(3, 3, 0.02, 0.02).unwrap();
    let defects: Vec<usize> = g
        .regular_vertices()
        .filter(|&v| g.vertex(v).layer == 2)
        .take(2)
        .collect();
    let batch = decode_batch(&g, &defects).unwrap();
    let stream = decode_stream(&g, &rounds_of(&g, &defects)).unwrap();
    assert_eq!(batch.solution.total_weight, stream.solution.total_weight);
}

#[test]
fn cross_layer_matches_break_and_reresolve() {
    let g = build_surface_graph_3d(3, 2, 0.02, 0.02).unwrap();
    // a temporal pair: defect in layer 0 matched up into layer 1
    let lower = g
        .regular_vertices()
        .find(|&v| g.vertex(v).layer == 0)
        .unwrap();
    let upper = g
        .edges()
        .iter()
        .find_map(|e| {
            let [a, b] = e.endpoints;
            if a == lower && g.vertex(b).layer == 1 {
                Some(b)
            } else if b == lower && g.vertex(a).layer == 1 {
                Some(a)
            } else {
                None
            }
        })
        .unwrap();
    let defects = vec![lower, upper];
    let batch = decode_batch(&g, &defects).unwrap();
    let stream = decode_stream(&g, &rounds_of(&g, &defects)).unwrap();
    assert_eq!(batch.solution.total_weight, stream.solution.total_weight);
    // the pair edge weight: both covers meet on the temporal edge
    assert_eq!(
        batch.solution.total_weight,
        g.edges()
            .iter()
            .find(|e| {
                let mut ends = e.endpoints;
                ends.sort_unstable();
                let mut want = [lower, upper];
                want.sort_unstable();
                ends == want
            })
            .unwrap()
            .weight
    );
}

#[test]
fn randomized_stream_equals_batch() {
    for (d, rounds, p) in [(3, 3, 0.03), (3, 3, 0.1), (5, 5, 0.02), (5, 5, 0.06)] {
        let g = build_surface_graph_3d(d, rounds, 0.02, 0.02).unwrap();
        let probabilities = uniform_probabilities(&g, p);
        for shot in 0..40 {
            let sample = sample_errors(&g, &probabilities, shot_seed(31 + d as u64, shot)).unwrap();
            let defects = syndrome_from_errors(&g, &sample);
            let rounds_list = rounds_of(&g, &defects);
            for prematch in [true, false] {
                let batch = decode_batch_with(&g, &defects, prematch).unwrap();
                let stream = decode_stream_with(&g, &rounds_list, prematch).unwrap();
                assert_eq!(
                    batch.solution.total_weight, stream.solution.total_weight,
                    "stream/batch diverged on defects {defects:?} (prematch {prematch})"
                );
            }
        }
    }
}

#[test]
fn fusion_boundary_only_shrinks() {
    let g = build_surface_graph_3d(3, 3, 0.02, 0.02).unwrap();
    let mut ctx = StreamContext::new(&g);
    let mut boundary_count = g.vertex_count();
    for layer in 0..3 {
        let defects: Vec<usize> = Vec::new();
        ctx.load_round(&defects).unwrap();
        ctx.fuse_round();
        ctx.drain_round();
        let now = (0..g.vertex_count())
            .filter(|&v| {
                // virtual vertices stay boundary; loaded regulars do not
                g.is_virtual(v) || g.vertex(v).layer > layer
            })
            .count();
        assert!(now < boundary_count);
        boundary_count = now;
    }
}
