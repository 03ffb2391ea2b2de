//! Broad randomized sweep; debug assertions inside the decoder (strong
//! duality, state validation) turn any inconsistency into a panic.

use blossom_core::decode::decode_batch_with;
use blossom_core::graph::{build_repetition_graph, build_surface_graph_3d};
use blossom_core::noise::{sample_errors, shot_seed, syndrome_from_errors, uniform_probabilities};
use blossom_core::oracle::{build_syndrome_graph, verify, ENUMERATION_CAP};
use blossom_core::stream::decode_stream_with;

#[test]
fn sweep() {
    let mut graphs = Vec::new();
    for d in [3_usize, 5] {
        graphs.push(build_repetition_graph(2 * d + 1, 0.05).unwrap());
        graphs.push(build_surface_graph_3d(d, d, 0.02, 0.02).unwrap());
        graphs.push(build_surface_graph_3d(d, d, 0.01, 0.05).unwrap());
        graphs.push(build_surface_graph_3d(d, 2 * d, 0.03, 0.008).unwrap());
    }
    let mut verified = 0_u64;
    let mut decoded = 0_u64;
    for (gi, graph) in graphs.iter().enumerate() {
        for p in [0.02, 0.08, 0.2] {
            let probabilities = uniform_probabilities(graph, p);
            let shots = 700;
            for shot in 0..shots {
                let seed = shot_seed(0xF422 ^ gi as u64, shot);
                let sample = sample_errors(graph, &probabilities, seed).unwrap();
                let defects = syndrome_from_errors(graph, &sample);
                let mut rounds = vec![Vec::new(); graph.layer_count()];
                for &d in &defects {
                    rounds[graph.vertex(d).layer].push(d);
                }
                for prematch in [true, false] {
                    let batch = decode_batch_with(graph, &defects, prematch).unwrap();
                    let stream = decode_stream_with(graph, &rounds, prematch).unwrap();
                    assert_eq!(
                        batch.solution.total_weight, stream.solution.total_weight,
                        "graph {gi} p {p} shot {shot} defects {defects:?}"
                    );
                    // termination stays linear-ish in the vertex count
                    let bound = 20 * graph.vertex_count() as u64 + 100;
                    assert!(batch.stats.grow_ops < bound, "{:?}", batch.stats);
                    assert!(stream.stats.grow_ops < bound, "{:?}", stream.stats);
                    decoded += 2;
                    if defects.len() <= ENUMERATION_CAP {
                        let sg = build_syndrome_graph(graph, &defects).unwrap();
                        for solution in [&batch.solution, &stream.solution] {
                            let verdict = verify(graph, &sg, solution).unwrap();
                            assert!(
                                verdict.is_optimal(),
                                "graph {gi} p {p} shot {shot} defects {defects:?}: {verdict:?}"
                            );
                            verified += 1;
                        }
                    }
                }
            }
        }
    }
    println!("sweep: {decoded} decodes, {verified} oracle-certified");
}
