//! Seeded error sampling, syndrome extraction and logical-error checks.
//!
//! Randomness comes from a counter-based generator: every (seed, edge) pair
//! hashes through three rounds of the splitmix64 finalizer into a uniform
//! variate, so samples are reproducible across platforms and shots can be
//! drawn in any order or in parallel.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::DecodingGraph;
use crate::primal::MatchingSolution;
use crate::shortest_path;
use crate::{EdgeIndex, VertexIndex};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NoiseError {
    /// One probability per edge required.
    ProbabilityLengthMismatch { expected: usize, got: usize },
    /// Logical-cut derivation needs vertex positions.
    MissingPositions,
}

impl core::fmt::Display for NoiseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::ProbabilityLengthMismatch { expected, got } => {
                write!(f, "expected {expected} edge probabilities, got {got}")
            }
            Self::MissingPositions => write!(f, "graph lacks positions for the logical cut"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NoiseError {}

/// One drawn error pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorSample {
    pub flipped_edges: Vec<EdgeIndex>,
    pub seed: u64,
}

/// splitmix64 finalizer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Uniform variate in [0, 1) for a (seed, counter) pair.
fn unit_variate(seed: u64, counter: u64) -> f64 {
    let bits = splitmix64(splitmix64(seed).wrapping_add(counter));
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derives an independent stream seed per shot.
pub fn shot_seed(campaign_seed: u64, shot: u64) -> u64 {
    splitmix64(splitmix64(campaign_seed) ^ shot)
}

/// Uniform probability for every edge.
pub fn uniform_probabilities(graph: &DecodingGraph, p: f64) -> Vec<f64> {
    vec![p; graph.edge_count()]
}

/// `p_space` on same-layer edges, `p_time` on cross-layer edges.
pub fn edge_probabilities(graph: &DecodingGraph, p_space: f64, p_time: f64) -> Vec<f64> {
    graph
        .edges()
        .iter()
        .map(|e| {
            let [a, b] = e.endpoints;
            if graph.vertex(a).layer == graph.vertex(b).layer {
                p_space
            } else {
                p_time
            }
        })
        .collect()
}

/// Flips each edge independently with its probability.
pub fn sample_errors(
    graph: &DecodingGraph,
    probabilities: &[f64],
    seed: u64,
) -> Result<ErrorSample, NoiseError> {
    if probabilities.len() != graph.edge_count() {
        return Err(NoiseError::ProbabilityLengthMismatch {
            expected: graph.edge_count(),
            got: probabilities.len(),
        });
    }
    let flipped_edges = (0..graph.edge_count())
        .filter(|&e| unit_variate(seed, e as u64) < probabilities[e])
        .collect();
    Ok(ErrorSample {
        flipped_edges,
        seed,
    })
}

/// Regular vertices incident to an odd number of flipped edges.
pub fn syndrome_from_errors(graph: &DecodingGraph, sample: &ErrorSample) -> Vec<VertexIndex> {
    let mut parity = vec![false; graph.vertex_count()];
    for &e in &sample.flipped_edges {
        for v in graph.edge(e).endpoints {
            parity[v] = !parity[v];
        }
    }
    (0..graph.vertex_count())
        .filter(|&v| parity[v] && !graph.is_virtual(v))
        .collect()
}

/// The logical cut of a generated graph family: every edge incident to a
/// virtual vertex on the leftmost boundary column (smallest x position).
pub fn logical_cut(graph: &DecodingGraph) -> Result<Vec<EdgeIndex>, NoiseError> {
    let mut min_x: Option<f64> = None;
    for v in graph.vertices() {
        if v.is_virtual {
            let x = v.position.ok_or(NoiseError::MissingPositions)?[0];
            min_x = Some(min_x.map_or(x, |m: f64| m.min(x)));
        }
    }
    let min_x = min_x.ok_or(NoiseError::MissingPositions)?;
    let mut cut = Vec::new();
    for e in graph.edges() {
        let in_cut = e.endpoints.iter().any(|&v| {
            let vertex = graph.vertex(v);
            vertex.is_virtual && vertex.position.map(|p| p[0] == min_x).unwrap_or(false)
        });
        if in_cut {
            cut.push(e.id);
        }
    }
    Ok(cut)
}

/// Edge set of the reconstructed correction: the canonical shortest path for
/// every matched pair and boundary match, the edge itself for surviving
/// pre-matched edges.
pub fn correction_edges(graph: &DecodingGraph, solution: &MatchingSolution) -> Vec<EdgeIndex> {
    let mut correction = Vec::new();
    for &(a, b) in &solution.pairs {
        correction.extend(shortest_path::shortest_path_edges(graph, a, b));
    }
    for &(v, target) in &solution.boundary_matches {
        correction.extend(shortest_path::shortest_path_edges(graph, v, target));
    }
    correction.extend(solution.prematched_edges.iter().copied());
    correction
}

/// Whether errors XOR correction cross the logical cut an odd number of
/// times.
pub fn check_logical_error(
    graph: &DecodingGraph,
    sample: &ErrorSample,
    solution: &MatchingSolution,
    cut: &[EdgeIndex],
) -> bool {
    let mut in_cut = vec![false; graph.edge_count()];
    for &e in cut {
        in_cut[e] = true;
    }
    let mut crossings = 0_usize;
    for &e in &sample.flipped_edges {
        if in_cut[e] {
            crossings += 1;
        }
    }
    for e in correction_edges(graph, solution) {
        if in_cut[e] {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::decode_batch;
    use crate::graph::build_repetition_graph;

    #[test]
    fn degenerate_probabilities() {
        let g = build_repetition_graph(5, 0.01).unwrap();
        let zero = sample_errors(&g, &uniform_probabilities(&g, 0.0), 7).unwrap();
        assert!(zero.flipped_edges.is_empty());
        let one = sample_errors(&g, &uniform_probabilities(&g, 1.0), 7).unwrap();
        assert_eq!(one.flipped_edges.len(), g.edge_count());
        assert!(sample_errors(&g, &[0.5], 7).is_err());
    }

    #[test]
    fn seeded_reproducibility() {
        let g = build_repetition_graph(11, 0.01).unwrap();
        let p = uniform_probabilities(&g, 0.3);
        assert_eq!(
            sample_errors(&g, &p, 42).unwrap(),
            sample_errors(&g, &p, 42).unwrap()
        );
        assert_ne!(
            sample_errors(&g, &p, 42).unwrap(),
            sample_errors(&g, &p, 43).unwrap()
        );
    }

    #[test]
    fn syndrome_parity() {
        let g = build_repetition_graph(5, 0.01).unwrap();
        // interior edge flips both endpoints
        let sample = ErrorSample {
            flipped_edges: vec![1],
            seed: 0,
        };
        assert_eq!(syndrome_from_errors(&g, &sample), vec![0, 1]);
        // boundary edge: single defect, virtual endpoint excluded
        let sample = ErrorSample {
            flipped_edges: vec![0],
            seed: 0,
        };
        assert_eq!(syndrome_from_errors(&g, &sample), vec![0]);
        // adjacent edges cancel on the shared vertex
        let sample = ErrorSample {
            flipped_edges: vec![1, 2],
            seed: 0,
        };
        assert_eq!(syndrome_from_errors(&g, &sample), vec![0, 2]);
    }

    #[test]
    fn logical_cut_of_chain_is_left_edge() {
        let g = build_repetition_graph(5, 0.01).unwrap();
        assert_eq!(logical_cut(&g).unwrap(), vec![0]);
    }

    #[test]
    fn logical_error_cases() {
        let g = build_repetition_graph(3, 0.01).unwrap();
        let cut = logical_cut(&g).unwrap();
        // error-free, empty solution
        let empty = ErrorSample {
            flipped_edges: vec![],
            seed: 0,
        };
        let outcome = decode_batch(&g, &[]).unwrap();
        assert!(!check_logical_error(&g, &empty, &outcome.solution, &cut));
        // single left-boundary error decoded correctly: correction equals the
        // error, no logical flip
        let sample = ErrorSample {
            flipped_edges: vec![0],
            seed: 0,
        };
        let defects = syndrome_from_errors(&g, &sample);
        let outcome = decode_batch(&g, &defects).unwrap();
        assert!(!check_logical_error(&g, &sample, &outcome.solution, &cut));
        // same syndrome corrected to the opposite boundary: logical error
        let wrong = MatchingSolution {
            boundary_matches: vec![(0, 3)],
            total_weight: 56,
            ..Default::default()
        };
        assert!(check_logical_error(&g, &sample, &wrong, &cut));
    }
}
