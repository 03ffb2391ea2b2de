//! Independent exact reference for certifying matchings.
//!
//! Builds the syndrome graph (pairwise and boundary shortest-path distances
//! over the decoding graph) and finds the true minimum-weight perfect
//! matching by exhaustive enumeration over pairings and boundary matches.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{DecodingGraph, Weight};
use crate::primal::MatchingSolution;
use crate::shortest_path;
use crate::VertexIndex;

/// Enumeration bound: pairings grow with the double factorial, so the
/// exhaustive reference only accepts small defect sets.
pub const ENUMERATION_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    NotRegular(VertexIndex),
    TooManyDefects(usize),
    Unreachable(VertexIndex),
}

impl core::fmt::Display for OracleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::NotRegular(v) => write!(f, "defect {v} is not a regular vertex"),
            Self::TooManyDefects(n) => {
                write!(f, "{n} defects exceed the enumeration cap {ENUMERATION_CAP}")
            }
            Self::Unreachable(v) => write!(f, "defect {v} cannot reach the rest of the graph"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OracleError {}

/// Complete graph over the defects with shortest-path weights, plus each
/// defect's distance to the (collapsed) boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyndromeGraph {
    pub defects: Vec<VertexIndex>,
    /// `pairwise[i][j]`: distance between defects i and j.
    pub pairwise: Vec<Vec<Weight>>,
    /// Distance from defect i to the nearest virtual vertex.
    pub boundary: Vec<Weight>,
}

impl SyndromeGraph {
    fn index_of(&self, defect: VertexIndex) -> Option<usize> {
        self.defects.iter().position(|&d| d == defect)
    }
}

pub fn build_syndrome_graph(
    graph: &DecodingGraph,
    defects: &[VertexIndex],
) -> Result<SyndromeGraph, OracleError> {
    for &d in defects {
        if d >= graph.vertex_count() || graph.is_virtual(d) {
            return Err(OracleError::NotRegular(d));
        }
    }
    let n = defects.len();
    let mut pairwise = vec![vec![0; n]; n];
    let mut boundary = vec![0; n];
    for (i, &d) in defects.iter().enumerate() {
        let dist = shortest_path::distances(graph, d);
        let mut best_boundary: Option<Weight> = None;
        for v in 0..graph.vertex_count() {
            if graph.is_virtual(v) && dist[v] != Weight::MAX {
                best_boundary = Some(best_boundary.map_or(dist[v], |b: Weight| b.min(dist[v])));
            }
        }
        boundary[i] = best_boundary.ok_or(OracleError::Unreachable(d))?;
        for (j, &e) in defects.iter().enumerate() {
            if dist[e] == Weight::MAX {
                return Err(OracleError::Unreachable(e));
            }
            pairwise[i][j] = dist[e];
        }
    }
    Ok(SyndromeGraph {
        defects: defects.to_vec(),
        pairwise,
        boundary,
    })
}

/// The exhaustive optimum: how each defect is covered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleMatching {
    pub pairs: Vec<(VertexIndex, VertexIndex)>,
    pub boundary: Vec<VertexIndex>,
}

/// Minimum total weight over all ways to partition the defects into pairs
/// and boundary-matched singletons, by memoized enumeration over subsets.
pub fn exhaustive_mwpm(sg: &SyndromeGraph) -> Result<(Weight, OracleMatching), OracleError> {
    let n = sg.defects.len();
    if n > ENUMERATION_CAP {
        return Err(OracleError::TooManyDefects(n));
    }
    #[derive(Clone, Copy)]
    enum Choice {
        Boundary(usize),
        Pair(usize, usize),
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let mut best: Vec<Option<Weight>> = vec![None; (full as usize) + 1];
    let mut choice: Vec<Option<Choice>> = vec![None; (full as usize) + 1];
    best[0] = Some(0);
    // bottom-up over uncovered subsets, resolving the lowest uncovered defect
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut cost = best[rest as usize].map(|w| w + sg.boundary[i]);
        let mut taken = Choice::Boundary(i);
        let mut others = rest;
        while others != 0 {
            let j = others.trailing_zeros() as usize;
            others &= others - 1;
            let sub = rest & !(1 << j);
            if let Some(w) = best[sub as usize] {
                let candidate = w + sg.pairwise[i][j];
                if cost.is_none() || candidate < cost.unwrap() {
                    cost = Some(candidate);
                    taken = Choice::Pair(i, j);
                }
            }
        }
        best[mask as usize] = cost;
        choice[mask as usize] = Some(taken);
    }
    let weight = best[full as usize].expect("boundary matching always exists");
    let mut matching = OracleMatching {
        pairs: Vec::new(),
        boundary: Vec::new(),
    };
    let mut mask = full;
    while mask != 0 {
        match choice[mask as usize].expect("argmin recorded") {
            Choice::Boundary(i) => {
                matching.boundary.push(sg.defects[i]);
                mask &= !(1 << i);
            }
            Choice::Pair(i, j) => {
                matching.pairs.push((sg.defects[i], sg.defects[j]));
                mask &= !((1 << i) | (1 << j));
            }
        }
    }
    Ok((weight, matching))
}

/// The same graph under a vertex-id permutation: vertex `v` becomes
/// `permutation[v]`, edge ids and everything else stay put.
///
/// Decoding weights are invariant under relabeling, which gives a
/// degenerate-optima-safe cross-check on instances too large for the
/// exhaustive reference: compare weights, not matchings.
pub fn relabeled_graph(
    graph: &DecodingGraph,
    permutation: &[VertexIndex],
) -> Result<DecodingGraph, crate::graph::GraphError> {
    assert_eq!(permutation.len(), graph.vertex_count());
    let mut vertices: Vec<crate::VertexDescriptor> = graph.vertices().to_vec();
    for v in graph.vertices() {
        let mut moved = v.clone();
        moved.id = permutation[v.id];
        vertices[permutation[v.id]] = moved;
    }
    let edges = graph
        .edges()
        .iter()
        .map(|e| crate::EdgeDescriptor {
            id: e.id,
            endpoints: [permutation[e.endpoints[0]], permutation[e.endpoints[1]]],
            weight: e.weight,
        })
        .collect();
    DecodingGraph::new(vertices, edges, graph.max_weight())
}

/// Why a solution failed verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    Optimal,
    /// A defect is covered zero or multiple times, or a non-defect appears.
    BadCoverage { vertex: VertexIndex },
    /// The solution's recorded weight disagrees with its own matches.
    InconsistentWeight { recorded: Weight, recomputed: Weight },
    Suboptimal { solution: Weight, optimal: Weight },
}

impl VerifyOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, Self::Optimal)
    }
}

/// Recomputes the solution's weight from syndrome-graph distances and
/// compares with the exhaustive optimum.
pub fn verify(
    graph: &DecodingGraph,
    sg: &SyndromeGraph,
    solution: &MatchingSolution,
) -> Result<VerifyOutcome, OracleError> {
    let mut covered = vec![0_u32; sg.defects.len()];
    let mut recomputed: Weight = 0;

    let cover = |sg: &SyndromeGraph, covered: &mut Vec<u32>, v: VertexIndex| -> Option<usize> {
        let i = sg.index_of(v)?;
        covered[i] += 1;
        Some(i)
    };
    for &(a, b) in &solution.pairs {
        let (Some(i), Some(j)) = (cover(sg, &mut covered, a), cover(sg, &mut covered, b)) else {
            return Ok(VerifyOutcome::BadCoverage {
                vertex: if sg.index_of(a).is_none() { a } else { b },
            });
        };
        recomputed += sg.pairwise[i][j];
    }
    for &(v, _) in &solution.boundary_matches {
        let Some(i) = cover(sg, &mut covered, v) else {
            return Ok(VerifyOutcome::BadCoverage { vertex: v });
        };
        recomputed += sg.boundary[i];
    }
    for &e in &solution.prematched_edges {
        let [a, b] = graph.edge(e).endpoints;
        let in_sg = [sg.index_of(a), sg.index_of(b)];
        match in_sg {
            [Some(i), Some(j)] => {
                covered[i] += 1;
                covered[j] += 1;
                recomputed += sg.pairwise[i][j];
            }
            [Some(i), None] | [None, Some(i)] => {
                covered[i] += 1;
                recomputed += sg.boundary[i];
            }
            [None, None] => return Ok(VerifyOutcome::BadCoverage { vertex: a }),
        }
    }
    if let Some(i) = covered.iter().position(|&c| c != 1) {
        return Ok(VerifyOutcome::BadCoverage {
            vertex: sg.defects[i],
        });
    }
    if recomputed != solution.total_weight {
        return Ok(VerifyOutcome::InconsistentWeight {
            recorded: solution.total_weight,
            recomputed,
        });
    }
    let (optimal, _) = exhaustive_mwpm(sg)?;
    if recomputed != optimal {
        return Ok(VerifyOutcome::Suboptimal {
            solution: recomputed,
            optimal,
        });
    }
    Ok(VerifyOutcome::Optimal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_repetition_graph;

    #[test]
    fn syndrome_distances_on_chain() {
        let g = build_repetition_graph(5, 0.01).unwrap();
        // regular 0..3, virtual 4 (left), 5 (right); weights 28
        let sg = build_syndrome_graph(&g, &[0, 2]).unwrap();
        assert_eq!(sg.pairwise[0][1], 2 * 28);
        assert_eq!(sg.boundary, vec![28, 2 * 28]);
        assert_eq!(sg.pairwise[0][0], 0);
        assert!(build_syndrome_graph(&g, &[4]).is_err());
    }

    #[test]
    fn exhaustive_choices() {
        // pair cheaper than two boundary matches
        let sg = SyndromeGraph {
            defects: vec![7, 9],
            pairwise: vec![vec![0, 4], vec![4, 0]],
            boundary: vec![3, 3],
        };
        let (w, m) = exhaustive_mwpm(&sg).unwrap();
        assert_eq!(w, 4);
        assert_eq!(m.pairs, vec![(7, 9)]);
        // boundary cheaper than the pair
        let sg = SyndromeGraph {
            defects: vec![7, 9],
            pairwise: vec![vec![0, 8], vec![8, 0]],
            boundary: vec![3, 3],
        };
        let (w, m) = exhaustive_mwpm(&sg).unwrap();
        assert_eq!(w, 6);
        assert_eq!(m.boundary, vec![7, 9]);
        // empty syndrome
        let sg = SyndromeGraph {
            defects: vec![],
            pairwise: vec![],
            boundary: vec![],
        };
        assert_eq!(exhaustive_mwpm(&sg).unwrap().0, 0);
    }

    #[test]
    fn enumeration_cap() {
        let n = ENUMERATION_CAP + 1;
        let sg = SyndromeGraph {
            defects: (0..n).collect(),
            pairwise: vec![vec![2; n]; n],
            boundary: vec![1; n],
        };
        assert_eq!(exhaustive_mwpm(&sg), Err(OracleError::TooManyDefects(n)));
    }

    #[test]
    fn exhaustive_invariant_under_reordering() {
        let g = build_repetition_graph(9, 0.01).unwrap();
        let defects = [0, 1, 4, 6, 7];
        let (w, _) = exhaustive_mwpm(&build_syndrome_graph(&g, &defects).unwrap()).unwrap();
        let shuffled = [6, 0, 7, 4, 1];
        let (w2, _) = exhaustive_mwpm(&build_syndrome_graph(&g, &shuffled).unwrap()).unwrap();
        assert_eq!(w, w2);
    }

    #[test]
    fn verify_flags_bad_solutions() {
        let g = build_repetition_graph(5, 0.01).unwrap();
        let sg = build_syndrome_graph(&g, &[0, 1]).unwrap();
        let optimal = MatchingSolution {
            pairs: vec![(0, 1)],
            total_weight: 28,
            ..Default::default()
        };
        assert_eq!(
            verify(&g, &sg, &optimal).unwrap(),
            VerifyOutcome::Optimal
        );
        // suboptimal: both to their boundaries (28 + 56)
        let sub = MatchingSolution {
            boundary_matches: vec![(0, 4), (1, 5)],
            total_weight: 28 + 56,
            ..Default::default()
        };
        assert_eq!(
            verify(&g, &sg, &sub).unwrap(),
            VerifyOutcome::Suboptimal {
                solution: 84,
                optimal: 28
            }
        );
        // a defect matched twice
        let double = MatchingSolution {
            pairs: vec![(0, 1)],
            boundary_matches: vec![(0, 4)],
            total_weight: 56,
            ..Default::default()
        };
        assert!(matches!(
            verify(&g, &sg, &double).unwrap(),
            VerifyOutcome::BadCoverage { .. }
        ));
        // lying about one's own weight
        let liar = MatchingSolution {
            pairs: vec![(0, 1)],
            total_weight: 30,
            ..Default::default()
        };
        assert!(matches!(
            verify(&g, &sg, &liar).unwrap(),
            VerifyOutcome::InconsistentWeight { .. }
        ));
    }
}
