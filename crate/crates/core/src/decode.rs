//! Batch decoding driver.
//!
//! Drives the accelerator/primal pair: load defects, then loop over conflict
//! queries, resolving conflicts in software and growing by the reported safe
//! length (capped by the smallest shrinking dual variable) until quiescent.

use alloc::vec;
use alloc::vec::Vec;

use crate::accelerator::{AcceleratorError, DualAccelerator, GrowthDirection, Response};
use crate::graph::{DecodingGraph, Weight};
use crate::primal::{DualCertificate, MatchingSolution, NodeKind, PrimalState};
use crate::{NodeIndex, VertexIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    /// Defects must be distinct regular vertices.
    InvalidDefect(VertexIndex),
    Accelerator(AcceleratorError),
    /// Stream decoding needs exactly one defect list per measurement round.
    RoundCountMismatch { expected: usize, got: usize },
}

impl From<AcceleratorError> for DecodeError {
    fn from(e: AcceleratorError) -> Self {
        Self::Accelerator(e)
    }
}

impl core::fmt::Display for DecodeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::InvalidDefect(v) => write!(f, "defect {v} is not a distinct regular vertex"),
            Self::Accelerator(e) => write!(f, "{e}"),
            Self::RoundCountMismatch { expected, got } => {
                write!(f, "expected {expected} rounds, got {got}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DecodeError {}

/// Counters of one decoding run.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeStats {
    /// Accelerator cycles consumed.
    pub cycles: u64,
    /// Conflict reports delivered to software.
    pub conflicts: u64,
    pub grow_ops: u64,
    pub blossom_expansions: u64,
    /// Shrinking singletons that hit dual zero and wedged their tree into a
    /// blossom through the synthesized parent-child conflict.
    pub singleton_exhaustions: u64,
    /// One-sided growth steps taken to break odd-slack deadlocks.
    pub wedge_breaks: u64,
    pub defects: usize,
    /// Cycles consumed per round drain (stream decoding only).
    pub round_cycles: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    pub solution: MatchingSolution,
    pub certificates: Vec<DualCertificate>,
    pub stats: DecodeStats,
}

/// Accelerator plus primal state with the drive loop.
#[derive(Debug)]
pub(crate) struct Decoder<'g> {
    pub accel: DualAccelerator<'g>,
    pub primal: PrimalState,
    pub grow_ops: u64,
    pub blossom_expansions: u64,
    pub singleton_exhaustions: u64,
    pub wedge_breaks: u64,
}

impl<'g> Decoder<'g> {
    pub fn new(graph: &'g DecodingGraph, prematch: bool) -> Self {
        Self {
            accel: DualAccelerator::with_prematch(graph, prematch),
            primal: PrimalState::new(graph.vertex_count()),
            grow_ops: 0,
            blossom_expansions: 0,
            singleton_exhaustions: 0,
            wedge_breaks: 0,
        }
    }

    /// Runs conflict queries until nothing grows and nothing is tight
    /// between distinct covers.
    pub fn drain(&mut self) {
        loop {
            match self.accel.find_conflict() {
                Response::Conflict(conflict) => {
                    self.primal.interactions += 1;
                    self.primal.resolve(&mut self.accel, &conflict);
                }
                Response::NoObstacle { max_growth } => {
                    if let Some((node, 0)) = self.primal.min_shrinking_dual(&self.accel) {
                        self.handle_exhausted(node);
                        continue;
                    }
                    let cap = self.primal.min_shrinking_dual(&self.accel).map(|(_, y)| y);
                    let step = match (max_growth, cap) {
                        (None, None) => return,
                        (Some(l), None) => l,
                        (None, Some(y)) => y,
                        (Some(l), Some(y)) => l.min(y),
                    };
                    if step == 0 {
                        self.break_wedge();
                        continue;
                    }
                    self.accel.grow(step);
                    self.primal.apply_growth(step);
                    self.grow_ops += 1;
                }
            }
        }
    }

    /// A shrinking node ran its dual variable down to zero: blossoms expand,
    /// singletons wedge their tree into a blossom through the synthesized
    /// parent-child conflict.
    fn handle_exhausted(&mut self, node: NodeIndex) {
        let is_blossom = matches!(
            self.primal.node(node).map(|n| &n.kind),
            Some(NodeKind::Blossom { .. })
        );
        if is_blossom {
            self.primal.handle_blossom_expand(&mut self.accel, node);
            self.blossom_expansions += 1;
        } else {
            self.primal.handle_singleton_exhausted(&mut self.accel, node);
            self.singleton_exhaustions += 1;
        }
    }

    /// Two covers of unequal residue parity can stall one unit short of
    /// tightness under symmetric growth. A single one-sided growth step (one
    /// structure active, all else frozen) restores progress, exactly like the
    /// classic per-tree dual adjustment.
    fn break_wedge(&mut self) {
        let (_, node_a, _) = self
            .accel
            .find_odd_slack_edge()
            .expect("zero growth without a conflict implies an odd-slack edge");
        let active = self.accel.active_nodes();
        for &(node, _) in &active {
            self.accel.set_direction(node, GrowthDirection::Stay);
        }
        // activate one side: the whole alternating structure of node_a
        let activated: Vec<NodeIndex> = match self.primal.node(node_a) {
            Some(_) => self.primal.structure_of(node_a),
            None => vec![node_a],
        };
        for &id in &activated {
            match self.primal.node(id) {
                Some(record) => {
                    let direction = record.direction();
                    self.accel.set_direction(id, direction);
                }
                None => self.accel.set_direction(id, GrowthDirection::Grow),
            }
        }
        match self.accel.find_conflict() {
            Response::Conflict(conflict) => {
                self.primal.interactions += 1;
                self.primal.resolve(&mut self.accel, &conflict);
            }
            Response::NoObstacle { max_growth } => {
                let known: Vec<NodeIndex> = activated
                    .iter()
                    .copied()
                    .filter(|&id| self.primal.node(id).is_some())
                    .collect();
                let cap = known
                    .iter()
                    .filter_map(|&id| {
                        let record = self.primal.node(id).unwrap();
                        (record.direction() == GrowthDirection::Shrink).then_some(record.dual)
                    })
                    .min();
                let step = match (max_growth, cap) {
                    (Some(l), Some(y)) => l.min(y),
                    (Some(l), None) => l,
                    (None, Some(y)) => y,
                    (None, None) => unreachable!("an active cover is always bounded"),
                };
                assert!(step >= 1, "one-sided growth always makes progress");
                self.accel.grow(step);
                self.primal.apply_growth_subset(&self.accel, &known, step);
            }
        }
        // restore structural directions everywhere
        self.primal.sync_all_directions(&mut self.accel);
        for &(node, direction) in &active {
            if self.primal.node(node).is_none() {
                self.accel.set_direction(node, direction);
            }
        }
        self.wedge_breaks += 1;
    }

    pub fn finish(self, defects: usize, round_cycles: Vec<u64>) -> DecodeOutcome {
        let (solution, certificates) = self.primal.extract_matching(&self.accel);
        debug_assert_eq!(
            self.primal.dual_objective(&self.accel, &solution),
            solution.total_weight,
            "strong duality certifies the matching"
        );
        debug_assert_eq!(self.accel.validate(), Ok(()));
        let stats = DecodeStats {
            cycles: self.accel.cycle_count(),
            conflicts: self.primal.interactions,
            grow_ops: self.grow_ops,
            blossom_expansions: self.blossom_expansions,
            singleton_exhaustions: self.singleton_exhaustions,
            wedge_breaks: self.wedge_breaks,
            defects,
            round_cycles,
        };
        DecodeOutcome {
            solution,
            certificates,
            stats,
        }
    }
}

pub(crate) fn check_defects(
    graph: &DecodingGraph,
    defects: &[VertexIndex],
) -> Result<(), DecodeError> {
    let mut seen = vec![false; graph.vertex_count()];
    for &d in defects {
        if d >= graph.vertex_count() || graph.is_virtual(d) || seen[d] {
            return Err(DecodeError::InvalidDefect(d));
        }
        seen[d] = true;
    }
    Ok(())
}

/// Decodes a full syndrome with every measurement round loaded up front.
pub fn decode_batch(
    graph: &DecodingGraph,
    defects: &[VertexIndex],
) -> Result<DecodeOutcome, DecodeError> {
    decode_batch_with(graph, defects, true)
}

pub fn decode_batch_with(
    graph: &DecodingGraph,
    defects: &[VertexIndex],
    prematch: bool,
) -> Result<DecodeOutcome, DecodeError> {
    check_defects(graph, defects)?;
    let mut decoder = Decoder::new(graph, prematch);
    for layer in 0..graph.layer_count() {
        let in_layer: Vec<VertexIndex> = defects
            .iter()
            .copied()
            .filter(|&d| graph.vertex(d).layer == layer)
            .collect();
        decoder.accel.load_defects(layer, &in_layer)?;
    }
    decoder.drain();
    Ok(decoder.finish(defects.len(), Vec::new()))
}

/// Convenience: total weight of an optimal matching for a syndrome.
pub fn decode_weight(graph: &DecodingGraph, defects: &[VertexIndex]) -> Result<Weight, DecodeError> {
    Ok(decode_batch(graph, defects)?.solution.total_weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DecodingGraph, EdgeDescriptor, VertexDescriptor};
    use crate::oracle::{build_syndrome_graph, verify, VerifyOutcome};
    use alloc::vec;

    /// Chain with the given edge weights; first and last vertices virtual.
    fn chain(weights: &[Weight]) -> DecodingGraph {
        let regular = weights.len() - 1;
        let mut vertices: Vec<VertexDescriptor> = (0..regular)
            .map(|id| VertexDescriptor {
                id,
                is_virtual: false,
                layer: 0,
                position: Some([(id + 1) as f64, 0.0, 0.0]),
            })
            .collect();
        vertices.push(VertexDescriptor {
            id: regular,
            is_virtual: true,
            layer: 0,
            position: Some([0.0, 0.0, 0.0]),
        });
        vertices.push(VertexDescriptor {
            id: regular + 1,
            is_virtual: true,
            layer: 0,
            position: Some([(regular + 1) as f64, 0.0, 0.0]),
        });
        let mut edges = vec![EdgeDescriptor {
            id: 0,
            endpoints: [regular, 0],
            weight: weights[0],
        }];
        for i in 0..regular - 1 {
            edges.push(EdgeDescriptor {
                id: i + 1,
                endpoints: [i, i + 1],
                weight: weights[i + 1],
            });
        }
        edges.push(EdgeDescriptor {
            id: regular,
            endpoints: [regular - 1, regular + 1],
            weight: weights[regular],
        });
        DecodingGraph::new(vertices, edges, 14).unwrap()
    }

    /// Five colinear defects walk through the whole machinery: pair match,
    /// tree formation, singleton exhaustion into a blossom, blossom matching,
    /// then the blossom shrinks to zero and expands.
    #[test]
    fn blossom_forms_and_expands() {
        let g = chain(&[28, 8, 2, 2, 8, 28]);
        let defects = [0, 1, 2, 3, 4];
        let outcome = decode_batch_with(&g, &defects, false).unwrap();
        assert!(outcome.stats.singleton_exhaustions >= 1);
        assert!(outcome.stats.blossom_expansions >= 1);
        let sg = build_syndrome_graph(&g, &defects).unwrap();
        assert_eq!(
            verify(&g, &sg, &outcome.solution).unwrap(),
            VerifyOutcome::Optimal
        );
    }

    /// Two covers of opposite residue parity stall one unit apart; the
    /// one-sided growth step resolves it exactly.
    #[test]
    fn odd_slack_wedge_breaks() {
        let g = chain(&[28, 26, 28]);
        let mut decoder = Decoder::new(&g, false);
        decoder.accel.load_defects(0, &[0, 1]).unwrap();
        // force opposite parities: one side grows a unit alone
        decoder.accel.set_direction(1, GrowthDirection::Stay);
        decoder.accel.grow(1);
        decoder.accel.set_direction(1, GrowthDirection::Grow);
        decoder.drain();
        let outcome = decoder.finish(2, Vec::new());
        assert!(outcome.stats.wedge_breaks >= 1);
        assert_eq!(outcome.solution.total_weight, 26);
        assert_eq!(outcome.solution.pairs, vec![(0, 1)]);
    }

    /// Exhaustion of a shrinking singleton wedges its tree into a blossom.
    #[test]
    fn singleton_exhaustion_is_exact() {
        // A - B - C equally spaced, boundaries far: C conflicts with the
        // matched pair (A, B), B shrinks to zero
        let g = chain(&[28, 4, 4, 28]);
        let defects = [0, 1, 2];
        let outcome = decode_batch_with(&g, &defects, false).unwrap();
        assert!(outcome.stats.singleton_exhaustions >= 1);
        let sg = build_syndrome_graph(&g, &defects).unwrap();
        assert_eq!(
            verify(&g, &sg, &outcome.solution).unwrap(),
            VerifyOutcome::Optimal
        );
    }
}
