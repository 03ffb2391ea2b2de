//! Round-wise fusion driver for stream decoding.
//!
//! Measurement rounds feed into the accelerator one layer at a time; the
//! not-yet-loaded layers act as the fusion boundary. Loading a round turns
//! its vertices from boundary into interior, so the software breaks every
//! match that leaned on them and lets the decode loop re-resolve. The final
//! solution weight equals batch decoding on the same syndrome.

use alloc::vec::Vec;

use crate::decode::{check_defects, DecodeError, DecodeOutcome, Decoder};
use crate::graph::DecodingGraph;
use crate::{Layer, VertexIndex};

#[derive(Debug)]
pub struct StreamContext<'g> {
    decoder: Decoder<'g>,
    graph: &'g DecodingGraph,
    next_layer: Layer,
    round_cycles: Vec<u64>,
    total_defects: usize,
}

impl<'g> StreamContext<'g> {
    pub fn new(graph: &'g DecodingGraph) -> Self {
        Self::with_prematch(graph, true)
    }

    pub fn with_prematch(graph: &'g DecodingGraph, prematch: bool) -> Self {
        Self {
            decoder: Decoder::new(graph, prematch),
            graph,
            next_layer: 0,
            round_cycles: Vec::new(),
            total_defects: 0,
        }
    }

    pub fn loaded_layers(&self) -> usize {
        self.next_layer
    }

    /// Issues the load for the next layer; layers load strictly in order.
    pub fn load_round(&mut self, defects: &[VertexIndex]) -> Result<Layer, DecodeError> {
        if self.next_layer > self.graph.max_layer() {
            return Err(DecodeError::RoundCountMismatch {
                expected: self.graph.layer_count(),
                got: self.next_layer + 1,
            });
        }
        check_defects(self.graph, defects)?;
        let layer = self.next_layer;
        self.decoder.accel.load_defects(layer, defects)?;
        self.next_layer += 1;
        self.total_defects += defects.len();
        Ok(layer)
    }

    /// Breaks matches into the just-loaded layer: their boundary endpoints
    /// became interior, so the affected nodes revert to growing roots.
    /// Hardware pre-matches into the layer dissolve on their own.
    pub fn fuse_round(&mut self) -> usize {
        debug_assert!(self.next_layer > 0, "fuse follows a load");
        let layer = self.next_layer - 1;
        let graph = self.graph;
        self.decoder
            .primal
            .break_boundary_matches(&mut self.decoder.accel, |v| {
                graph.vertex(v).layer == layer && !graph.is_virtual(v)
            })
    }

    /// Resolves conflicts until quiescent and records the round's cycles.
    pub fn drain_round(&mut self) {
        let before = self.decoder.accel.cycle_count();
        self.decoder.drain();
        self.round_cycles
            .push(self.decoder.accel.cycle_count() - before);
    }

    /// All rounds must have been loaded before extraction.
    pub fn finish(self) -> Result<DecodeOutcome, DecodeError> {
        if self.next_layer != self.graph.layer_count() {
            return Err(DecodeError::RoundCountMismatch {
                expected: self.graph.layer_count(),
                got: self.next_layer,
            });
        }
        Ok(self.decoder.finish(self.total_defects, self.round_cycles))
    }
}

/// Stream-decodes one defect list per measurement round.
pub fn decode_stream(
    graph: &DecodingGraph,
    rounds: &[Vec<VertexIndex>],
) -> Result<DecodeOutcome, DecodeError> {
    decode_stream_with(graph, rounds, true)
}

pub fn decode_stream_with(
    graph: &DecodingGraph,
    rounds: &[Vec<VertexIndex>],
    prematch: bool,
) -> Result<DecodeOutcome, DecodeError> {
    if rounds.len() != graph.layer_count() {
        return Err(DecodeError::RoundCountMismatch {
            expected: graph.layer_count(),
            got: rounds.len(),
        });
    }
    let mut context = StreamContext::with_prematch(graph, prematch);
    for round in rounds {
        context.load_round(round)?;
        context.fuse_round();
        context.drain_round();
    }
    context.finish()
}
