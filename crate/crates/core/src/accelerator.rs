//! Dual-phase accelerator: a deterministic, synchronously stepped simulation
//! of the per-vertex and per-edge processing-unit array.
//!
//! Each vertex holds a compact state (unique touch, unique node, residue,
//! direction, defect/boundary flags); each edge holds only its weight.
//! Instructions are broadcast to all units; every unit updates from its own
//! state and that of its immediate neighbors, and responses are convergecast
//! into a single [`Response`]. Cycle accounting models this structure:
//! one cycle per broadcast, one per cover-propagation pass, and a
//! `ceil(log2 |E|)` convergecast depth per conflict query.
//!
//! An unloaded or virtual vertex (`is_boundary`) acts as a defect vertex
//! whose cover never grows: its effective touch and node are the vertex
//! itself, with residue 0 and direction 0.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{DecodingGraph, Weight};
use crate::{EdgeIndex, Layer, NodeIndex, VertexIndex};

/// Growth direction of a node, mirrored into every vertex it covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GrowthDirection {
    Shrink,
    Stay,
    Grow,
}

impl GrowthDirection {
    pub fn unit(self) -> Weight {
        match self {
            Self::Shrink => -1,
            Self::Stay => 0,
            Self::Grow => 1,
        }
    }
}

/// Compact per-vertex state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexState {
    /// Unique touch: nearest touching defect, or none.
    pub touch: Option<VertexIndex>,
    /// Unique node: the touch's outermost node, or none.
    pub node: Option<NodeIndex>,
    /// Distance from this vertex to the boundary of the touching cover.
    pub residue: Weight,
    /// Direction of the unique node.
    pub direction: GrowthDirection,
    /// Whether this vertex carries a defect.
    pub is_defect: bool,
    /// Whether this vertex currently acts as boundary (virtual or unloaded).
    pub is_boundary: bool,
    /// Vertex index.
    pub index: VertexIndex,
}

/// Which pre-match condition an edge satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreMatchKind {
    /// Isolated pair of defects on a regular edge.
    Regular,
    /// Defect next to a true (virtual-vertex) boundary.
    Boundary,
    /// Defect next to the fusion boundary of an unloaded layer.
    Fusion,
}

/// Derived per-edge view; edges only store their weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeView {
    pub weight: Weight,
    /// `r_u + r_v >= w_e`.
    pub tight: bool,
    /// Tight with a non-boundary peer of a different node; fusion-boundary
    /// tightness is volatile and excluded.
    pub nonvolatile_tight: bool,
    pub prematch: Option<PreMatchKind>,
}

/// Conflict report: a tight edge between two distinct nodes with positive
/// combined growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict {
    pub vertex_1: VertexIndex,
    pub vertex_2: VertexIndex,
    pub node_1: NodeIndex,
    pub node_2: NodeIndex,
    pub touch_1: VertexIndex,
    pub touch_2: VertexIndex,
    pub edge: EdgeIndex,
}

/// Convergecast result of a conflict query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    /// No conflict; maximum safe growth length, `None` when unbounded.
    NoObstacle { max_growth: Option<Weight> },
    Conflict(Conflict),
}

impl Response {
    pub fn is_conflict(&self) -> bool {
        matches!(self, Self::Conflict(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceleratorError {
    UnknownLayer(Layer),
    LayerAlreadyLoaded(Layer),
    /// Defect vertex not part of the named layer.
    DefectNotInLayer(VertexIndex),
    /// Virtual vertices never carry defects.
    VirtualDefect(VertexIndex),
    /// Defect bitset length must equal the layer's vertex count.
    BadBitsetLength,
}

impl core::fmt::Display for AcceleratorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::UnknownLayer(l) => write!(f, "unknown layer {l}"),
            Self::LayerAlreadyLoaded(l) => write!(f, "layer {l} already loaded"),
            Self::DefectNotInLayer(v) => write!(f, "defect vertex {v} not in the loaded layer"),
            Self::VirtualDefect(v) => write!(f, "virtual vertex {v} cannot carry a defect"),
            Self::BadBitsetLength => write!(f, "defect bitset length mismatch"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AcceleratorError {}

/// The processing-unit array.
#[derive(Debug, Clone)]
pub struct DualAccelerator<'g> {
    graph: &'g DecodingGraph,
    vertices: Vec<VertexState>,
    /// Pre-match flags per edge, recomputed combinationally before every
    /// instruction (volatile).
    prematch: Vec<Option<PreMatchKind>>,
    /// Effective direction forced to 0 across the whole cover of any
    /// pre-matched (singleton) node.
    masked: Vec<bool>,
    layer_loaded: Vec<bool>,
    prematch_enabled: bool,
    cycle_count: u64,
}

impl<'g> DualAccelerator<'g> {
    /// A freshly reset array with pre-matching enabled.
    pub fn new(graph: &'g DecodingGraph) -> Self {
        Self::with_prematch(graph, true)
    }

    pub fn with_prematch(graph: &'g DecodingGraph, prematch_enabled: bool) -> Self {
        let mut accel = Self {
            graph,
            vertices: Vec::new(),
            prematch: Vec::new(),
            masked: Vec::new(),
            layer_loaded: Vec::new(),
            prematch_enabled,
            cycle_count: 0,
        };
        accel.reset();
        accel.cycle_count = 0;
        accel
    }

    pub fn graph(&self) -> &'g DecodingGraph {
        self.graph
    }

    pub fn cycle_count(&self) -> u64 {
        self.cycle_count
    }

    pub fn prematch_enabled(&self) -> bool {
        self.prematch_enabled
    }

    pub fn vertex_state(&self, v: VertexIndex) -> &VertexState {
        &self.vertices[v]
    }

    /// Readback of a defect vertex's residue; equals the dual-variable sum of
    /// the nodes containing it, which the software uses when it first learns
    /// about a defect from a conflict report.
    pub fn defect_residue(&self, v: VertexIndex) -> Weight {
        debug_assert!(self.vertices[v].is_defect);
        self.vertices[v].residue
    }

    /// All layers unloaded, every vertex boundary.
    pub fn reset(&mut self) {
        self.vertices = (0..self.graph.vertex_count())
            .map(|index| VertexState {
                touch: None,
                node: None,
                residue: 0,
                direction: GrowthDirection::Stay,
                is_defect: false,
                is_boundary: true,
                index,
            })
            .collect();
        self.prematch = vec![None; self.graph.edge_count()];
        self.masked = vec![false; self.graph.vertex_count()];
        self.layer_loaded = vec![false; self.graph.layer_count()];
        self.cycle_count += 1;
    }

    /// Loads one measurement round: every regular vertex of the layer stops
    /// acting as boundary and defect vertices start growing.
    ///
    /// `bits` is indexed over [`DecodingGraph::layer_vertices`] order; bits on
    /// virtual vertices must be false.
    pub fn load_defect_bits(&mut self, layer: Layer, bits: &[bool]) -> Result<(), AcceleratorError> {
        if layer >= self.layer_loaded.len() {
            return Err(AcceleratorError::UnknownLayer(layer));
        }
        if self.layer_loaded[layer] {
            return Err(AcceleratorError::LayerAlreadyLoaded(layer));
        }
        let members = self.graph.layer_vertices(layer);
        if bits.len() != members.len() {
            return Err(AcceleratorError::BadBitsetLength);
        }
        self.refresh_prematch();
        for (&v, &defect) in members.iter().zip(bits) {
            if self.graph.is_virtual(v) {
                if defect {
                    return Err(AcceleratorError::VirtualDefect(v));
                }
                continue;
            }
            let state = &mut self.vertices[v];
            state.is_boundary = false;
            state.is_defect = defect;
            if defect {
                state.touch = Some(v);
                state.node = Some(v);
                state.direction = GrowthDirection::Grow;
            } else {
                state.touch = None;
                state.node = None;
                state.direction = GrowthDirection::Stay;
            }
            state.residue = 0;
        }
        self.layer_loaded[layer] = true;
        let iterations = self.update_cover();
        self.cycle_count += 1 + iterations as u64;
        Ok(())
    }

    /// [`Self::load_defect_bits`] from a list of defect vertex ids.
    pub fn load_defects(
        &mut self,
        layer: Layer,
        defects: &[VertexIndex],
    ) -> Result<(), AcceleratorError> {
        if layer >= self.layer_loaded.len() {
            return Err(AcceleratorError::UnknownLayer(layer));
        }
        let members = self.graph.layer_vertices(layer);
        let mut bits = vec![false; members.len()];
        for &d in defects {
            match members.binary_search(&d) {
                Ok(i) => bits[i] = true,
                Err(_) => return Err(AcceleratorError::DefectNotInLayer(d)),
            }
        }
        self.load_defect_bits(layer, &bits)
    }

    pub fn layer_loaded(&self, layer: Layer) -> bool {
        self.layer_loaded[layer]
    }

    /// Broadcast: every vertex covered by `node` takes the new direction.
    /// Unknown node ids are a no-op.
    pub fn set_direction(&mut self, node: NodeIndex, direction: GrowthDirection) {
        self.refresh_prematch();
        for state in self.vertices.iter_mut() {
            if state.node == Some(node) {
                state.direction = direction;
            }
        }
        let iterations = self.update_cover();
        self.cycle_count += 1 + iterations as u64;
    }

    /// Broadcast: grow every cover by `length` times its masked direction,
    /// then re-propagate covers to the fixpoint.
    pub fn grow(&mut self, length: Weight) {
        debug_assert!(length >= 0, "growth length must be non-negative");
        self.refresh_prematch();
        for v in 0..self.vertices.len() {
            let state = &self.vertices[v];
            if state.is_boundary || state.node.is_none() {
                continue;
            }
            let unit = if self.masked[v] {
                0
            } else {
                state.direction.unit()
            };
            let next = (state.residue + length * unit).max(0);
            self.vertices[v].residue = next;
        }
        let iterations = self.update_cover();
        self.cycle_count += 1 + iterations as u64;
    }

    /// Broadcast rename implementing both cover merge and split: every vertex
    /// whose node is `old_node`, or whose touch is the defect vertex whose
    /// singleton node id is `old_node`, moves to `new_node`.
    pub fn set_cover(&mut self, old_node: NodeIndex, new_node: NodeIndex) {
        self.refresh_prematch();
        let touch_id = (old_node < self.graph.vertex_count()).then_some(old_node as VertexIndex);
        for state in self.vertices.iter_mut() {
            if state.node == Some(old_node) || (touch_id.is_some() && state.touch == touch_id) {
                state.node = Some(new_node);
            }
        }
        let iterations = self.update_cover();
        self.cycle_count += 1 + iterations as u64;
    }

    /// Effective touch: boundary vertices act as a defect whose cover never
    /// grows, touching themselves.
    fn eff_touch(&self, v: VertexIndex) -> Option<VertexIndex> {
        let state = &self.vertices[v];
        if state.is_boundary {
            Some(v)
        } else {
            state.touch
        }
    }

    /// Effective node: boundary vertices own a reserved per-vertex node id
    /// equal to their vertex index.
    fn eff_node(&self, v: VertexIndex) -> Option<NodeIndex> {
        let state = &self.vertices[v];
        if state.is_boundary {
            Some(v as NodeIndex)
        } else {
            state.node
        }
    }

    /// Direction with pre-match masking applied.
    fn eff_direction(&self, v: VertexIndex) -> Weight {
        let state = &self.vertices[v];
        if state.is_boundary || self.masked[v] {
            0
        } else {
            state.direction.unit()
        }
    }

    fn tight(&self, e: EdgeIndex) -> bool {
        let [a, b] = self.graph.edge(e).endpoints;
        self.vertices[a].residue + self.vertices[b].residue >= self.graph.edge(e).weight
    }

    /// Tight through a non-boundary peer. Tightness toward boundary vertices
    /// is volatile (they may later load as interior); everything else counts,
    /// because equal-residual ties can hide a second cover behind the unique
    /// touch and only a literal count is safe.
    fn nonvolatile_tight_for(&self, v: VertexIndex, e: EdgeIndex) -> bool {
        let peer = self.graph.edge(e).other_endpoint(v);
        self.tight(e) && !self.vertices[peer].is_boundary
    }

    /// Synchronous cover propagation to the fixpoint; returns the number of
    /// passes that changed anything. Terminates within the graph diameter.
    pub fn update_cover(&mut self) -> usize {
        let n = self.vertices.len();
        let mut iterations = 0;
        loop {
            let mut next: Vec<(VertexIndex, Option<(VertexIndex, NodeIndex, Weight, GrowthDirection)>)> =
                Vec::new();
            for v in 0..n {
                let state = &self.vertices[v];
                if state.is_defect || state.is_boundary {
                    continue;
                }
                // best candidate: largest residual, then largest direction,
                // then smallest touch id
                let mut best: Option<(Weight, GrowthDirection, VertexIndex, NodeIndex)> = None;
                for &e in self.graph.incident_edges(v) {
                    let u = self.graph.edge(e).other_endpoint(v);
                    let r_u = self.vertices[u].residue;
                    let w = self.graph.edge(e).weight;
                    let (Some(touch), Some(node)) = (self.eff_touch(u), self.eff_node(u)) else {
                        continue;
                    };
                    if r_u < w {
                        continue;
                    }
                    let direction = if self.vertices[u].is_boundary {
                        GrowthDirection::Stay
                    } else {
                        self.vertices[u].direction
                    };
                    let candidate = (r_u - w, direction, touch, node);
                    best = Some(match best {
                        None => candidate,
                        Some(cur) => {
                            let better = (candidate.0, candidate.1, core::cmp::Reverse(candidate.2))
                                > (cur.0, cur.1, core::cmp::Reverse(cur.2));
                            if better {
                                candidate
                            } else {
                                cur
                            }
                        }
                    });
                }
                match best {
                    Some((residual, direction, touch, node)) => {
                        let changed = state.touch != Some(touch)
                            || state.node != Some(node)
                            || state.residue != residual
                            || state.direction != direction;
                        if changed {
                            next.push((v, Some((touch, node, residual, direction))));
                        }
                    }
                    None => {
                        if state.residue == 0 && state.touch.is_some() {
                            next.push((v, None));
                        }
                        // residue > 0 with no sustaining neighbor is a
                        // transient mid-pass state; later passes settle it
                    }
                }
            }
            if next.is_empty() {
                return iterations;
            }
            for (v, label) in next {
                let state = &mut self.vertices[v];
                match label {
                    Some((touch, node, residual, direction)) => {
                        state.touch = Some(touch);
                        state.node = Some(node);
                        state.residue = residual;
                        state.direction = direction;
                    }
                    None => {
                        state.touch = None;
                        state.node = None;
                        state.direction = GrowthDirection::Stay;
                    }
                }
            }
            iterations += 1;
            debug_assert!(iterations <= n + 2, "cover propagation must converge");
        }
    }

    /// No other tight edge at `v` at all.
    fn unique_tight(&self, v: VertexIndex, e: EdgeIndex) -> bool {
        self.graph
            .incident_edges(v)
            .iter()
            .all(|&other| other == e || !self.tight(other))
    }

    /// Recomputes the volatile pre-match flags and direction masks.
    ///
    /// Three sufficient conditions mark an edge as an isolated conflict,
    /// handled without software: an isolated defect pair on a regular edge,
    /// a defect against a true boundary, and a defect against the fusion
    /// boundary of a not-yet-loaded layer. Flagged defect endpoints get
    /// effective direction 0 until the flag dissolves.
    pub fn refresh_prematch(&mut self) {
        self.prematch.iter_mut().for_each(|f| *f = None);
        self.masked.iter_mut().for_each(|m| *m = false);
        if !self.prematch_enabled {
            return;
        }
        for e in 0..self.graph.edge_count() {
            if !self.tight(e) {
                continue;
            }
            let [a, b] = self.graph.edge(e).endpoints;
            let (sa, sb) = (&self.vertices[a], &self.vertices[b]);
            let kind = match (sa.is_boundary, sb.is_boundary) {
                (false, false) => {
                    // isolated pair: two growing singleton-node defects,
                    // neither touched by any other cover
                    let pair = sa.is_defect
                        && sb.is_defect
                        && sa.node == Some(a)
                        && sb.node == Some(b)
                        && sa.direction == GrowthDirection::Grow
                        && sb.direction == GrowthDirection::Grow
                        && self.unique_tight(a, e)
                        && self.unique_tight(b, e);
                    pair.then_some(PreMatchKind::Regular)
                }
                (true, true) => None,
                (boundary_a, _) => {
                    let (bd, reg) = if boundary_a { (a, b) } else { (b, a) };
                    let sreg = &self.vertices[reg];
                    if !(sreg.is_defect
                        && sreg.node == Some(reg)
                        && sreg.direction == GrowthDirection::Grow)
                    {
                        None
                    } else if self.graph.is_virtual(bd) {
                        // true boundary: every other tight edge of the defect
                        // must end at a plain vertex with no further tightness
                        let clause = self.graph.incident_edges(reg).iter().all(|&other| {
                            if other == e || !self.tight(other) {
                                return true;
                            }
                            let peer = self.graph.edge(other).other_endpoint(reg);
                            !self.vertices[peer].is_defect
                                && !self.vertices[peer].is_boundary
                                && self.unique_tight(peer, other)
                        });
                        clause.then_some(PreMatchKind::Boundary)
                    } else {
                        // fusion boundary: no non-volatile tight edge at all
                        let quiet = self
                            .graph
                            .incident_edges(reg)
                            .iter()
                            .all(|&other| !self.nonvolatile_tight_for(reg, other));
                        quiet.then_some(PreMatchKind::Fusion)
                    }
                }
            };
            if let Some(kind) = kind {
                self.prematch[e] = Some(kind);
            }
        }
        // pre-matched nodes are singletons whose node id is the defect
        // vertex; their entire covers freeze
        let mut masked_nodes: Vec<NodeIndex> = Vec::new();
        for e in 0..self.graph.edge_count() {
            if self.prematch[e].is_none() {
                continue;
            }
            for v in self.graph.edge(e).endpoints {
                if self.vertices[v].is_defect {
                    masked_nodes.push(v as NodeIndex);
                }
            }
        }
        if !masked_nodes.is_empty() {
            for v in 0..self.vertices.len() {
                if let Some(node) = self.vertices[v].node {
                    if masked_nodes.contains(&node) {
                        self.masked[v] = true;
                    }
                }
            }
        }
    }

    /// Pre-match flags from the last evaluation.
    pub fn prematched_edges(&self) -> impl Iterator<Item = (EdgeIndex, PreMatchKind)> + '_ {
        self.prematch
            .iter()
            .enumerate()
            .filter_map(|(e, f)| f.map(|kind| (e, kind)))
    }

    pub fn is_masked(&self, v: VertexIndex) -> bool {
        self.masked[v]
    }

    pub fn edge_view(&self, e: EdgeIndex) -> EdgeView {
        let [a, b] = self.graph.edge(e).endpoints;
        EdgeView {
            weight: self.graph.edge(e).weight,
            tight: self.tight(e),
            nonvolatile_tight: self.nonvolatile_tight_for(a, e) || self.nonvolatile_tight_for(b, e),
            prematch: self.prematch[e],
        }
    }

    /// Pre-match, re-propagate covers under the fresh masks, then either
    /// report one conflict (smallest edge id wins the convergecast) or the
    /// maximum safe growth length.
    pub fn find_conflict(&mut self) -> Response {
        self.refresh_prematch();
        let iterations = self.update_cover();
        let depth = usize::BITS - self.graph.edge_count().next_power_of_two().leading_zeros() - 1;
        self.cycle_count += 1 + iterations as u64 + depth as u64;

        for e in 0..self.graph.edge_count() {
            if !self.tight(e) {
                continue;
            }
            let [a, b] = self.graph.edge(e).endpoints;
            let (Some(na), Some(nb)) = (self.eff_node(a), self.eff_node(b)) else {
                continue;
            };
            if na == nb || self.eff_direction(a) + self.eff_direction(b) <= 0 {
                continue;
            }
            // report the regular side first
            let (v1, v2) = if self.vertices[a].is_boundary && !self.vertices[b].is_boundary {
                (b, a)
            } else {
                (a, b)
            };
            return Response::Conflict(Conflict {
                vertex_1: v1,
                vertex_2: v2,
                node_1: self.eff_node(v1).unwrap(),
                node_2: self.eff_node(v2).unwrap(),
                touch_1: self.eff_touch(v1).unwrap(),
                touch_2: self.eff_touch(v2).unwrap(),
                edge: e,
            });
        }

        let mut bound: Option<Weight> = None;
        let mut fold = |candidate: Weight| {
            bound = Some(match bound {
                None => candidate,
                Some(cur) => cur.min(candidate),
            });
        };
        // shrinking covers are bounded by their defect residues; the dual
        // variable of a shrinking singleton is exactly that residue
        for v in 0..self.vertices.len() {
            let state = &self.vertices[v];
            if state.is_defect && self.eff_direction(v) < 0 {
                fold(state.residue);
            }
        }
        // edges bound growth whenever their endpoint covers differ and close
        // in on each other; an uncovered or boundary endpoint contributes
        // direction 0, so wavefronts advance vertex by vertex
        for e in 0..self.graph.edge_count() {
            let [a, b] = self.graph.edge(e).endpoints;
            let speed = self.eff_direction(a) + self.eff_direction(b);
            if speed <= 0 {
                continue;
            }
            let (na, nb) = (self.eff_node(a), self.eff_node(b));
            if na.is_some() && na == nb {
                continue;
            }
            let slack =
                self.graph.edge(e).weight - self.vertices[a].residue - self.vertices[b].residue;
            fold(slack.div_euclid(speed));
        }
        Response::NoObstacle { max_growth: bound }
    }

    /// Distinct nodes with any actively growing or shrinking vertex, with
    /// their directions. Masked (pre-matched) covers are excluded.
    pub fn active_nodes(&self) -> Vec<(NodeIndex, GrowthDirection)> {
        let mut out: Vec<(NodeIndex, GrowthDirection)> = Vec::new();
        for v in 0..self.vertices.len() {
            let state = &self.vertices[v];
            if state.is_boundary || self.masked[v] || state.direction == GrowthDirection::Stay {
                continue;
            }
            if let Some(node) = state.node {
                if !out.iter().any(|(n, _)| *n == node) {
                    out.push((node, state.direction));
                }
            }
        }
        out.sort_unstable_by_key(|(n, _)| *n);
        out
    }

    /// Smallest edge wedged at odd slack between two growing covers; the
    /// driver breaks such parity deadlocks with a one-sided growth step.
    pub fn find_odd_slack_edge(&self) -> Option<(EdgeIndex, NodeIndex, NodeIndex)> {
        for e in 0..self.graph.edge_count() {
            let [a, b] = self.graph.edge(e).endpoints;
            if self.eff_direction(a) + self.eff_direction(b) != 2 {
                continue;
            }
            let (Some(na), Some(nb)) = (self.eff_node(a), self.eff_node(b)) else {
                continue;
            };
            if na == nb {
                continue;
            }
            let slack =
                self.graph.edge(e).weight - self.vertices[a].residue - self.vertices[b].residue;
            if slack == 1 {
                return Some((e, na, nb));
            }
        }
        None
    }

    /// Structural invariants; test and debugging aid.
    pub fn validate(&self) -> Result<(), &'static str> {
        for (v, state) in self.vertices.iter().enumerate() {
            if state.residue < 0 {
                return Err("negative residue");
            }
            if state.touch.is_some() != state.node.is_some() {
                return Err("touch and node must be set together");
            }
            if state.is_boundary
                && (state.is_defect || state.residue != 0 || state.touch.is_some())
            {
                return Err("boundary vertices stay empty");
            }
            if state.is_defect && state.touch != Some(v) {
                return Err("defect vertices touch themselves");
            }
            if state.residue > 0 && state.node.is_none() {
                return Err("positive residue requires a node");
            }
            // covered non-defect vertices trace back to their touch
            if !state.is_defect && !state.is_boundary && state.touch.is_some() {
                let witnessed = self.graph.incident_edges(v).iter().any(|&e| {
                    let u = self.graph.edge(e).other_endpoint(v);
                    self.eff_touch(u) == state.touch
                        && self.vertices[u].residue == state.residue + self.graph.edge(e).weight
                });
                if !witnessed {
                    return Err("covered vertex lost its upstream witness");
                }
            }
        }
        // distinct covers never interpenetrate
        for e in 0..self.graph.edge_count() {
            let [a, b] = self.graph.edge(e).endpoints;
            let (na, nb) = (self.eff_node(a), self.eff_node(b));
            if na.is_some() && nb.is_some() && na != nb {
                let sum = self.vertices[a].residue + self.vertices[b].residue;
                if sum > self.graph.edge(e).weight {
                    return Err("dual constraint violated on an edge");
                }
            }
        }
        Ok(())
    }
}

/// The six-instruction set, as carried by the 32-bit instruction word.
///
/// Defect bits for `LoadDefects` travel out of band (streamed directly into
/// the vertex units); the word only names the layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    Reset,
    SetDirection {
        node: NodeIndex,
        direction: GrowthDirection,
    },
    Grow {
        length: Weight,
    },
    SetCover {
        old_node: NodeIndex,
        new_node: NodeIndex,
    },
    FindConflict,
    LoadDefects {
        layer: Layer,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecError {
    /// Node ids are 15-bit.
    NodeIdRange,
    /// Growth lengths and layer ids are 26-bit.
    FieldRange,
    /// Direction bits 0b11 are unassigned.
    BadDirection,
    UnknownOpcode,
    /// Reserved bits must be zero.
    NonZeroPadding,
}

impl core::fmt::Display for CodecError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::NodeIdRange => write!(f, "node id exceeds 15 bits"),
            Self::FieldRange => write!(f, "field exceeds 26 bits"),
            Self::BadDirection => write!(f, "direction bits 0b11 are unassigned"),
            Self::UnknownOpcode => write!(f, "unknown opcode bits"),
            Self::NonZeroPadding => write!(f, "reserved bits must be zero"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CodecError {}

const NODE_BITS: u32 = 15;
const WIDE_BITS: u32 = 26;

const OP_RESET: u32 = 0b1001;
const OP_GROW: u32 = 0b1101;
const OP_FIND_CONFLICT: u32 = 0b0001;
const OP_LOAD_DEFECTS: u32 = 0b0111;

fn direction_bits(direction: GrowthDirection) -> u32 {
    match direction {
        GrowthDirection::Stay => 0b00,
        GrowthDirection::Grow => 0b01,
        GrowthDirection::Shrink => 0b10,
    }
}

fn node_field(node: NodeIndex) -> Result<u32, CodecError> {
    if node >> NODE_BITS != 0 {
        return Err(CodecError::NodeIdRange);
    }
    Ok(node as u32)
}

fn wide_field(value: u64) -> Result<u32, CodecError> {
    if value >> WIDE_BITS != 0 {
        return Err(CodecError::FieldRange);
    }
    Ok(value as u32)
}

/// Bit-exact 32-bit encoding.
///
/// Low bits `01` select `setCover` with `C` in `[31:17]` and `S` in `[16:2]`.
/// Low bits `00` with bit 2 clear select `setDirection` with `S` in `[31:17]`
/// and the direction in `[16:15]`; with bit 2 set, bits `[5:2]` select among
/// `reset` (`1001`), `grow` (`1101`, length in `[31:6]`), `findConflict`
/// (`0001`) and `loadDefects` (`0111`, layer in `[31:6]`).
pub fn encode_instruction(instruction: &Instruction) -> Result<u32, CodecError> {
    Ok(match *instruction {
        Instruction::Reset => OP_RESET << 2,
        Instruction::FindConflict => OP_FIND_CONFLICT << 2,
        Instruction::Grow { length } => {
            if length < 0 {
                return Err(CodecError::FieldRange);
            }
            (wide_field(length as u64)? << 6) | (OP_GROW << 2)
        }
        Instruction::LoadDefects { layer } => {
            (wide_field(layer as u64)? << 6) | (OP_LOAD_DEFECTS << 2)
        }
        Instruction::SetDirection { node, direction } => {
            (node_field(node)? << 17) | (direction_bits(direction) << 15)
        }
        Instruction::SetCover { old_node, new_node } => {
            (node_field(old_node)? << 17) | (node_field(new_node)? << 2) | 0b01
        }
    })
}

pub fn decode_instruction(word: u32) -> Result<Instruction, CodecError> {
    match word & 0b11 {
        0b01 => Ok(Instruction::SetCover {
            old_node: (word >> 17) as NodeIndex,
            new_node: ((word >> 2) & 0x7FFF) as NodeIndex,
        }),
        0b00 => {
            if word & 0b100 != 0 {
                let payload = word >> 6;
                match (word >> 2) & 0xF {
                    OP_RESET if payload == 0 => Ok(Instruction::Reset),
                    OP_FIND_CONFLICT if payload == 0 => Ok(Instruction::FindConflict),
                    OP_RESET | OP_FIND_CONFLICT => Err(CodecError::NonZeroPadding),
                    OP_GROW => Ok(Instruction::Grow {
                        length: payload as Weight,
                    }),
                    OP_LOAD_DEFECTS => Ok(Instruction::LoadDefects {
                        layer: payload as Layer,
                    }),
                    _ => Err(CodecError::UnknownOpcode),
                }
            } else {
                if (word >> 3) & 0xFFF != 0 {
                    return Err(CodecError::NonZeroPadding);
                }
                let direction = match (word >> 15) & 0b11 {
                    0b00 => GrowthDirection::Stay,
                    0b01 => GrowthDirection::Grow,
                    0b10 => GrowthDirection::Shrink,
                    _ => return Err(CodecError::BadDirection),
                };
                Ok(Instruction::SetDirection {
                    node: (word >> 17) as NodeIndex,
                    direction,
                })
            }
        }
        _ => Err(CodecError::UnknownOpcode),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_repetition_graph, DecodingGraph, EdgeDescriptor, VertexDescriptor};
    use alloc::vec;

    /// Chain 0 - 1 - ... with custom weights; last two ids are virtual ends.
    fn chain(weights: &[Weight]) -> DecodingGraph {
        let regular = weights.len() - 1;
        let mut vertices: Vec<VertexDescriptor> = (0..regular)
            .map(|id| VertexDescriptor {
                id,
                is_virtual: false,
                layer: 0,
                position: None,
            })
            .collect();
        vertices.push(VertexDescriptor {
            id: regular,
            is_virtual: true,
            layer: 0,
            position: None,
        });
        vertices.push(VertexDescriptor {
            id: regular + 1,
            is_virtual: true,
            layer: 0,
            position: None,
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

    #[test]
    fn reset_is_idempotent() {
        let g = build_repetition_graph(3, 0.01).unwrap();
        let mut accel = DualAccelerator::new(&g);
        accel.reset();
        let snapshot = accel.vertices.clone();
        accel.reset();
        assert_eq!(accel.vertices, snapshot);
        assert!(accel.vertices.iter().all(|s| s.is_boundary && s.residue == 0));
        assert_eq!(
            accel.find_conflict(),
            Response::NoObstacle { max_growth: None }
        );
    }

    #[test]
    fn load_defects_writes_state() {
        let g = build_repetition_graph(3, 0.01).unwrap();
        let mut accel = DualAccelerator::new(&g);
        accel.load_defects(0, &[1]).unwrap();
        let s = accel.vertex_state(1);
        assert!(s.is_defect && !s.is_boundary);
        assert_eq!((s.touch, s.node), (Some(1), Some(1)));
        assert_eq!(s.direction, GrowthDirection::Grow);
        assert!(!accel.vertex_state(0).is_defect);
        assert!(!accel.vertex_state(0).is_boundary);
        assert!(accel.vertex_state(2).is_boundary); // virtual stays boundary
        assert_eq!(
            accel.load_defects(0, &[0]),
            Err(AcceleratorError::LayerAlreadyLoaded(0))
        );
        assert_eq!(
            accel.load_defects(7, &[]),
            Err(AcceleratorError::UnknownLayer(7))
        );
    }

    #[test]
    fn layers_load_in_any_order() {
        let g = crate::graph::build_surface_graph_3d(3, 3, 0.01, 0.01).unwrap();
        let mut accel = DualAccelerator::new(&g);
        // layers are independent state writes; ordering policy belongs to
        // the stream driver
        accel.load_defects(1, &[]).unwrap();
        accel.load_defects(0, &[]).unwrap();
        accel.load_defects(2, &[]).unwrap();
        assert!((0..3).all(|l| accel.layer_loaded(l)));
    }

    #[test]
    fn load_rejects_virtual_defects() {
        let g = build_repetition_graph(3, 0.01).unwrap();
        let mut accel = DualAccelerator::new(&g);
        let bits = vec![false, false, true, false]; // vertex 2 is virtual
        assert_eq!(
            accel.load_defect_bits(0, &bits),
            Err(AcceleratorError::VirtualDefect(2))
        );
        assert_eq!(
            accel.load_defect_bits(0, &[true]),
            Err(AcceleratorError::BadBitsetLength)
        );
    }

    #[test]
    fn set_direction_broadcast() {
        let g = chain(&[20, 4, 20]);
        let mut accel = DualAccelerator::with_prematch(&g, false);
        accel.load_defects(0, &[0, 1]).unwrap();
        accel.set_direction(0, GrowthDirection::Shrink);
        assert_eq!(accel.vertex_state(0).direction, GrowthDirection::Shrink);
        assert_eq!(accel.vertex_state(1).direction, GrowthDirection::Grow);
        // unknown node id is a no-op
        let snapshot = accel.vertices.clone();
        accel.set_direction(999, GrowthDirection::Grow);
        assert_eq!(accel.vertices, snapshot);
    }

    #[test]
    fn grow_and_conflict_on_shared_edge() {
        let g = chain(&[20, 4, 20]);
        let mut accel = DualAccelerator::with_prematch(&g, false);
        accel.load_defects(0, &[0, 1]).unwrap();
        match accel.find_conflict() {
            Response::NoObstacle { max_growth } => assert_eq!(max_growth, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
        accel.grow(2);
        assert_eq!(accel.vertex_state(0).residue, 2);
        assert_eq!(accel.vertex_state(1).residue, 2);
        match accel.find_conflict() {
            Response::Conflict(c) => {
                assert_eq!((c.vertex_1, c.vertex_2), (0, 1));
                assert_eq!((c.node_1, c.node_2), (0, 1));
                assert_eq!((c.touch_1, c.touch_2), (0, 1));
                assert_eq!(c.edge, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        accel.validate().unwrap();
    }

    #[test]
    fn shrinking_defect_bounds_growth() {
        let g = chain(&[20, 4, 20]);
        let mut accel = DualAccelerator::with_prematch(&g, false);
        accel.load_defects(0, &[0]).unwrap();
        accel.grow(3);
        accel.set_direction(0, GrowthDirection::Shrink);
        match accel.find_conflict() {
            Response::NoObstacle { max_growth } => assert_eq!(max_growth, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cover_propagation_and_retraction() {
        let g = chain(&[2, 2, 2]);
        let mut accel = DualAccelerator::with_prematch(&g, false);
        accel.load_defects(0, &[0]).unwrap();
        accel.grow(2);
        let s1 = accel.vertex_state(1);
        assert_eq!((s1.touch, s1.residue), (Some(0), 0));
        accel.validate().unwrap();
        // shrink to zero: downstream label clears
        accel.set_direction(0, GrowthDirection::Shrink);
        accel.grow(2);
        let s1 = accel.vertex_state(1);
        assert_eq!((s1.touch, s1.node), (None, None));
        assert_eq!(accel.vertex_state(0).residue, 0);
        accel.validate().unwrap();
    }

    #[test]
    fn growth_toward_virtual_is_vertex_by_vertex() {
        // lone defect two hops from the left virtual end
        let g = chain(&[2, 2, 6, 6]);
        let mut accel = DualAccelerator::with_prematch(&g, false);
        accel.load_defects(0, &[1]).unwrap();
        match accel.find_conflict() {
            Response::NoObstacle { max_growth } => assert_eq!(max_growth, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
        accel.grow(2);
        // wavefront reached vertex 0; the next bound is the boundary edge
        match accel.find_conflict() {
            Response::NoObstacle { max_growth } => assert_eq!(max_growth, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
        accel.grow(2);
        match accel.find_conflict() {
            Response::Conflict(c) => {
                assert_eq!((c.vertex_1, c.vertex_2), (0, 3));
                assert_eq!(c.node_2, 3); // virtual pseudo-node
                assert_eq!(c.touch_1, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prematch_masks_isolated_pair() {
        let g = chain(&[20, 4, 20]);
        let mut accel = DualAccelerator::new(&g);
        accel.load_defects(0, &[0, 1]).unwrap();
        accel.grow(2);
        let response = accel.find_conflict();
        assert_eq!(response, Response::NoObstacle { max_growth: None });
        let flags: Vec<_> = accel.prematched_edges().collect();
        assert_eq!(flags, vec![(1, PreMatchKind::Regular)]);
        assert!(accel.is_masked(0) && accel.is_masked(1));
    }

    #[test]
    fn prematch_boundary_kind() {
        let g = chain(&[4, 20, 20]);
        let mut accel = DualAccelerator::new(&g);
        accel.load_defects(0, &[0]).unwrap();
        accel.grow(4);
        assert_eq!(
            accel.find_conflict(),
            Response::NoObstacle { max_growth: None }
        );
        let flags: Vec<_> = accel.prematched_edges().collect();
        assert_eq!(flags, vec![(0, PreMatchKind::Boundary)]);
    }

    #[test]
    fn prematch_dissolves_when_third_cover_arrives() {
        // defects 0,1 pre-match; defect 3 grows until it presses vertex 2
        let g = chain(&[20, 4, 4, 4, 20]);
        let mut accel = DualAccelerator::new(&g);
        accel.load_defects(0, &[0, 1, 3]).unwrap();
        accel.grow(2);
        // pair (0, 1) pre-matched and frozen while defect 3 keeps growing
        match accel.find_conflict() {
            Response::NoObstacle { max_growth } => assert_eq!(max_growth, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(accel.is_masked(0) && accel.is_masked(1));
        accel.grow(2);
        accel.grow(2);
        // the third cover presses vertex 2, the pre-match dissolves, and the
        // formerly hidden conflict on the pair edge is reported
        match accel.find_conflict() {
            Response::Conflict(c) => {
                assert_eq!((c.node_1, c.node_2), (0, 1));
                assert_eq!(c.edge, 1);
            }
            other => panic!("expected dissolution conflict, got {other:?}"),
        }
    }

    #[test]
    fn codec_word_layout() {
        assert_eq!(encode_instruction(&Instruction::Reset).unwrap(), 0b100100);
        assert_eq!(
            encode_instruction(&Instruction::FindConflict).unwrap(),
            0b000100
        );
        assert_eq!(
            encode_instruction(&Instruction::Grow { length: 5 }).unwrap(),
            (5 << 6) | 0b110100
        );
        assert_eq!(
            encode_instruction(&Instruction::SetCover {
                old_node: 3,
                new_node: 9
            })
            .unwrap(),
            (3 << 17) | (9 << 2) | 0b01
        );
        assert_eq!(
            encode_instruction(&Instruction::LoadDefects { layer: 2 }).unwrap(),
            (2 << 6) | 0b011100
        );
        assert_eq!(
            encode_instruction(&Instruction::SetDirection {
                node: 4,
                direction: GrowthDirection::Shrink
            })
            .unwrap(),
            (4 << 17) | (0b10 << 15)
        );
    }

    #[test]
    fn codec_errors() {
        assert_eq!(
            encode_instruction(&Instruction::SetDirection {
                node: 1 << 15,
                direction: GrowthDirection::Grow
            }),
            Err(CodecError::NodeIdRange)
        );
        assert_eq!(
            encode_instruction(&Instruction::Grow { length: 1 << 26 }),
            Err(CodecError::FieldRange)
        );
        assert_eq!(decode_instruction(0b10), Err(CodecError::UnknownOpcode));
        assert_eq!(decode_instruction(0b101100), Err(CodecError::UnknownOpcode));
        // direction bits 0b11
        assert_eq!(
            decode_instruction(0b11 << 15),
            Err(CodecError::BadDirection)
        );
        // reset with non-zero payload
        assert_eq!(
            decode_instruction((1 << 6) | 0b100100),
            Err(CodecError::NonZeroPadding)
        );
    }

    #[test]
    fn codec_round_trip() {
        let samples = [
            Instruction::Reset,
            Instruction::FindConflict,
            Instruction::Grow { length: 0 },
            Instruction::Grow {
                length: (1 << 26) - 1,
            },
            Instruction::SetDirection {
                node: 0x7FFF,
                direction: GrowthDirection::Grow,
            },
            Instruction::SetCover {
                old_node: 0x7FFF,
                new_node: 0,
            },
            Instruction::LoadDefects { layer: 0 },
        ];
        for instruction in samples {
            let word = encode_instruction(&instruction).unwrap();
            assert_eq!(decode_instruction(word).unwrap(), instruction);
        }
    }

    #[test]
    fn set_cover_merges_and_identity() {
        let g = chain(&[20, 4, 4, 20]);
        let mut accel = DualAccelerator::with_prematch(&g, false);
        accel.load_defects(0, &[0, 1, 2]).unwrap();
        accel.grow(2);
        // merge the three singleton covers into one blossom id
        let blossom = g.vertex_count(); // first id past the vertices
        for node in [0, 1, 2] {
            accel.set_cover(node, blossom);
        }
        for v in [0, 1, 2] {
            assert_eq!(accel.vertex_state(v).node, Some(blossom));
        }
        // identity rename leaves a singleton state unchanged
        let mut accel = DualAccelerator::with_prematch(&g, false);
        accel.load_defects(0, &[0]).unwrap();
        accel.grow(2);
        let snapshot = accel.vertex_state(0).clone();
        accel.set_cover(0, 0);
        assert_eq!(*accel.vertex_state(0), snapshot);
    }

    #[test]
    fn deterministic_replay() {
        let g = build_repetition_graph(5, 0.05).unwrap();
        let run = || {
            let mut accel = DualAccelerator::new(&g);
            accel.load_defects(0, &[0, 2]).unwrap();
            accel.grow(14);
            let response = accel.find_conflict();
            (response, accel.vertices.clone(), accel.cycle_count())
        };
        assert_eq!(run(), run());
    }
}
