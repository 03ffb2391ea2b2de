//! Decoding graph model.
//!
//! A decoding graph is a weighted graph whose vertices are stabilizer
//! measurements and whose edges are potential physical errors. Virtual
//! vertices along the code boundary allow defects to match to the boundary.
//!
//! All weights are stored on an internal doubled scale (see [`WEIGHT_SCALE`]):
//! quantized integer weights are multiplied by 2 so that two covers growing
//! toward each other reach tightness at an integer growth length, keeping all
//! residues and dual variables integral.

use alloc::vec;
use alloc::vec::Vec;

use crate::{EdgeIndex, Layer, VertexIndex};

/// Integer weight in internal (doubled) units.
pub type Weight = i64;

/// Doubling factor applied to quantized weights.
pub const WEIGHT_SCALE: Weight = 2;

/// Default maximum edge weight before doubling; sufficient to distinguish
/// error probabilities over a decade while using only 4 bits.
pub const DEFAULT_MAX_WEIGHT: Weight = 14;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    /// `weight_from_probability` called with p outside (0, 1).
    ProbabilityOutOfRange,
    /// Quantization needs at least one positive real weight.
    NoPositiveWeight,
    /// Code distance must be an odd integer >= 3.
    InvalidDistance,
    /// Number of measurement rounds must be >= 1.
    InvalidRounds,
    /// Vertex ids must be dense in [0, |V|).
    NonDenseVertexIds,
    /// Edge ids must be dense in [0, |E|).
    NonDenseEdgeIds,
    /// Edge endpoints must be two distinct existing vertices.
    BadEndpoints(EdgeIndex),
    /// Duplicate undirected edge.
    DuplicateEdge(EdgeIndex),
    /// Weights must be non-negative and even (internal doubled scale).
    BadWeight(EdgeIndex),
    /// The graph must be connected when virtual vertices are included.
    Disconnected(VertexIndex),
    /// Decoding needs a boundary: at least one virtual vertex.
    NoVirtualVertex,
}

impl core::fmt::Display for GraphError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::ProbabilityOutOfRange => write!(f, "probability must be in (0, 1)"),
            Self::NoPositiveWeight => write!(f, "no positive real weight to quantize against"),
            Self::InvalidDistance => write!(f, "code distance must be an odd integer >= 3"),
            Self::InvalidRounds => write!(f, "measurement rounds must be >= 1"),
            Self::NonDenseVertexIds => write!(f, "vertex ids must be dense in [0, |V|)"),
            Self::NonDenseEdgeIds => write!(f, "edge ids must be dense in [0, |E|)"),
            Self::BadEndpoints(e) => write!(f, "edge {e} endpoints invalid"),
            Self::DuplicateEdge(e) => write!(f, "edge {e} duplicates another undirected edge"),
            Self::BadWeight(e) => write!(f, "edge {e} weight must be non-negative and even"),
            Self::Disconnected(v) => write!(f, "vertex {v} is not connected to the rest"),
            Self::NoVirtualVertex => write!(f, "graph has no virtual (boundary) vertex"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GraphError {}

/// A stabilizer measurement (regular) or boundary placeholder (virtual).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VertexDescriptor {
    pub id: VertexIndex,
    pub is_virtual: bool,
    /// Measurement-round index.
    pub layer: Layer,
    /// Optional coordinates, for documentation and visual export only.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub position: Option<[f64; 3]>,
}

/// A potential physical error connecting the two vertices that detect it.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeDescriptor {
    pub id: EdgeIndex,
    pub endpoints: [VertexIndex; 2],
    /// Non-negative even weight in internal (doubled) units.
    pub weight: Weight,
}

/// Immutable decoding graph with per-vertex adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingGraph {
    vertices: Vec<VertexDescriptor>,
    edges: Vec<EdgeDescriptor>,
    /// Incident edge ids per vertex.
    adjacency: Vec<Vec<EdgeIndex>>,
    /// Vertex ids per layer, ascending.
    layer_vertices: Vec<Vec<VertexIndex>>,
    max_layer: Layer,
    /// Configured maximum edge weight (before doubling).
    max_weight: Weight,
}

impl DecodingGraph {
    /// Validates descriptors and builds adjacency.
    pub fn new(
        vertices: Vec<VertexDescriptor>,
        edges: Vec<EdgeDescriptor>,
        max_weight: Weight,
    ) -> Result<Self, GraphError> {
        for (i, v) in vertices.iter().enumerate() {
            if v.id != i {
                return Err(GraphError::NonDenseVertexIds);
            }
        }
        let n = vertices.len();
        let mut adjacency: Vec<Vec<EdgeIndex>> = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.id != i {
                return Err(GraphError::NonDenseEdgeIds);
            }
            let [u, v] = e.endpoints;
            if u == v || u >= n || v >= n {
                return Err(GraphError::BadEndpoints(i));
            }
            if e.weight < 0 || e.weight % WEIGHT_SCALE != 0 {
                return Err(GraphError::BadWeight(i));
            }
            if adjacency[u]
                .iter()
                .any(|&prev| edges[prev].other_endpoint(u) == v)
            {
                return Err(GraphError::DuplicateEdge(i));
            }
            adjacency[u].push(i);
            adjacency[v].push(i);
        }
        let max_layer = vertices.iter().map(|v| v.layer).max().unwrap_or(0);
        let mut layer_vertices = vec![Vec::new(); max_layer + 1];
        for v in vertices.iter() {
            layer_vertices[v.layer].push(v.id);
        }
        let graph = Self {
            vertices,
            edges,
            adjacency,
            layer_vertices,
            max_layer,
            max_weight,
        };
        if !graph.vertices.is_empty() && !graph.vertices.iter().any(|v| v.is_virtual) {
            return Err(GraphError::NoVirtualVertex);
        }
        graph.check_connected()?;
        Ok(graph)
    }

    /// Breadth-first reachability over the whole graph, virtual vertices
    /// included; syndrome-graph distances require this.
    fn check_connected(&self) -> Result<(), GraphError> {
        if self.vertices.is_empty() {
            return Ok(());
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = vec![0_usize];
        seen[0] = true;
        while let Some(v) = queue.pop() {
            for &e in &self.adjacency[v] {
                let u = self.edges[e].other_endpoint(v);
                if !seen[u] {
                    seen[u] = true;
                    queue.push(u);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(GraphError::Disconnected(v)),
            None => Ok(()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[VertexDescriptor] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeDescriptor] {
        &self.edges
    }

    pub fn vertex(&self, v: VertexIndex) -> &VertexDescriptor {
        &self.vertices[v]
    }

    pub fn edge(&self, e: EdgeIndex) -> &EdgeDescriptor {
        &self.edges[e]
    }

    pub fn is_virtual(&self, v: VertexIndex) -> bool {
        self.vertices[v].is_virtual
    }

    pub fn incident_edges(&self, v: VertexIndex) -> &[EdgeIndex] {
        &self.adjacency[v]
    }

    pub fn max_layer(&self) -> Layer {
        self.max_layer
    }

    pub fn layer_count(&self) -> usize {
        self.max_layer + 1
    }

    /// Vertex ids of one layer, ascending.
    pub fn layer_vertices(&self, layer: Layer) -> &[VertexIndex] {
        &self.layer_vertices[layer]
    }

    pub fn max_weight(&self) -> Weight {
        self.max_weight
    }

    /// Regular (non-virtual) vertex ids, ascending.
    pub fn regular_vertices(&self) -> impl Iterator<Item = VertexIndex> + '_ {
        self.vertices
            .iter()
            .filter(|v| !v.is_virtual)
            .map(|v| v.id)
    }
}

impl EdgeDescriptor {
    pub fn other_endpoint(&self, v: VertexIndex) -> VertexIndex {
        debug_assert!(self.endpoints.contains(&v));
        if self.endpoints[0] == v {
            self.endpoints[1]
        } else {
            self.endpoints[0]
        }
    }
}

/// Log-likelihood weight of an error with probability `p`.
///
/// Negative for p > 0.5; callers quantize and clamp.
pub fn weight_from_probability(p: f64) -> Result<f64, GraphError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(GraphError::ProbabilityOutOfRange);
    }
    Ok(libm::log((1.0 - p) / p))
}

/// Ratio-preserving quantization of real weights to even positive integers.
///
/// Weights are scaled so the largest maps to `max_weight`, rounded, clamped
/// to at least 1, and then doubled. Non-positive inputs clamp to the smallest
/// representable weight and are counted in `clamped`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedWeights {
    pub weights: Vec<Weight>,
    /// Number of non-positive inputs clamped to the minimum weight.
    pub clamped: usize,
}

pub fn quantize_weights(
    real_weights: &[f64],
    max_weight: Weight,
) -> Result<QuantizedWeights, GraphError> {
    if real_weights.is_empty() || max_weight < 1 {
        return Err(GraphError::NoPositiveWeight);
    }
    let largest = real_weights.iter().cloned().fold(f64::MIN, f64::max);
    if largest <= 0.0 || largest.is_nan() {
        return Err(GraphError::NoPositiveWeight);
    }
    let mut clamped = 0;
    let weights = real_weights
        .iter()
        .map(|&w| {
            if w <= 0.0 {
                clamped += 1;
                return WEIGHT_SCALE;
            }
            let scaled = libm::round(w * max_weight as f64 / largest) as Weight;
            WEIGHT_SCALE * scaled.max(1)
        })
        .collect();
    Ok(QuantizedWeights { weights, clamped })
}

/// Chain of `d - 1` regular vertices between two virtual endpoints, with `d`
/// uniform-weight edges; the decoding graph of a distance-`d` quantum
/// repetition code under code-capacity noise.
///
/// Vertex ids: regular `0..d-1`, left virtual `d-1`, right virtual `d`.
/// Edge ids run left to right; edge 0 is the left boundary edge.
pub fn build_repetition_graph(d: usize, p: f64) -> Result<DecodingGraph, GraphError> {
    build_repetition_graph_with(d, p, DEFAULT_MAX_WEIGHT)
}

pub fn build_repetition_graph_with(
    d: usize,
    p: f64,
    max_weight: Weight,
) -> Result<DecodingGraph, GraphError> {
    if d < 3 || d % 2 == 0 {
        return Err(GraphError::InvalidDistance);
    }
    weight_from_probability(p)?;
    let regular = d - 1;
    let left = regular;
    let right = regular + 1;
    let mut vertices = Vec::with_capacity(d + 1);
    for i in 0..regular {
        vertices.push(VertexDescriptor {
            id: i,
            is_virtual: false,
            layer: 0,
            position: Some([(i + 1) as f64, 0.0, 0.0]),
        });
    }
    vertices.push(VertexDescriptor {
        id: left,
        is_virtual: true,
        layer: 0,
        position: Some([0.0, 0.0, 0.0]),
    });
    vertices.push(VertexDescriptor {
        id: right,
        is_virtual: true,
        layer: 0,
        position: Some([d as f64, 0.0, 0.0]),
    });
    // uniform noise: every edge quantizes to the maximum weight
    let w = WEIGHT_SCALE * max_weight;
    let mut endpoints = Vec::with_capacity(d);
    endpoints.push([left, 0]);
    for i in 0..regular - 1 {
        endpoints.push([i, i + 1]);
    }
    endpoints.push([regular - 1, right]);
    let edges = endpoints
        .into_iter()
        .enumerate()
        .map(|(id, endpoints)| EdgeDescriptor {
            id,
            endpoints,
            weight: w,
        })
        .collect();
    DecodingGraph::new(vertices, edges, max_weight)
}

/// Rotated-surface-code Z-stabilizer lattice with `(d*d - 1) / 2` regular
/// vertices per layer, replicated over `rounds` measurement rounds
/// (phenomenological noise: spatial edges from data-qubit errors, temporal
/// edges from measurement errors).
pub fn build_surface_graph_3d(
    d: usize,
    rounds: usize,
    p_space: f64,
    p_time: f64,
) -> Result<DecodingGraph, GraphError> {
    build_surface_graph_3d_with(d, rounds, p_space, p_time, DEFAULT_MAX_WEIGHT)
}

pub fn build_surface_graph_3d_with(
    d: usize,
    rounds: usize,
    p_space: f64,
    p_time: f64,
    max_weight: Weight,
) -> Result<DecodingGraph, GraphError> {
    if d < 3 || d % 2 == 0 {
        return Err(GraphError::InvalidDistance);
    }
    if rounds < 1 {
        return Err(GraphError::InvalidRounds);
    }
    weight_from_probability(p_space)?;
    weight_from_probability(p_time)?;

    // Z-stabilizer plaquettes (pi, pj): pi in -1..d-1, pj in 0..d-2, pi+pj
    // even. Rows -1 and d-1 are the top/bottom half-plaquettes; columns
    // outside [0, d-2] belong to the other stabilizer type, which makes the
    // left and right sides the rough boundaries of this graph.
    let mut plaquettes: Vec<(i64, i64)> = Vec::new();
    for pi in -1..d as i64 {
        for pj in 0..(d as i64) - 1 {
            if (pi + pj).rem_euclid(2) == 0 {
                plaquettes.push((pi, pj));
            }
        }
    }
    debug_assert_eq!(plaquettes.len(), (d * d - 1) / 2);
    let stab_index = |pi: i64, pj: i64| -> Option<usize> {
        if pi < -1 || pi >= d as i64 || pj < 0 || pj >= d as i64 - 1 || (pi + pj).rem_euclid(2) != 0
        {
            return None;
        }
        plaquettes.binary_search(&(pi, pj)).ok()
    };

    // Boundary stabilizers, in plaquette order: pj == 0 touches the left
    // rough boundary, pj == d-2 the right one.
    let left_stabs: Vec<usize> = plaquettes
        .iter()
        .enumerate()
        .filter(|(_, &(_, pj))| pj == 0)
        .map(|(i, _)| i)
        .collect();
    let right_stabs: Vec<usize> = plaquettes
        .iter()
        .enumerate()
        .filter(|(_, &(_, pj))| pj == d as i64 - 2)
        .map(|(i, _)| i)
        .collect();

    let per_layer_regular = plaquettes.len();
    let per_layer_virtual = left_stabs.len() + right_stabs.len();
    let per_layer = per_layer_regular + per_layer_virtual;

    // layer-major ids: regular stabilizers first, then left/right virtuals
    let regular_id = |layer: usize, stab: usize| layer * per_layer + stab;
    let virtual_id = |layer: usize, side_offset: usize| {
        layer * per_layer + per_layer_regular + side_offset
    };

    let mut vertices = Vec::with_capacity(rounds * per_layer);
    for layer in 0..rounds {
        for &(pi, pj) in plaquettes.iter() {
            vertices.push(VertexDescriptor {
                id: vertices.len(),
                is_virtual: false,
                layer,
                position: Some([pj as f64, pi as f64, layer as f64]),
            });
        }
        for &stab in left_stabs.iter() {
            let (pi, _) = plaquettes[stab];
            vertices.push(VertexDescriptor {
                id: vertices.len(),
                is_virtual: true,
                layer,
                position: Some([-1.0, pi as f64, layer as f64]),
            });
        }
        for &stab in right_stabs.iter() {
            let (pi, _) = plaquettes[stab];
            vertices.push(VertexDescriptor {
                id: vertices.len(),
                is_virtual: true,
                layer,
                position: Some([d as f64 - 1.0, pi as f64, layer as f64]),
            });
        }
    }

    // Spatial edges within one layer, as (stab, stab) or (stab, virtual)
    // pairs plus the error probability. Data qubits in the boundary columns
    // share a virtual target, so parallel errors merge by XOR of their
    // probabilities.
    enum Spatial {
        Interior(usize, usize),
        Left(usize),
        Right(usize),
    }
    let mut spatial: Vec<(Spatial, f64)> = Vec::new();
    let merge = |slot: Spatial, spatial: &mut Vec<(Spatial, f64)>| {
        let found = spatial.iter_mut().find(|(s, _)| match (s, &slot) {
            (Spatial::Interior(a, b), Spatial::Interior(c, e)) => a == c && b == e,
            (Spatial::Left(a), Spatial::Left(b)) => a == b,
            (Spatial::Right(a), Spatial::Right(b)) => a == b,
            _ => false,
        });
        match found {
            Some((_, p)) => *p = *p * (1.0 - p_space) + p_space * (1.0 - *p),
            None => spatial.push((slot, p_space)),
        }
    };
    for i in 0..d as i64 {
        for j in 0..d as i64 {
            let neighbors: Vec<usize> = [(i - 1, j - 1), (i - 1, j), (i, j - 1), (i, j)]
                .into_iter()
                .filter_map(|(pi, pj)| stab_index(pi, pj))
                .collect();
            match neighbors.as_slice() {
                [a, b] => {
                    let (a, b) = (*a.min(b), *a.max(b));
                    merge(Spatial::Interior(a, b), &mut spatial);
                }
                [a] if j == 0 => merge(Spatial::Left(*a), &mut spatial),
                [a] => {
                    debug_assert_eq!(j, d as i64 - 1);
                    merge(Spatial::Right(*a), &mut spatial);
                }
                _ => unreachable!("each data qubit touches 1 or 2 Z stabilizers"),
            }
        }
    }

    let mut endpoints: Vec<[VertexIndex; 2]> = Vec::new();
    let mut real_weights: Vec<f64> = Vec::new();
    for layer in 0..rounds {
        for (slot, p) in spatial.iter() {
            let pair = match slot {
                Spatial::Interior(a, b) => [regular_id(layer, *a), regular_id(layer, *b)],
                Spatial::Left(a) => {
                    let offset = left_stabs.iter().position(|s| s == a).unwrap();
                    [regular_id(layer, *a), virtual_id(layer, offset)]
                }
                Spatial::Right(a) => {
                    let offset = right_stabs.iter().position(|s| s == a).unwrap();
                    [
                        regular_id(layer, *a),
                        virtual_id(layer, left_stabs.len() + offset),
                    ]
                }
            };
            endpoints.push(pair);
            real_weights.push(weight_from_probability(*p)?);
        }
        if layer + 1 < rounds {
            let w_time = weight_from_probability(p_time)?;
            for stab in 0..per_layer_regular {
                endpoints.push([regular_id(layer, stab), regular_id(layer + 1, stab)]);
                real_weights.push(w_time);
            }
        }
    }

    let quantized = quantize_weights(&real_weights, max_weight)?;
    let edges = endpoints
        .into_iter()
        .zip(quantized.weights)
        .enumerate()
        .map(|(id, (endpoints, weight))| EdgeDescriptor {
            id,
            endpoints,
            weight,
        })
        .collect();
    DecodingGraph::new(vertices, edges, max_weight)
}
