//! Decoding-graph and syndrome documents (JSON).
//!
//! Graph documents store weights in internal (doubled) units and record the
//! doubling factor in `weight_scale`.

use std::fs;
use std::path::Path;

use blossom_core::graph::{DecodingGraph, GraphError, Weight, WEIGHT_SCALE};
use blossom_core::{EdgeDescriptor, VertexDescriptor, VertexIndex};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum FormatError {
    Io(std::io::Error),
    /// Schema violation; the serde message names the offending field.
    Parse(serde_json::Error),
    /// Parsed fine but violates a graph invariant.
    Invalid(GraphError),
    UnsupportedWeightScale(Weight),
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Io(e) => write!(f, "io: {e}"),
            Self::Parse(e) => write!(f, "parse: {e}"),
            Self::Invalid(e) => write!(f, "invalid graph: {e}"),
            Self::UnsupportedWeightScale(s) => {
                write!(f, "weight_scale {s} unsupported (expected {WEIGHT_SCALE})")
            }
        }
    }
}

impl std::error::Error for FormatError {}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        Self::Parse(e)
    }
}

impl From<GraphError> for FormatError {
    fn from(e: GraphError) -> Self {
        Self::Invalid(e)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub vertices: Vec<VertexDescriptor>,
    pub edges: Vec<EdgeDescriptor>,
    pub max_weight: Weight,
    /// Doubling factor applied to quantized weights; always 2.
    pub weight_scale: Weight,
}

impl GraphDocument {
    pub fn from_graph(graph: &DecodingGraph) -> Self {
        Self {
            vertices: graph.vertices().to_vec(),
            edges: graph.edges().to_vec(),
            max_weight: graph.max_weight(),
            weight_scale: WEIGHT_SCALE,
        }
    }

    pub fn into_graph(self) -> Result<DecodingGraph, FormatError> {
        if self.weight_scale != WEIGHT_SCALE {
            return Err(FormatError::UnsupportedWeightScale(self.weight_scale));
        }
        Ok(DecodingGraph::new(
            self.vertices,
            self.edges,
            self.max_weight,
        )?)
    }
}

pub fn save_graph(path: &Path, graph: &DecodingGraph) -> Result<(), FormatError> {
    let document = GraphDocument::from_graph(graph);
    fs::write(path, serde_json::to_string_pretty(&document)?)?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<DecodingGraph, FormatError> {
    let text = fs::read_to_string(path)?;
    parse_graph(&text)
}

pub fn parse_graph(text: &str) -> Result<DecodingGraph, FormatError> {
    let document: GraphDocument = serde_json::from_str(text)?;
    document.into_graph()
}

/// Syndrome input: per-round defect lists, or a flattened batch.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SyndromeDocument {
    Stream { rounds: Vec<Vec<VertexIndex>> },
    Batch { defects: Vec<VertexIndex> },
}

pub fn load_syndrome(path: &Path) -> Result<SyndromeDocument, FormatError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use blossom_core::graph::build_repetition_graph;

    #[test]
    fn round_trip_is_identity() {
        let graphs = [
            build_repetition_graph(3, 0.01).unwrap(),
            blossom_core::graph::build_surface_graph_3d(5, 3, 0.01, 0.03).unwrap(),
        ];
        for g in graphs {
            let text = serde_json::to_string(&GraphDocument::from_graph(&g)).unwrap();
            let loaded = parse_graph(&text).unwrap();
            assert_eq!(g, loaded);
        }
    }

    #[test]
    fn missing_edges_key_is_a_parse_error() {
        let text = r#"{"vertices": [], "max_weight": 14, "weight_scale": 2}"#;
        match parse_graph(text) {
            Err(FormatError::Parse(e)) => assert!(e.to_string().contains("edges")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_edge_is_a_validation_error() {
        let text = r#"{
            "vertices": [
                {"id": 0, "is_virtual": false, "layer": 0},
                {"id": 1, "is_virtual": true, "layer": 0}
            ],
            "edges": [
                {"id": 0, "endpoints": [0, 1], "weight": 2},
                {"id": 1, "endpoints": [1, 0], "weight": 2}
            ],
            "max_weight": 14,
            "weight_scale": 2
        }"#;
        match parse_graph(text) {
            Err(FormatError::Invalid(GraphError::DuplicateEdge(1))) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weight_scale_must_be_two() {
        let g = build_repetition_graph(3, 0.01).unwrap();
        let mut document = GraphDocument::from_graph(&g);
        document.weight_scale = 1;
        let text = serde_json::to_string(&document).unwrap();
        assert!(matches!(
            parse_graph(&text),
            Err(FormatError::UnsupportedWeightScale(1))
        ));
    }

    #[test]
    fn syndrome_document_forms() {
        let stream: SyndromeDocument = serde_json::from_str(r#"{"rounds": [[0, 2], []]}"#).unwrap();
        assert!(matches!(stream, SyndromeDocument::Stream { .. }));
        let batch: SyndromeDocument = serde_json::from_str(r#"{"defects": [0, 2]}"#).unwrap();
        assert!(matches!(batch, SyndromeDocument::Batch { .. }));
    }
}
