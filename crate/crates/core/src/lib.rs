//! Exact minimum-weight perfect matching (MWPM) decoding for surface codes,
//! with the dual phase of the blossom algorithm running on a simulated array
//! of per-vertex and per-edge processing units.
//!
//! The crate is split along the hardware/software boundary of the design:
//!
//! - [`graph`]: decoding graphs (repetition and rotated-surface families,
//!   plus arbitrary user graphs) with integer edge weights.
//! - [`accelerator`]: the deterministic, synchronously stepped processing-unit
//!   array that executes a six-instruction set over compact per-vertex state,
//!   detects conflicts, pre-matches isolated errors and counts cycles.
//! - [`primal`]: the software half of the solver: alternating trees, blossoms
//!   and matched pairs, driven by conflict reports from the accelerator.
//! - [`decode`]: batch decoding driver and matching extraction.
//! - [`stream`]: round-wise fusion driver for stream decoding.
//! - [`oracle`]: independent exact reference (shortest paths + exhaustive
//!   enumeration) used to certify optimality.
//! - [`noise`]: seeded error sampling, syndrome extraction and logical-error
//!   determination for Monte Carlo campaigns.
//!
//! The crate is `no_std` compatible (requires `alloc`); file formats and the
//! command-line front end live in the companion `blossom-cli` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod accelerator;
pub mod decode;
pub mod graph;
pub mod noise;
pub mod oracle;
pub mod primal;
pub mod shortest_path;
pub mod stream;

pub use accelerator::{DualAccelerator, Instruction, Response};
pub use decode::{decode_batch, DecodeOutcome, DecodeStats};
pub use graph::{DecodingGraph, EdgeDescriptor, VertexDescriptor, Weight};
pub use oracle::SyndromeGraph;
pub use primal::MatchingSolution;
pub use stream::decode_stream;

/// Dense index of a vertex in a decoding graph, in `[0, |V|)`.
pub type VertexIndex = usize;
/// Dense index of an edge in a decoding graph, in `[0, |E|)`.
pub type EdgeIndex = usize;
/// Index of a node (defect singleton or blossom), in `[0, 2|V|)`.
///
/// Defect vertices and virtual vertices use their vertex index as node index;
/// blossoms are allocated from `|V|` upward.
pub type NodeIndex = usize;
/// Measurement-round index of a vertex.
pub type Layer = usize;
