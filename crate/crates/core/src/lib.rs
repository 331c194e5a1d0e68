//! Random geometric graphs in the Euclidean unit square and the hyperbolic
//! disk, maximal clique enumeration, and the octahedral-subgraph number
//! `tau(G)`: the largest `t` such that the cocktail-party graph `O_t`
//! (complement of `t` disjoint edges) is an induced subgraph.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: distances, angles, region measures and the segment-pair
//!   record used by the geometric lemma checks, for both planes.
//! - [`graph`]: immutable CSR graph plus SNAP edge-list ingestion.
//! - [`generators`]: point samplers (optionally Poissonized) and the
//!   accelerated threshold-graph builders.
//! - [`cliques`]: pivoting Bron–Kerbosch with a brute-force oracle.
//! - [`octahedron`]: bounds and exact search for `tau`.
//! - [`lowerbound`]: sector families that plant `O_t` in a random graph.
//! - [`lemmacheck`]: Monte-Carlo verification of the segment lemmas.
//!
//! Data-parallel loops go through [`exec::Execution`]; with the `parallel`
//! feature disabled every loop runs sequentially and produces identical
//! results.

mod bitset;
pub mod cliques;
pub mod exec;
pub mod generators;
pub mod geometry;
pub mod graph;
pub mod lemmacheck;
pub mod lowerbound;
pub mod octahedron;

pub use cliques::{
    brute_force_maximal, count_maximal, enumerate_maximal, CliqueError, CliqueStats,
};
pub use exec::Execution;
pub use generators::{build_graph, sample_points, GeometricGraph, PointSet, SampleSpec};
pub use geometry::{ModelError, PlaneModel, Point};
pub use graph::{Graph, GraphError};
pub use octahedron::{OtWitness, TauResult};
