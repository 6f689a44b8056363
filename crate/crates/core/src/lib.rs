//! Bow-tie macrostructure analysis for large directed graphs.
//!
//! The pipeline: ingest an arc list (plus optional per-node metadata) into a
//! compact in-memory graph, partition it into strongly connected components,
//! condense to a DAG, and classify every node into one of eight macrostructure
//! components anchored on the largest strongly connected component:
//! LSC, IN, OUT, IN_TENDRILS, OUT_TENDRILS, BRIDGES, OTHER, DISCONNECTED.
//! On top of the classification sit per-component statistics, creation-date
//! snapshots of the graph's history, and seeded generators with an exhaustive
//! reference classifier for differential testing.
//!
//! Everything is deterministic: the same inputs produce byte-identical output
//! files regardless of thread count, and generators are pure functions of
//! their seed.

pub mod graph;
pub mod ingest;
pub mod macrostructure;
pub mod scc;
pub mod stats;
pub mod synth;
pub mod temporal;
pub mod util;

pub use graph::{build_graph, DirectedGraph, Direction, ExternalId, GraphBuilder, GraphError, NodeIndex};
pub use ingest::{load_dataset, AccountStatus, Dataset, EdgeFormat, IngestError, NodeMeta, ParseError};
pub use macrostructure::{classify, ComponentLabel, Classification, MacroError, MacroSummary};
pub use scc::{compute_scc, condense, ComponentId, CondensedDag, SccPartition};
