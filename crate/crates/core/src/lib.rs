//! Oblivious routing on undirected graphs as a convex combination of
//! electrical routings, built by multiplicative weights over sketched
//! per-edge loads.
//!
//! The usual pipeline is [`Graph::parse_edge_list`], [`compute_routing`],
//! then [`routing::competitive_ratio`] or [`routing::Router`] for queries.

pub mod bench;
pub mod error;
pub mod generate;
pub mod graph;
pub mod lapsolve;
pub mod loads;
pub mod mwu;
pub mod routing;
pub mod sketch;

pub use error::{Error, Result};
pub use graph::{Demand, Flow, Graph};
pub use lapsolve::{EdgeWeights, LaplacianSolver, SolverConfig, SolverMode};
pub use loads::{LoadKind, LoadVector};
pub use mwu::{compute_routing, MwuConfig, NormMode, RoutingScheme};
pub use routing::{DemandPairList, RepresentationTable, Router};
pub use sketch::SketchOperator;
