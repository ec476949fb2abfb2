//! Estimating graph parameters from intersections of lazy random walks.
//!
//! The crate simulates lazy random walks, counts (weighted) intersections
//! between independent walks and turns them into estimates of the number of
//! edges, the number of vertices and the ℓ²-mixing time from a start vertex.
//! A dense exact oracle provides ground truth for small graphs.

pub mod estimators;
pub mod experiment;
pub mod generators;
pub mod graph;
pub mod intersections;
pub mod oracle;
pub mod stopping;
pub mod walk;

pub use graph::{load_graph, parse_graph, Graph, GraphError, StationaryMeasure};
