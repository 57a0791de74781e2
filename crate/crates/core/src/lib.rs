//! Hierarchical support graphs: recursive coarsening, augmentation, and the
//! topology metrics used to judge them.

pub mod coarsening;
pub mod error;
pub mod generators;
pub mod graph;
pub mod hsg;
pub mod io;
pub mod lab;
pub mod metrics;
mod parallel;
pub mod propagation;

pub use error::{Error, Result};
pub use graph::{DegreeSummary, EdgeKind, Graph, GraphParts};
