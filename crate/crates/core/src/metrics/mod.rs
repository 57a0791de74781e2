//! Graph measures: shortest paths, effective resistance, commute time and
//! vertex connectivity, plus the per-graph statistics row built from them.

mod connectivity;
mod paths;
mod resistance;
mod walk;

pub use connectivity::{average_node_connectivity, graph_node_connectivity, node_connectivity_pair, SplitNetwork};
pub use paths::{bfs_distances, diameter, path_stats, PathStats, UNREACHED};
pub use resistance::{laplacian, symmetric_eigen, PinvMethod, ResistanceSolver, SymmetricEigen, EIGEN_CUTOFF};
pub use walk::{simulate_commute_time, CommuteEstimate, WALK_CAP};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Which node pairs the pairwise columns average over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PairScope {
    /// Pairs of layer-0 nodes only; support nodes still carry paths.
    #[default]
    OriginalPairs,
    AllPairs,
}

impl PairScope {
    pub fn nodes(self, g: &Graph) -> Vec<usize> {
        match self {
            PairScope::OriginalPairs => (0..g.num_nodes()).filter(|&v| g.node_layer()[v] == 0).collect(),
            PairScope::AllPairs => (0..g.num_nodes()).collect(),
        }
    }
}

/// One statistics row. Counts are per graph; [`MetricsReport::average`]
/// turns a batch into the averaged row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub avg_nodes: f64,
    pub avg_edges: f64,
    pub diameter: f64,
    pub avg_shortest_path: f64,
    pub mean_effective_resistance: f64,
    pub mean_commute_time: f64,
    pub gnc: f64,
    pub anc: f64,
    pub pair_scope: PairScope,
}

/// Statistics of a connected (possibly augmented) graph. Pairwise columns
/// are measured on the full graph and averaged over `scope` pairs.
pub fn stats_report(g: &Graph, scope: PairScope, workers: usize) -> Result<MetricsReport> {
    if !g.is_connected() {
        return Err(Error::domain("statistics need a connected graph"));
    }
    let nodes = scope.nodes(g);
    let paths = path_stats(g, &nodes)?;
    let solver = ResistanceSolver::new(g)?;
    let mean_r = solver.mean_resistance(&nodes)?;
    Ok(MetricsReport {
        avg_nodes: g.num_nodes() as f64,
        avg_edges: g.num_edges() as f64,
        diameter: paths.diameter as f64,
        avg_shortest_path: paths.mean_distance,
        mean_effective_resistance: mean_r,
        mean_commute_time: 2.0 * g.num_edges() as f64 * mean_r,
        gnc: graph_node_connectivity(g) as f64,
        anc: average_node_connectivity(g, Some(&nodes), workers)?,
        pair_scope: scope,
    })
}

impl MetricsReport {
    /// Column-wise mean; `None` for an empty batch.
    pub fn average(reports: &[MetricsReport]) -> Option<MetricsReport> {
        let first = reports.first()?;
        let k = reports.len() as f64;
        let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
        Some(MetricsReport {
            avg_nodes: mean(|r| r.avg_nodes),
            avg_edges: mean(|r| r.avg_edges),
            diameter: mean(|r| r.diameter),
            avg_shortest_path: mean(|r| r.avg_shortest_path),
            mean_effective_resistance: mean(|r| r.mean_effective_resistance),
            mean_commute_time: mean(|r| r.mean_commute_time),
            gnc: mean(|r| r.gnc),
            anc: mean(|r| r.anc),
            pair_scope: first.pair_scope,
        })
    }

    /// Values in CSV column order after the two label columns.
    pub fn columns(&self) -> [f64; 8] {
        [
            self.avg_nodes,
            self.avg_edges,
            self.diameter,
            self.avg_shortest_path,
            self.mean_effective_resistance,
            self.mean_commute_time,
            self.gnc,
            self.anc,
        ]
    }
}

pub const STATS_CSV_HEADER: &str =
    "augmentation,coarsening,avg_nodes,avg_edges,diameter,avg_shortest_path,mean_reff,mean_commute,gnc,anc";
