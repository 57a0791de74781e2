use crate::error::{Error, Result};
use crate::graph::Graph;

/// Per-layer and cumulative shrink factors of a coarsening hierarchy.
///
/// Ratios are oriented as new/old, so they are at most 1 and
/// `round(cumulative_nodes[i] * n)` is the node count of layer `i + 1`.
/// Edge ratios become `None` from the first layer whose predecessor has no edges.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionTrace {
    /// Node and edge counts of layers `0..=Z`, layer 0 being the input graph.
    pub node_counts: Vec<usize>,
    pub edge_counts: Vec<usize>,
    /// `r(i)` for `i = 1..=Z`.
    pub node_ratio: Vec<f64>,
    /// `c(i)` for `i = 1..=Z`.
    pub edge_ratio: Vec<Option<f64>>,
    /// `R(i)`.
    pub cumulative_nodes: Vec<f64>,
    /// `C(i)`.
    pub cumulative_edges: Vec<Option<f64>>,
}

impl ReductionTrace {
    pub fn layers(&self) -> usize {
        self.node_ratio.len()
    }

    /// `C(i) / R(i)` for each layer `i = 1..=Z`.
    pub fn edge_to_node_ratio(&self) -> Vec<Option<f64>> {
        self.cumulative_edges
            .iter()
            .zip(&self.cumulative_nodes)
            .map(|(c, r)| c.map(|c| c / r))
            .collect()
    }

    /// Layer node counts recomputed as `round(R(i) * n)`.
    pub fn implied_node_counts(&self) -> Vec<usize> {
        let n = self.node_counts[0] as f64;
        self.cumulative_nodes.iter().map(|r| (r * n).round() as usize).collect()
    }
}

pub fn reduction_trace(layers: &[Graph]) -> Result<ReductionTrace> {
    if layers.len() < 2 {
        return Err(Error::domain("reduction trace needs the input graph and at least one layer"));
    }
    if layers.iter().any(|g| g.num_nodes() == 0) {
        return Err(Error::domain("reduction trace over an empty layer"));
    }
    let node_counts: Vec<usize> = layers.iter().map(Graph::num_nodes).collect();
    let edge_counts: Vec<usize> = layers.iter().map(Graph::num_edges).collect();

    let node_ratio: Vec<f64> = node_counts.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    let edge_ratio: Vec<Option<f64>> = edge_counts
        .windows(2)
        .map(|w| (w[0] > 0).then(|| w[1] as f64 / w[0] as f64))
        .collect();

    let cumulative_nodes = node_ratio
        .iter()
        .scan(1.0, |acc, r| {
            *acc *= r;
            Some(*acc)
        })
        .collect();
    let cumulative_edges = edge_ratio
        .iter()
        .scan(Some(1.0), |acc, c| {
            *acc = match (*acc, c) {
                (Some(a), Some(c)) => Some(a * c),
                _ => None,
            };
            Some(*acc)
        })
        .collect();

    Ok(ReductionTrace {
        node_counts,
        edge_counts,
        node_ratio,
        edge_ratio,
        cumulative_nodes,
        cumulative_edges,
    })
}
