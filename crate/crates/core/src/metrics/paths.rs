use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const UNREACHED: usize = usize::MAX;

/// Hop distances from `source`; [`UNREACHED`] for other components.
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<usize> {
    let mut dist = vec![UNREACHED; g.num_nodes()];
    let mut queue = VecDeque::with_capacity(g.num_nodes());
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = dist[u] + 1;
        for &w in g.adj(u) {
            if dist[w] == UNREACHED {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Shortest-path aggregates over unordered pairs of `scope`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathStats {
    pub diameter: usize,
    pub mean_distance: f64,
    pub pairs: usize,
}

/// Distances measured in the whole graph, aggregated over pairs inside `scope`.
/// Fails when two scope nodes are disconnected.
pub fn path_stats(g: &Graph, scope: &[usize]) -> Result<PathStats> {
    if scope.len() < 2 {
        return Err(Error::domain("path statistics need at least two nodes in scope"));
    }
    let mut diameter = 0;
    let mut total = 0u64;
    for (i, &s) in scope.iter().enumerate() {
        let dist = bfs_distances(g, s);
        for &t in &scope[i + 1..] {
            let d = dist[t];
            if d == UNREACHED {
                return Err(Error::domain(format!("nodes {s} and {t} are disconnected")));
            }
            diameter = diameter.max(d);
            total += d as u64;
        }
    }
    let pairs = scope.len() * (scope.len() - 1) / 2;
    Ok(PathStats {
        diameter,
        mean_distance: total as f64 / pairs as f64,
        pairs,
    })
}

/// Diameter over all node pairs; `None` when disconnected.
pub fn diameter(g: &Graph) -> Option<usize> {
    let mut best = 0;
    for s in 0..g.num_nodes() {
        let far = bfs_distances(g, s).into_iter().max().unwrap_or(0);
        if far == UNREACHED {
            return None;
        }
        best = best.max(far);
    }
    Some(best)
}
