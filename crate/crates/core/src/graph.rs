//! Undirected simple graphs with optional feature payloads and provenance tags.
//!
//! Edges are stored canonically as `(u, v)` with `u < v`, sorted
//! lexicographically. Every per-edge array (`edge_kind`, `edge_features`) is
//! parallel to that sorted edge list, so two graphs with equal content compare
//! equal and serialize to identical bytes.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Provenance of an edge in an augmented graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// Edge of the ingested graph.
    Original,
    /// Edge inside one support layer, produced by a quotient.
    Horizontal,
    /// Edge from a node to its direct super-node.
    Vertical,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 3] = [EdgeKind::Original, EdgeKind::Horizontal, EdgeKind::Vertical];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Original => "original",
            EdgeKind::Horizontal => "horizontal",
            EdgeKind::Vertical => "vertical",
        }
    }

    /// Position of this kind in the one-hot edge indicator.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(EdgeKind::Original),
            "horizontal" => Ok(EdgeKind::Horizontal),
            "vertical" => Ok(EdgeKind::Vertical),
            other => Err(Error::invalid(format!("unknown edge kind {other:?}"))),
        }
    }
}

/// Unvalidated graph contents, used to build a [`Graph`] in one step.
///
/// `edges` may be given in any order and orientation; parallel arrays follow
/// the order given here and are permuted together with the edges.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphParts {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub node_features: Option<Vec<Vec<f64>>>,
    pub edge_features: Option<Vec<Vec<f64>>>,
    /// Defaults to all zeros when empty.
    pub node_layer: Vec<u32>,
    /// Defaults to all [`EdgeKind::Original`] when empty.
    pub edge_kind: Vec<EdgeKind>,
}

/// Undirected simple graph. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    node_features: Option<Vec<Vec<f64>>>,
    edge_features: Option<Vec<Vec<f64>>>,
    node_layer: Vec<u32>,
    edge_kind: Vec<EdgeKind>,
}

/// Result of [`Graph::induced_subgraph`].
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub graph: Graph,
    /// `old_to_new[v]` is the new index of kept node `v`.
    pub old_to_new: Vec<Option<usize>>,
    /// `new_to_old[i]` is the original index of new node `i`.
    pub new_to_old: Vec<usize>,
}

/// Mean degrees of the nodes of one layer, split by incident edge kind.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerDegree {
    pub layer: u32,
    pub nodes: usize,
    pub mean_original: f64,
    pub mean_horizontal: f64,
    pub mean_vertical: f64,
}

impl LayerDegree {
    pub fn mean_total(&self) -> f64 {
        self.mean_original + self.mean_horizontal + self.mean_vertical
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeSummary {
    /// `2|E| / |V|` over the whole graph.
    pub mean_degree: f64,
    pub per_layer: Vec<LayerDegree>,
}

fn check_uniform(rows: &[Vec<f64>], what: &str) -> Result<usize> {
    let dim = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
        return Err(Error::invalid(format!(
            "{what} {bad} has dimension {} but expected {dim}",
            rows[bad].len()
        )));
    }
    Ok(dim)
}

impl Graph {
    /// Plain graph with every node in layer 0 and every edge original.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_parts(GraphParts {
            num_nodes,
            edges: edges.into_iter().collect(),
            ..GraphParts::default()
        })
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self::new(num_nodes, []).expect("edgeless graph is valid")
    }

    /// Validates and canonicalizes `parts`.
    ///
    /// Rejects self-loops, duplicate edges, out-of-range endpoints and
    /// ragged feature arrays. Feature arrays of dimension zero are dropped.
    pub fn from_parts(parts: GraphParts) -> Result<Self> {
        let GraphParts {
            num_nodes,
            edges,
            node_features,
            edge_features,
            node_layer,
            edge_kind,
        } = parts;
        let m = edges.len();

        let node_layer = if node_layer.is_empty() {
            vec![0; num_nodes]
        } else if node_layer.len() != num_nodes {
            return Err(Error::invalid(format!(
                "node_layer has {} entries for {num_nodes} nodes",
                node_layer.len()
            )));
        } else {
            node_layer
        };
        let edge_kind = if edge_kind.is_empty() {
            vec![EdgeKind::Original; m]
        } else if edge_kind.len() != m {
            return Err(Error::invalid(format!("edge_kind has {} entries for {m} edges", edge_kind.len())));
        } else {
            edge_kind
        };

        let node_features = match node_features {
            Some(rows) => {
                if rows.len() != num_nodes {
                    return Err(Error::invalid(format!(
                        "node_features has {} rows for {num_nodes} nodes",
                        rows.len()
                    )));
                }
                (check_uniform(&rows, "node feature")? > 0).then_some(rows)
            }
            None => None,
        };
        let edge_features = match edge_features {
            Some(rows) => {
                if rows.len() != m {
                    return Err(Error::invalid(format!("edge_features has {} rows for {m} edges", rows.len())));
                }
                (check_uniform(&rows, "edge feature")? > 0).then_some(rows)
            }
            None => None,
        };

        let mut order: Vec<usize> = (0..m).collect();
        let mut canon = Vec::with_capacity(m);
        for &(u, v) in &edges {
            for x in [u, v] {
                if x >= num_nodes {
                    return Err(Error::IndexOutOfRange { index: x, num_nodes });
                }
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop on node {u}")));
            }
            canon.push((u.min(v), u.max(v)));
        }
        order.sort_by_key(|&i| canon[i]);
        for w in order.windows(2) {
            if canon[w[0]] == canon[w[1]] {
                let (u, v) = canon[w[0]];
                return Err(Error::invalid(format!("duplicate edge {{{u}, {v}}}")));
            }
        }

        let edges: Vec<(usize, usize)> = order.iter().map(|&i| canon[i]).collect();
        let edge_kind = order.iter().map(|&i| edge_kind[i]).collect();
        let edge_features = edge_features.map(|rows| {
            let mut rows: Vec<Option<Vec<f64>>> = rows.into_iter().map(Some).collect();
            order.iter().map(|&i| rows[i].take().expect("permutation")).collect()
        });

        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        Ok(Graph {
            num_nodes,
            edges,
            adjacency,
            node_features,
            edge_features,
            node_layer,
            edge_kind,
        })
    }

    pub fn into_parts(self) -> GraphParts {
        GraphParts {
            num_nodes: self.num_nodes,
            edges: self.edges,
            node_features: self.node_features,
            edge_features: self.edge_features,
            node_layer: self.node_layer,
            edge_kind: self.edge_kind,
        }
    }

    pub fn with_node_features(self, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut parts = self.into_parts();
        parts.node_features = Some(rows);
        Self::from_parts(parts)
    }

    /// `rows` must be parallel to [`Graph::edges`].
    pub fn with_edge_features(self, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut parts = self.into_parts();
        parts.edge_features = Some(rows);
        Self::from_parts(parts)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_features(&self) -> Option<&[Vec<f64>]> {
        self.node_features.as_deref()
    }

    pub fn edge_features(&self) -> Option<&[Vec<f64>]> {
        self.edge_features.as_deref()
    }

    pub fn node_layer(&self) -> &[u32] {
        &self.node_layer
    }

    pub fn edge_kind(&self) -> &[EdgeKind] {
        &self.edge_kind
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v < self.num_nodes {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: v,
                num_nodes: self.num_nodes,
            })
        }
    }

    /// Sorted neighborhood of `v`.
    pub fn neighbors(&self, v: usize) -> Result<&[usize]> {
        self.check_node(v)?;
        Ok(&self.adjacency[v])
    }

    /// Unchecked neighborhood access for hot loops; panics when out of range.
    #[inline]
    pub fn adj(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn degree_summary(&self) -> Result<DegreeSummary> {
        if self.num_nodes == 0 {
            return Err(Error::domain("degree summary of an empty graph"));
        }
        let max_layer = self.node_layer.iter().copied().max().unwrap_or(0) as usize;
        // [layer][kind] incident edge counts
        let mut counts = vec![[0usize; 3]; max_layer + 1];
        let mut nodes = vec![0usize; max_layer + 1];
        for &l in &self.node_layer {
            nodes[l as usize] += 1;
        }
        for (&(u, v), kind) in self.edges.iter().zip(&self.edge_kind) {
            counts[self.node_layer[u] as usize][kind.index()] += 1;
            counts[self.node_layer[v] as usize][kind.index()] += 1;
        }
        let per_layer = (0..=max_layer)
            .filter(|&l| nodes[l] > 0)
            .map(|l| {
                let n = nodes[l] as f64;
                LayerDegree {
                    layer: l as u32,
                    nodes: nodes[l],
                    mean_original: counts[l][0] as f64 / n,
                    mean_horizontal: counts[l][1] as f64 / n,
                    mean_vertical: counts[l][2] as f64 / n,
                }
            })
            .collect();
        Ok(DegreeSummary {
            mean_degree: 2.0 * self.num_edges() as f64 / self.num_nodes as f64,
            per_layer,
        })
    }

    /// Maximal connected node sets, each sorted, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.num_nodes];
        let mut components = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.num_nodes {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &w in &self.adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    /// True for graphs with exactly one component. The empty graph is not connected.
    pub fn is_connected(&self) -> bool {
        if self.num_nodes == 0 {
            return false;
        }
        let mut seen = vec![false; self.num_nodes];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &self.adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.num_nodes
    }

    /// Subgraph induced by `keep`, reindexed densely in increasing old-index order.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<Subgraph> {
        let mut old_to_new = vec![None; self.num_nodes];
        for &v in keep {
            self.check_node(v)?;
            old_to_new[v] = Some(0);
        }
        let mut new_to_old = Vec::with_capacity(keep.len());
        for v in 0..self.num_nodes {
            if old_to_new[v].is_some() {
                old_to_new[v] = Some(new_to_old.len());
                new_to_old.push(v);
            }
        }

        let mut edges = Vec::new();
        let mut edge_kind = Vec::new();
        let mut edge_features = self.edge_features.as_ref().map(|_| Vec::new());
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if let (Some(a), Some(b)) = (old_to_new[u], old_to_new[v]) {
                edges.push((a, b));
                edge_kind.push(self.edge_kind[i]);
                if let (Some(out), Some(src)) = (edge_features.as_mut(), self.edge_features.as_ref()) {
                    out.push(src[i].clone());
                }
            }
        }
        let graph = Graph::from_parts(GraphParts {
            num_nodes: new_to_old.len(),
            edges,
            node_features: self
                .node_features
                .as_ref()
                .map(|rows| new_to_old.iter().map(|&v| rows[v].clone()).collect()),
            edge_features,
            node_layer: new_to_old.iter().map(|&v| self.node_layer[v]).collect(),
            edge_kind,
        })?;
        Ok(Subgraph {
            graph,
            old_to_new,
            new_to_old,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    fn triangle() -> Graph {
        Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn neighbors_examples() {
        assert_eq!(triangle().neighbors(0).unwrap(), &[1, 2]);
        assert_eq!(generators::path(3).neighbors(1).unwrap(), &[0, 2]);
        assert!(Graph::empty(3).neighbors(2).unwrap().is_empty());
        assert!(matches!(
            triangle().neighbors(3),
            Err(Error::IndexOutOfRange { index: 3, num_nodes: 3 })
        ));
    }

    #[test]
    fn degree_summary_examples() {
        assert_eq!(triangle().degree_summary().unwrap().mean_degree, 2.0);
        assert_eq!(generators::path(4).degree_summary().unwrap().mean_degree, 1.5);
        assert_eq!(generators::star(5).degree_summary().unwrap().mean_degree, 1.6);
        assert!(matches!(Graph::empty(0).degree_summary(), Err(Error::Domain(_))));
    }

    #[test]
    fn components() {
        assert_eq!(generators::path(4).connected_components().len(), 1);
        let two = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(two.connected_components(), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(Graph::empty(3).connected_components().len(), 3);
        assert!(!two.is_connected());
    }

    #[test]
    fn induced_subgraph_examples() {
        let sub = triangle().induced_subgraph(&[0, 1]).unwrap();
        assert_eq!(sub.graph.edges(), &[(0, 1)]);

        let sub = generators::path(4).induced_subgraph(&[0, 2, 3]).unwrap();
        assert_eq!(sub.graph.edges(), &[(1, 2)]);
        assert_eq!(sub.new_to_old, vec![0, 2, 3]);
        assert_eq!(sub.old_to_new, vec![Some(0), None, Some(1), Some(2)]);

        let g = generators::grid(3, 3);
        let all: Vec<usize> = (0..9).collect();
        assert_eq!(g.induced_subgraph(&all).unwrap().graph, g);
    }

    #[test]
    fn rejects_malformed_edges() {
        assert!(matches!(Graph::new(2, [(1, 1)]), Err(Error::Invalid(_))));
        assert!(matches!(Graph::new(2, [(0, 1), (1, 0)]), Err(Error::Invalid(_))));
        assert!(matches!(Graph::new(2, [(0, 2)]), Err(Error::IndexOutOfRange { .. })));
        let ragged = Graph::new(2, [(0, 1)]).unwrap().with_node_features(vec![vec![1.0], vec![]]);
        assert!(ragged.is_err());
    }

    #[test]
    fn edge_arrays_follow_canonical_order() {
        let g = Graph::from_parts(GraphParts {
            num_nodes: 3,
            edges: vec![(2, 1), (0, 1)],
            edge_features: Some(vec![vec![21.0], vec![1.0]]),
            edge_kind: vec![EdgeKind::Horizontal, EdgeKind::Original],
            ..GraphParts::default()
        })
        .unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.edge_features().unwrap(), &[vec![1.0], vec![21.0]]);
        assert_eq!(g.edge_kind(), &[EdgeKind::Original, EdgeKind::Horizontal]);
        assert_eq!(g.edge_index(2, 1), Some(1));
    }

    #[test]
    fn per_layer_degrees_split_by_kind() {
        let g = Graph::from_parts(GraphParts {
            num_nodes: 3,
            edges: vec![(0, 1), (0, 2), (1, 2)],
            node_layer: vec![0, 0, 1],
            edge_kind: vec![EdgeKind::Original, EdgeKind::Vertical, EdgeKind::Vertical],
            ..GraphParts::default()
        })
        .unwrap();
        let s = g.degree_summary().unwrap();
        assert_eq!(s.per_layer[0].mean_original, 1.0);
        assert_eq!(s.per_layer[0].mean_vertical, 1.0);
        assert_eq!(s.per_layer[1].mean_vertical, 2.0);
        assert_eq!(s.per_layer[1].mean_horizontal, 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = Graph> {
            (1usize..20).prop_flat_map(|n| {
                proptest::collection::btree_set((0..n, 0..n), 0..40).prop_map(move |pairs| {
                    let edges: std::collections::BTreeSet<_> = pairs
                        .into_iter()
                        .filter(|(u, v)| u != v)
                        .map(|(u, v)| (u.min(v), u.max(v)))
                        .collect();
                    Graph::new(n, edges).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn degree_sum_is_twice_edges(g in arb_graph()) {
                let total: usize = (0..g.num_nodes()).map(|v| g.degree(v)).sum();
                prop_assert_eq!(total, 2 * g.num_edges());
            }

            #[test]
            fn neighbors_symmetric(g in arb_graph()) {
                for v in 0..g.num_nodes() {
                    for &u in g.neighbors(v).unwrap() {
                        prop_assert!(g.neighbors(u).unwrap().contains(&v));
                    }
                }
            }

            #[test]
            fn components_partition_nodes(g in arb_graph()) {
                let mut all: Vec<usize> = g.connected_components().concat();
                all.sort_unstable();
                prop_assert_eq!(all, (0..g.num_nodes()).collect::<Vec<_>>());
            }
        }
    }
}
