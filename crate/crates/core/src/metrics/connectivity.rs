//! Vertex connectivity by unit-capacity max-flow on the node-split graph.
//!
//! Every node `x` becomes `x_in -> x_out` with capacity 1, every edge
//! `{x, y}` becomes `x_out -> y_in` and `y_out -> x_in`. The max flow from
//! `s_out` to `t_in` counts internally node-disjoint `s`-`t` paths, which by
//! Menger equals the minimum separating set for non-adjacent pairs. Adjacent
//! pairs report `1 +` the flow with their shared edge removed.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::parallel::with_workers;

const NONE: u32 = u32::MAX;

/// Reusable residual network for one graph.
pub struct SplitNetwork<'g> {
    g: &'g Graph,
    to: Vec<u32>,
    base_cap: Vec<u8>,
    cap: Vec<u8>,
    arcs_of: Vec<Vec<u32>>,
    parent: Vec<u32>,
    queue: VecDeque<u32>,
}

impl<'g> SplitNetwork<'g> {
    pub fn new(g: &'g Graph) -> Self {
        let n = g.num_nodes();
        let arc_count = 2 * n + 4 * g.num_edges();
        let mut to = Vec::with_capacity(arc_count);
        let mut base_cap = Vec::with_capacity(arc_count);
        let mut arcs_of = vec![Vec::new(); 2 * n];
        let mut add = |from: usize, dest: usize, to: &mut Vec<u32>, base_cap: &mut Vec<u8>| {
            let a = to.len() as u32;
            to.push(dest as u32);
            base_cap.push(1);
            arcs_of[from].push(a);
            to.push(from as u32);
            base_cap.push(0);
            arcs_of[dest].push(a + 1);
        };
        for x in 0..n {
            add(2 * x, 2 * x + 1, &mut to, &mut base_cap);
        }
        for &(u, v) in g.edges() {
            add(2 * u + 1, 2 * v, &mut to, &mut base_cap);
            add(2 * v + 1, 2 * u, &mut to, &mut base_cap);
        }
        SplitNetwork {
            g,
            cap: base_cap.clone(),
            to,
            base_cap,
            arcs_of,
            parent: vec![NONE; 2 * n],
            queue: VecDeque::new(),
        }
    }

    fn augment(&mut self, source: u32, sink: u32) -> bool {
        self.parent.iter_mut().for_each(|p| *p = NONE);
        self.queue.clear();
        self.queue.push_back(source);
        // mark the source as visited with a dummy arc id
        self.parent[source as usize] = NONE - 1;
        while let Some(x) = self.queue.pop_front() {
            for &a in &self.arcs_of[x as usize] {
                let y = self.to[a as usize];
                if self.cap[a as usize] == 0 || self.parent[y as usize] != NONE {
                    continue;
                }
                self.parent[y as usize] = a;
                if y == sink {
                    let mut at = sink;
                    while at != source {
                        let a = self.parent[at as usize] as usize;
                        self.cap[a] -= 1;
                        self.cap[a ^ 1] += 1;
                        at = self.to[a ^ 1];
                    }
                    return true;
                }
                self.queue.push_back(y);
            }
        }
        false
    }

    /// Connectivity of `u != v` under the adjacent-pair convention above.
    pub fn pair(&mut self, u: usize, v: usize) -> usize {
        debug_assert_ne!(u, v);
        let g = self.g;
        let n = g.num_nodes();
        self.cap.copy_from_slice(&self.base_cap);
        let direct = g.edge_index(u, v);
        if let Some(i) = direct {
            let base = 2 * n + 4 * i;
            self.cap[base] = 0;
            self.cap[base + 2] = 0;
        }
        let adjacent = usize::from(direct.is_some());
        let bound = (g.degree(u) - adjacent).min(g.degree(v) - adjacent);
        let (source, sink) = ((2 * u + 1) as u32, (2 * v) as u32);
        let mut flow = 0;
        while flow < bound && self.augment(source, sink) {
            flow += 1;
        }
        flow + adjacent
    }
}

fn check_pair(g: &Graph, u: usize, v: usize) -> Result<()> {
    for x in [u, v] {
        if x >= g.num_nodes() {
            return Err(Error::IndexOutOfRange {
                index: x,
                num_nodes: g.num_nodes(),
            });
        }
    }
    if u == v {
        return Err(Error::domain("node connectivity needs two distinct nodes"));
    }
    Ok(())
}

/// Number of internally node-disjoint paths between `u` and `v`; for
/// non-adjacent nodes this is the minimum separating set size.
pub fn node_connectivity_pair(g: &Graph, u: usize, v: usize) -> Result<usize> {
    check_pair(g, u, v)?;
    Ok(SplitNetwork::new(g).pair(u, v))
}

/// Minimum number of nodes whose removal disconnects `g`.
///
/// Fixes a minimum-degree node `x` and takes the minimum of `deg(x)`,
/// `kappa(x, w)` over non-neighbors `w`, and `kappa(a, b)` over non-adjacent
/// neighbor pairs of `x`. Complete graphs give `n - 1`, disconnected graphs 0.
pub fn graph_node_connectivity(g: &Graph) -> usize {
    let n = g.num_nodes();
    if n <= 1 || !g.is_connected() {
        return 0;
    }
    if g.num_edges() == n * (n - 1) / 2 {
        return n - 1;
    }
    let x = (0..n).min_by_key(|&v| (g.degree(v), v)).expect("n >= 2");
    let mut net = SplitNetwork::new(g);
    let mut best = g.degree(x);
    for w in 0..n {
        if w != x && !g.has_edge(x, w) {
            best = best.min(net.pair(x, w));
        }
    }
    let nbrs = g.adj(x);
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if !g.has_edge(a, b) {
                best = best.min(net.pair(a, b));
            }
        }
    }
    best
}

/// Mean pair connectivity over unordered pairs of `scope` (all nodes when
/// `None`). Pairs are split across `workers` threads; the sum is exact, so
/// the result does not depend on the worker count.
pub fn average_node_connectivity(g: &Graph, scope: Option<&[usize]>, workers: usize) -> Result<f64> {
    let all: Vec<usize>;
    let scope = match scope {
        Some(s) => s,
        None => {
            all = (0..g.num_nodes()).collect();
            &all
        }
    };
    if scope.len() < 2 {
        return Err(Error::domain("average connectivity needs at least two nodes in scope"));
    }
    if let Some(&bad) = scope.iter().find(|&&v| v >= g.num_nodes()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            num_nodes: g.num_nodes(),
        });
    }
    let pairs: Vec<(usize, usize)> = scope
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| scope[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let chunk = pairs.len().div_ceil(workers.max(1) * 4).max(1);
    let total: u64 = with_workers(workers, || {
        pairs
            .par_chunks(chunk)
            .map(|chunk| {
                let mut net = SplitNetwork::new(g);
                chunk.iter().map(|&(a, b)| net.pair(a, b) as u64).sum::<u64>()
            })
            .collect::<Vec<u64>>()
            .into_iter()
            .sum()
    });
    Ok(total as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::hsg::{build_hsg, CoarseningSchedule};

    #[test]
    fn pair_examples() {
        let c5 = generators::cycle(5);
        for v in 1..5 {
            assert_eq!(node_connectivity_pair(&c5, 0, v).unwrap(), 2);
        }
        let k4 = generators::complete(4);
        assert_eq!(node_connectivity_pair(&k4, 1, 3).unwrap(), 3);
        assert_eq!(node_connectivity_pair(&generators::path(5), 0, 4).unwrap(), 1);
        let split = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(node_connectivity_pair(&split, 0, 3).unwrap(), 0);
        assert!(node_connectivity_pair(&k4, 2, 2).is_err());
    }

    #[test]
    fn graph_connectivity_examples() {
        let mut rng = generators::seeded_rng(1);
        assert_eq!(graph_node_connectivity(&generators::random_tree(20, &mut rng)), 1);
        assert_eq!(graph_node_connectivity(&generators::cycle(6)), 2);
        assert_eq!(graph_node_connectivity(&generators::grid(2, 3)), 2);
        assert_eq!(graph_node_connectivity(&generators::complete(5)), 4);
        assert_eq!(graph_node_connectivity(&Graph::new(4, [(0, 1), (2, 3)]).unwrap()), 0);
    }

    #[test]
    fn average_examples() {
        for n in [3, 4, 7, 12] {
            assert_eq!(average_node_connectivity(&generators::cycle(n), None, 1).unwrap(), 2.0);
        }
        let mut rng = generators::seeded_rng(2);
        let tree = generators::random_tree(15, &mut rng);
        assert_eq!(average_node_connectivity(&tree, None, 1).unwrap(), 1.0);

        let star = generators::star(6);
        let h = build_hsg(&star, &CoarseningSchedule::virtual_node()).unwrap();
        let scope: Vec<usize> = (0..6).collect();
        assert_eq!(average_node_connectivity(h.graph(), Some(&scope), 1).unwrap(), 2.0);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let g = crate::lab::gen_erdos_renyi(30, 0.2, 4);
        let one = average_node_connectivity(&g, None, 1).unwrap();
        let three = average_node_connectivity(&g, None, 3).unwrap();
        assert_eq!(one.to_bits(), three.to_bits());
    }
}
