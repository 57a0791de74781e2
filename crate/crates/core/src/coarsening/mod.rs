//! Node partitions, quotient graphs and reduction bookkeeping.

mod multilevel;
mod trace;

pub use multilevel::{partition_balanced_cut, DEFAULT_EPSILON};
pub use trace::{reduction_trace, ReductionTrace};

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::generators::seeded_rng;
use crate::graph::Graph;
use crate::io::{as_array, as_usize};

/// Surjective assignment of nodes to `q` clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    cluster_of: Vec<usize>,
    q: usize,
    edge_cut: usize,
    max_imbalance: f64,
}

impl Partition {
    /// Validates `cluster_of` against `g` and computes the cut and imbalance.
    pub fn new(g: &Graph, cluster_of: Vec<usize>, q: usize) -> Result<Self> {
        if cluster_of.len() != g.num_nodes() {
            return Err(Error::invalid(format!(
                "partition covers {} nodes, graph has {}",
                cluster_of.len(),
                g.num_nodes()
            )));
        }
        if q == 0 {
            return Err(Error::invalid("partition needs at least one cluster"));
        }
        let mut sizes = vec![0usize; q];
        for &c in &cluster_of {
            if c >= q {
                return Err(Error::invalid(format!("cluster id {c} out of range for q = {q}")));
            }
            sizes[c] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::invalid(format!("cluster {empty} is empty")));
        }
        let edge_cut = count_cut(g, &cluster_of);
        let largest = *sizes.iter().max().expect("q >= 1") as f64;
        Ok(Partition {
            max_imbalance: largest * q as f64 / g.num_nodes() as f64,
            cluster_of,
            q,
            edge_cut,
        })
    }

    pub fn cluster_of(&self) -> &[usize] {
        &self.cluster_of
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn edge_cut(&self) -> usize {
        self.edge_cut
    }

    /// Largest cluster size divided by `n / q`.
    pub fn max_imbalance(&self) -> f64 {
        self.max_imbalance
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.q];
        for &c in &self.cluster_of {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.q];
        for (v, &c) in self.cluster_of.iter().enumerate() {
            members[c].push(v);
        }
        members
    }

    pub fn to_value(&self) -> Map<String, Value> {
        let mut obj = Map::new();
        obj.insert("cluster_of".into(), Value::from(self.cluster_of.clone()));
        obj.insert("q".into(), Value::from(self.q));
        obj
    }

    pub fn from_value(g: &Graph, obj: &Map<String, Value>) -> Result<Self> {
        let cluster_of = as_array(
            obj.get("cluster_of").ok_or_else(|| Error::invalid("missing key \"cluster_of\""))?,
            "cluster_of",
        )?
        .iter()
        .map(|c| as_usize(c, "cluster id"))
        .collect::<Result<Vec<_>>>()?;
        let q = as_usize(obj.get("q").ok_or_else(|| Error::invalid("missing key \"q\""))?, "q")?;
        Partition::new(g, cluster_of, q)
    }
}

pub(crate) fn count_cut(g: &Graph, cluster_of: &[usize]) -> usize {
    g.edges()
        .iter()
        .filter(|&&(u, v)| cluster_of[u] != cluster_of[v])
        .count()
}

/// `max(1, floor(r * n))`. The tiny slack absorbs representation error in
/// products such as `0.29 * 100`.
pub fn cluster_count(r: f64, n: usize) -> usize {
    ((r * n as f64 + 1e-9).floor() as usize).clamp(1, n.max(1))
}

/// Uniform shuffle followed by round-robin slicing into `q` clusters whose
/// sizes differ by at most one.
pub fn random_assignment<R: Rng>(n: usize, q: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut cluster_of = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        cluster_of[v] = i % q;
    }
    cluster_of
}

/// Random equal-size partition into `max(1, floor(r * n))` clusters.
pub fn partition_random(g: &Graph, r: f64, seed: u64) -> Result<Partition> {
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::domain("cannot partition an empty graph"));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::domain(format!("coarsening ratio {r} outside (0, 1]")));
    }
    let q = cluster_count(r, n);
    let cluster_of = random_assignment(n, q, &mut seeded_rng(seed));
    Partition::new(g, cluster_of, q)
}

/// Quotient graph: one node per cluster, an edge wherever some original edge
/// crosses the two clusters. Features are not carried over.
pub fn quotient(g: &Graph, p: &Partition) -> Result<Graph> {
    if p.cluster_of.len() != g.num_nodes() {
        return Err(Error::invalid("partition does not match graph"));
    }
    let mut pairs: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter_map(|&(u, v)| {
            let (a, b) = (p.cluster_of[u], p.cluster_of[v]);
            (a != b).then(|| (a.min(b), a.max(b)))
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    Graph::new(p.q, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    #[test]
    fn random_partition_examples() {
        let p = partition_random(&generators::path(4), 0.5, 1).unwrap();
        assert_eq!(p.q(), 2);
        assert_eq!(p.sizes(), vec![2, 2]);

        let p = partition_random(&generators::path(5), 0.5, 1).unwrap();
        assert_eq!(p.q(), 2);
        let mut sizes = p.sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 3]);

        let p = partition_random(&generators::path(10), 0.05, 1).unwrap();
        assert_eq!(p.q(), 1);
        assert_eq!(p.edge_cut(), 0);
    }

    #[test]
    fn random_partition_is_seeded() {
        let g = generators::grid(5, 5);
        assert_eq!(partition_random(&g, 0.3, 4).unwrap(), partition_random(&g, 0.3, 4).unwrap());
        assert_ne!(
            partition_random(&g, 0.3, 4).unwrap().cluster_of(),
            partition_random(&g, 0.3, 5).unwrap().cluster_of()
        );
    }

    #[test]
    fn cluster_count_floors_and_clamps() {
        assert_eq!(cluster_count(0.29, 100), 29);
        assert_eq!(cluster_count(0.1, 1000), 100);
        assert_eq!(cluster_count(0.01, 10), 1);
        assert_eq!(cluster_count(1.0, 7), 7);
    }

    #[test]
    fn partition_validation() {
        let g = generators::path(3);
        assert!(Partition::new(&g, vec![0, 0, 2], 3).is_err());
        assert!(Partition::new(&g, vec![0, 0], 1).is_err());
        assert!(Partition::new(&g, vec![0, 3, 1], 2).is_err());
        let p = Partition::new(&g, vec![0, 0, 1], 2).unwrap();
        assert_eq!(p.edge_cut(), 1);
        assert!((p.max_imbalance() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn partition_json_round_trip() {
        let g = generators::grid(3, 3);
        let p = partition_random(&g, 0.4, 2).unwrap();
        assert_eq!(Partition::from_value(&g, &p.to_value()).unwrap(), p);
    }

    #[test]
    fn quotient_examples() {
        let path = generators::path(4);
        let h = quotient(&path, &Partition::new(&path, vec![0, 0, 1, 1], 2).unwrap()).unwrap();
        assert_eq!(h.num_nodes(), 2);
        assert_eq!(h.edges(), &[(0, 1)]);

        let tri = generators::complete(3);
        let h = quotient(&tri, &Partition::new(&tri, vec![0, 0, 1], 2).unwrap()).unwrap();
        assert_eq!(h.edges(), &[(0, 1)]);

        let grid = generators::grid(2, 4);
        let p = partition_balanced_cut(&grid, 2, 0.1, 0).unwrap();
        let h = quotient(&grid, &p).unwrap();
        assert_eq!((h.num_nodes(), h.num_edges()), (2, 1));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn random_clusters_balanced(n in 1usize..200, r in 0.01f64..=1.0, seed in any::<u64>()) {
                let g = Graph::empty(n);
                let sizes = partition_random(&g, r, seed).unwrap().sizes();
                let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }

            #[test]
            fn quotient_of_connected_is_connected(n in 2usize..60, r in 0.05f64..=1.0, seed in any::<u64>()) {
                let g = generators::random_tree(n, &mut seeded_rng(seed));
                let p = partition_random(&g, r, seed ^ 1).unwrap();
                let h = quotient(&g, &p).unwrap();
                prop_assert_eq!(h.num_nodes(), p.q());
                prop_assert!(h.is_connected());
                prop_assert_eq!(p.edge_cut(), count_cut(&g, p.cluster_of()));
            }
        }
    }
}
