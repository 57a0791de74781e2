//! Multilevel balanced k-way partitioning.
//!
//! 1. Coarsen by heavy-edge matching until at most `max(2q, 64)` nodes remain.
//! 2. Grow an initial `q`-way partition on the coarsest graph by greedy
//!    region growing from pseudo-peripheral seeds (best of several tries).
//! 3. Project back level by level; at each level repair balance, then make one
//!    greedy pass of boundary moves that strictly reduce the cut.
//!
//! The size bound is `floor((1 + epsilon) * ceil(n / q))` in original nodes.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Partition;
use crate::error::{Error, Result};
use crate::generators::seeded_rng;
use crate::graph::Graph;

pub const DEFAULT_EPSILON: f64 = 0.10;

const MIN_COARSEST: usize = 64;
const INITIAL_TRIES: usize = 8;

/// Node- and edge-weighted graph in CSR form.
#[derive(Clone, Debug)]
struct WeightedGraph {
    xadj: Vec<usize>,
    adj: Vec<usize>,
    ew: Vec<u64>,
    vw: Vec<u64>,
}

impl WeightedGraph {
    fn from_graph(g: &Graph) -> Self {
        let n = g.num_nodes();
        let mut xadj = Vec::with_capacity(n + 1);
        let mut adj = Vec::with_capacity(2 * g.num_edges());
        xadj.push(0);
        for v in 0..n {
            adj.extend_from_slice(g.adj(v));
            xadj.push(adj.len());
        }
        WeightedGraph {
            ew: vec![1; adj.len()],
            vw: vec![1; n],
            xadj,
            adj,
        }
    }

    fn len(&self) -> usize {
        self.vw.len()
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let range = self.xadj[v]..self.xadj[v + 1];
        self.adj[range.clone()].iter().copied().zip(self.ew[range].iter().copied())
    }

    fn cut(&self, part: &[usize]) -> u64 {
        let mut twice = 0;
        for v in 0..self.len() {
            for (w, e) in self.neighbors(v) {
                if part[v] != part[w] {
                    twice += e;
                }
            }
        }
        twice / 2
    }
}

struct Level {
    /// Fine-to-coarse node map.
    cmap: Vec<usize>,
    coarse: WeightedGraph,
}

fn heavy_edge_matching(g: &WeightedGraph, max_vw: u64, rng: &mut ChaCha8Rng) -> Level {
    let n = g.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut mate = vec![usize::MAX; n];
    for &u in &order {
        if mate[u] != usize::MAX {
            continue;
        }
        let mut best: Option<(u64, usize)> = None;
        for (v, e) in g.neighbors(u) {
            if mate[v] != usize::MAX || g.vw[u] + g.vw[v] > max_vw {
                continue;
            }
            let better = match best {
                None => true,
                Some((be, bv)) => e > be || (e == be && v < bv),
            };
            if better {
                best = Some((e, v));
            }
        }
        match best {
            Some((_, v)) => {
                mate[u] = v;
                mate[v] = u;
            }
            None => mate[u] = u,
        }
    }

    let mut cmap = vec![usize::MAX; n];
    let mut nc = 0;
    for u in 0..n {
        if cmap[u] == usize::MAX {
            cmap[u] = nc;
            cmap[mate[u]] = nc;
            nc += 1;
        }
    }

    let mut vw = vec![0; nc];
    let mut members = vec![Vec::with_capacity(2); nc];
    for u in 0..n {
        vw[cmap[u]] += g.vw[u];
        members[cmap[u]].push(u);
    }
    // Accumulate coarse adjacency with a dense marker array.
    let mut slot = vec![usize::MAX; nc];
    let mut xadj = Vec::with_capacity(nc + 1);
    let mut adj = Vec::new();
    let mut ew = Vec::new();
    xadj.push(0);
    for c in 0..nc {
        let start = adj.len();
        for &u in &members[c] {
            for (v, e) in g.neighbors(u) {
                let cv = cmap[v];
                if cv == c {
                    continue;
                }
                if slot[cv] == usize::MAX || slot[cv] < start {
                    slot[cv] = adj.len();
                    adj.push(cv);
                    ew.push(e);
                } else {
                    ew[slot[cv]] += e;
                }
            }
        }
        xadj.push(adj.len());
    }
    Level {
        cmap,
        coarse: WeightedGraph { xadj, adj, ew, vw },
    }
}

/// Farthest node (by BFS over `allowed` nodes) from `start`; lowest index on ties.
fn pseudo_peripheral(g: &WeightedGraph, start: usize, allowed: &[bool]) -> usize {
    let mut dist = vec![usize::MAX; g.len()];
    let mut queue = VecDeque::from([start]);
    dist[start] = 0;
    let mut far = start;
    while let Some(u) = queue.pop_front() {
        if dist[u] > dist[far] || (dist[u] == dist[far] && u < far) {
            far = u;
        }
        for (w, _) in g.neighbors(u) {
            if allowed[w] && dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    far
}

/// Sequential greedy region growing. Returns a complete assignment; the last
/// cluster absorbs whatever is left.
fn grow_regions(g: &WeightedGraph, q: usize, bound: u64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.len();
    let mut part = vec![usize::MAX; n];
    let mut unassigned: Vec<bool> = vec![true; n];
    let mut remaining_nodes = n;
    let mut remaining_weight: u64 = g.vw.iter().sum();
    let mut gain = vec![0i64; n];
    let mut in_frontier = vec![false; n];

    for k in 0..q - 1 {
        if remaining_nodes == 0 {
            break;
        }
        let target = remaining_weight as f64 / (q - k) as f64;
        let mut weight = 0u64;
        let mut frontier: Vec<usize> = Vec::new();

        let pick_seed = |allowed: &[bool], rng: &mut ChaCha8Rng| {
            let pool: Vec<usize> = (0..n).filter(|&v| allowed[v]).collect();
            let start = pool[rng.gen_range(0..pool.len())];
            pseudo_peripheral(g, start, allowed)
        };

        let mut next = Some(pick_seed(&unassigned, rng));
        while let Some(v) = next.take() {
            part[v] = k;
            unassigned[v] = false;
            remaining_nodes -= 1;
            remaining_weight -= g.vw[v];
            weight += g.vw[v];
            if in_frontier[v] {
                in_frontier[v] = false;
                frontier.retain(|&x| x != v);
            }
            for (w, e) in g.neighbors(v) {
                if !unassigned[w] {
                    continue;
                }
                if in_frontier[w] {
                    gain[w] += 2 * e as i64;
                } else {
                    in_frontier[w] = true;
                    frontier.push(w);
                    gain[w] = g
                        .neighbors(w)
                        .map(|(x, ex)| {
                            if part[x] == k {
                                ex as i64
                            } else if unassigned[x] {
                                -(ex as i64)
                            } else {
                                0
                            }
                        })
                        .sum();
                }
            }
            if weight as f64 >= target || remaining_nodes == 0 {
                break;
            }
            // Best admissible frontier node: max gain, then lowest index.
            loop {
                let best = frontier
                    .iter()
                    .copied()
                    .max_by(|&a, &b| gain[a].cmp(&gain[b]).then(b.cmp(&a)));
                match best {
                    Some(b) if weight + g.vw[b] > bound => {
                        in_frontier[b] = false;
                        frontier.retain(|&x| x != b);
                    }
                    Some(b) => {
                        next = Some(b);
                        break;
                    }
                    None => {
                        // Region exhausted below target: restart elsewhere.
                        let fits: Vec<bool> = (0..n).map(|x| unassigned[x] && weight + g.vw[x] <= bound).collect();
                        if fits.contains(&true) {
                            next = Some(pick_seed(&fits, rng));
                        }
                        break;
                    }
                }
            }
        }
        for x in frontier.drain(..) {
            in_frontier[x] = false;
        }
    }
    for v in 0..n {
        if part[v] == usize::MAX {
            part[v] = q - 1;
        }
    }
    part
}

/// Moves nodes until every cluster is non-empty and within `bound` where the
/// node weights allow it. Prefers moves with the best cut gain, then lowest
/// node index, then lowest target cluster.
fn repair_balance(g: &WeightedGraph, part: &mut [usize], q: usize, bound: u64) {
    let n = g.len();
    let mut weight = vec![0u64; q];
    let mut count = vec![0usize; q];
    for v in 0..n {
        weight[part[v]] += g.vw[v];
        count[part[v]] += 1;
    }
    let mut conn = vec![0i64; q];
    let mut touched: Vec<usize> = Vec::new();

    // Fill empty clusters from the heaviest multi-node cluster.
    for empty in 0..q {
        if count[empty] > 0 {
            continue;
        }
        let Some(donor) = (0..q).filter(|&c| count[c] > 1).max_by_key(|&c| (weight[c], std::cmp::Reverse(c))) else {
            break;
        };
        // Node of the donor with the least internal connection.
        let v = (0..n)
            .filter(|&v| part[v] == donor)
            .min_by_key(|&v| {
                let internal: u64 = g.neighbors(v).filter(|&(w, _)| part[w] == donor).map(|(_, e)| e).sum();
                (internal, v)
            })
            .expect("donor is non-empty");
        part[v] = empty;
        weight[donor] -= g.vw[v];
        weight[empty] += g.vw[v];
        count[donor] -= 1;
        count[empty] += 1;
    }

    while let Some(over) = (0..q).find(|&c| weight[c] > bound && count[c] > 1) {
        let lightest = (0..q).min_by_key(|&c| (weight[c], c)).expect("q >= 1");
        let mut best: Option<(i64, usize, usize)> = None; // (gain, v, target)
        for v in (0..n).filter(|&v| part[v] == over) {
            touched.clear();
            for (w, e) in g.neighbors(v) {
                let c = part[w];
                if conn[c] == 0 {
                    touched.push(c);
                }
                conn[c] += e as i64;
            }
            if conn[lightest] == 0 {
                touched.push(lightest);
            }
            for &c in &touched {
                if c == over || weight[c] + g.vw[v] > bound {
                    continue;
                }
                let gain = conn[c] - conn[over];
                let better = match best {
                    None => true,
                    Some((bg, bv, bc)) => gain > bg || (gain == bg && (v, c) < (bv, bc)),
                };
                if better {
                    best = Some((gain, v, c));
                }
            }
            for &c in &touched {
                conn[c] = 0;
            }
            conn[over] = 0;
        }
        let Some((_, v, target)) = best else {
            // Node weights too coarse to balance at this level.
            break;
        };
        part[v] = target;
        weight[over] -= g.vw[v];
        weight[target] += g.vw[v];
        count[over] -= 1;
        count[target] += 1;
    }
}

/// One greedy pass over nodes in index order. A node moves to the adjacent
/// cluster with the largest strictly positive cut gain (lowest cluster id on
/// ties) when the target stays within `bound` and its own cluster stays non-empty.
fn refine_pass(g: &WeightedGraph, part: &mut [usize], q: usize, bound: u64) {
    let n = g.len();
    let mut weight = vec![0u64; q];
    let mut count = vec![0usize; q];
    for v in 0..n {
        weight[part[v]] += g.vw[v];
        count[part[v]] += 1;
    }
    let mut conn = vec![0u64; q];
    let mut touched = Vec::new();
    for v in 0..n {
        let own = part[v];
        touched.clear();
        for (w, e) in g.neighbors(v) {
            let c = part[w];
            if conn[c] == 0 {
                touched.push(c);
            }
            conn[c] += e;
        }
        let internal = conn[own];
        let mut best: Option<(u64, usize)> = None;
        for &c in &touched {
            if c == own || conn[c] <= internal || weight[c] + g.vw[v] > bound {
                continue;
            }
            let better = match best {
                None => true,
                Some((bc, bid)) => conn[c] > bc || (conn[c] == bc && c < bid),
            };
            if better {
                best = Some((conn[c], c));
            }
        }
        for &c in &touched {
            conn[c] = 0;
        }
        if let Some((_, target)) = best {
            if count[own] > 1 {
                part[v] = target;
                weight[own] -= g.vw[v];
                weight[target] += g.vw[v];
                count[own] -= 1;
                count[target] += 1;
            }
        }
    }
}

fn size_bound(n: usize, q: usize, epsilon: f64) -> u64 {
    let ideal = n.div_ceil(q) as f64;
    ((1.0 + epsilon) * ideal + 1e-9).floor() as u64
}

/// Balanced `q`-way partition minimizing the edge cut. Deterministic in `seed`.
pub fn partition_balanced_cut(g: &Graph, q: usize, epsilon: f64, seed: u64) -> Result<Partition> {
    let n = g.num_nodes();
    if q == 0 || q > n {
        return Err(Error::domain(format!("cluster count {q} outside [1, {n}]")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!("balance tolerance {epsilon} must be non-negative")));
    }
    if q == 1 {
        return Partition::new(g, vec![0; n], 1);
    }
    if q == n {
        return Partition::new(g, (0..n).collect(), n);
    }

    let bound = size_bound(n, q, epsilon);
    let mut rng = seeded_rng(seed);
    let base = WeightedGraph::from_graph(g);

    let coarsest_target = (2 * q).max(MIN_COARSEST);
    let max_vw = ((3 * n).div_ceil(2 * coarsest_target) as u64).clamp(1, bound.max(1));
    let mut levels: Vec<Level> = Vec::new();
    loop {
        let current = levels.last().map_or(&base, |l| &l.coarse);
        if current.len() <= coarsest_target {
            break;
        }
        let level = heavy_edge_matching(current, max_vw, &mut rng);
        // Stop when matching stalls (e.g. stars, weight caps).
        if level.coarse.len() * 20 > current.len() * 19 {
            break;
        }
        levels.push(level);
    }

    let coarsest = levels.last().map_or(&base, |l| &l.coarse);
    let mut best: Option<(u64, Vec<usize>)> = None;
    for _ in 0..INITIAL_TRIES {
        let mut part = grow_regions(coarsest, q, bound, &mut rng);
        repair_balance(coarsest, &mut part, q, bound);
        refine_pass(coarsest, &mut part, q, bound);
        let cut = coarsest.cut(&part);
        if best.as_ref().is_none_or(|(c, _)| cut < *c) {
            best = Some((cut, part));
        }
    }
    let mut part = best.expect("at least one try").1;

    for i in (0..levels.len()).rev() {
        let fine = if i == 0 { &base } else { &levels[i - 1].coarse };
        let cmap = &levels[i].cmap;
        part = (0..fine.len()).map(|v| part[cmap[v]]).collect();
        repair_balance(fine, &mut part, q, bound);
        refine_pass(fine, &mut part, q, bound);
    }
    // Unit weights at the finest level always admit a feasible repair.
    repair_balance(&base, &mut part, q, bound);

    // Number clusters by their lowest node.
    let mut label = vec![usize::MAX; q];
    let mut next = 0;
    for c in part.iter_mut() {
        if label[*c] == usize::MAX {
            label[*c] = next;
            next += 1;
        }
        *c = label[*c];
    }
    Partition::new(g, part, q)
}
