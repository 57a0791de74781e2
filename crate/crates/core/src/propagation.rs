//! Untrained synchronous message passing and receptive-field measurements.

use std::str::FromStr;

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::generators::seeded_rng;
use crate::graph::Graph;
use crate::hsg::{build_hsg, CoarseningSchedule};
use crate::metrics::{bfs_distances, UNREACHED};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregator {
    Sum,
    Mean,
    Max,
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Aggregator::Sum),
            "mean" => Ok(Aggregator::Mean),
            "max" => Ok(Aggregator::Max),
            other => Err(Error::invalid(format!("unknown aggregator {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Update {
    /// `h' = m`
    Replace,
    /// `h' = h + m`
    Add,
    /// `h' = (h + m) / 2`
    HalveMix,
}

impl FromStr for Update {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replace" => Ok(Update::Replace),
            "add" => Ok(Update::Add),
            "halve-mix" => Ok(Update::HalveMix),
            other => Err(Error::invalid(format!("unknown update rule {other:?}"))),
        }
    }
}

/// Node states after `round` rounds, stored row-major with a fixed width.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationState {
    values: Vec<f64>,
    dim: usize,
    round: usize,
}

impl PropagationState {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("state rows have different widths"));
        }
        Ok(PropagationState {
            values: rows.into_iter().flatten().collect(),
            dim,
            round: 0,
        })
    }

    /// Width-one state with 1 at `source` and 0 elsewhere.
    pub fn indicator(n: usize, source: usize) -> Result<Self> {
        if source >= n {
            return Err(Error::IndexOutOfRange { index: source, num_nodes: n });
        }
        let mut values = vec![0.0; n];
        values[source] = 1.0;
        Ok(PropagationState { values, dim: 1, round: 0 })
    }

    pub fn constant(n: usize, dim: usize, c: f64) -> Self {
        PropagationState {
            values: vec![c; n * dim],
            dim,
            round: 0,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.values.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn h(&self, v: usize) -> &[f64] {
        &self.values[v * self.dim..(v + 1) * self.dim]
    }
}

/// One synchronous round: every node aggregates its neighbors' round-`t`
/// states and updates from its own round-`t` state. Isolated nodes keep
/// their state.
pub fn mp_round(g: &Graph, s: &PropagationState, agg: Aggregator, update: Update) -> Result<PropagationState> {
    let n = g.num_nodes();
    if s.values.len() != n * s.dim || (s.dim == 0 && n > 0) {
        return Err(Error::invalid(format!("state does not cover the {n} nodes of the graph")));
    }
    let d = s.dim;
    let mut next = vec![0.0; n * d];
    let mut msg = vec![0.0; d];
    for v in 0..n {
        let own = &s.values[v * d..(v + 1) * d];
        let out = &mut next[v * d..(v + 1) * d];
        let nbrs = g.adj(v);
        if nbrs.is_empty() {
            out.copy_from_slice(own);
            continue;
        }
        match agg {
            Aggregator::Sum | Aggregator::Mean => {
                msg.iter_mut().for_each(|x| *x = 0.0);
                for &u in nbrs {
                    for (m, x) in msg.iter_mut().zip(&s.values[u * d..(u + 1) * d]) {
                        *m += x;
                    }
                }
                if agg == Aggregator::Mean {
                    let k = nbrs.len() as f64;
                    msg.iter_mut().for_each(|x| *x /= k);
                }
            }
            Aggregator::Max => {
                msg.iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
                for &u in nbrs {
                    for (m, &x) in msg.iter_mut().zip(&s.values[u * d..(u + 1) * d]) {
                        *m = m.max(x);
                    }
                }
            }
        }
        for ((o, &h), &m) in out.iter_mut().zip(own).zip(&msg) {
            *o = match update {
                Update::Replace => m,
                Update::Add => h + m,
                Update::HalveMix => (h + m) / 2.0,
            };
        }
    }
    Ok(PropagationState {
        values: next,
        dim: d,
        round: s.round + 1,
    })
}

fn check_source(g: &Graph, source: usize) -> Result<()> {
    if source >= g.num_nodes() {
        return Err(Error::IndexOutOfRange {
            index: source,
            num_nodes: g.num_nodes(),
        });
    }
    Ok(())
}

fn ball_sizes(dist: &[usize], keep: impl Fn(usize) -> bool, max_rounds: usize) -> Vec<usize> {
    let mut hist = vec![0usize; max_rounds + 1];
    for (v, &d) in dist.iter().enumerate() {
        if d != UNREACHED && d <= max_rounds && keep(v) {
            hist[d] += 1;
        }
    }
    hist.iter()
        .scan(0, |acc, &h| {
            *acc += h;
            Some(*acc)
        })
        .collect()
}

/// Nodes within `t` hops of `source` for `t = 0..=max_rounds`.
pub fn receptive_field(g: &Graph, source: usize, max_rounds: usize) -> Result<Vec<usize>> {
    check_source(g, source)?;
    Ok(ball_sizes(&bfs_distances(g, source), |_| true, max_rounds))
}

/// Like [`receptive_field`], counting only layer-0 nodes.
pub fn original_receptive_field(g: &Graph, source: usize, max_rounds: usize) -> Result<Vec<usize>> {
    check_source(g, source)?;
    let layer = g.node_layer();
    Ok(ball_sizes(&bfs_distances(g, source), |v| layer[v] == 0, max_rounds))
}

/// Rounds until every layer-0 node is within reach of `source`; `None` if
/// some layer-0 node never is.
pub fn rounds_to_full_coverage(g: &Graph, source: usize) -> Result<Option<usize>> {
    check_source(g, source)?;
    let dist = bfs_distances(g, source);
    let layer = g.node_layer();
    let mut worst = 0;
    for (v, &d) in dist.iter().enumerate() {
        if layer[v] == 0 {
            if d == UNREACHED {
                return Ok(None);
            }
            worst = worst.max(d);
        }
    }
    Ok(Some(worst))
}

/// Simulated reach: layer-0 nodes whose state has been nonzero at some round
/// up to `t`, starting from an indicator at `source`. Entry `t` is round `t`.
pub fn simulate_informed(
    g: &Graph,
    source: usize,
    rounds: usize,
    agg: Aggregator,
    update: Update,
) -> Result<Vec<usize>> {
    let mut state = PropagationState::indicator(g.num_nodes(), source)?;
    let layer = g.node_layer();
    let mut informed = vec![false; g.num_nodes()];
    let mut counts = Vec::with_capacity(rounds + 1);
    let mut count = 0;
    for t in 0..=rounds {
        if t > 0 {
            state = mp_round(g, &state, agg, update)?;
        }
        for v in 0..g.num_nodes() {
            if !informed[v] && state.values[v] != 0.0 {
                informed[v] = true;
                if layer[v] == 0 {
                    count += 1;
                }
            }
        }
        counts.push(count);
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub sources: Vec<usize>,
    pub original_rounds: Vec<usize>,
    pub augmented_rounds: Vec<usize>,
}

impl CoverageReport {
    fn mean(v: &[usize]) -> f64 {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }

    pub fn original_mean(&self) -> f64 {
        Self::mean(&self.original_rounds)
    }

    pub fn original_max(&self) -> usize {
        self.original_rounds.iter().copied().max().unwrap_or(0)
    }

    pub fn augmented_mean(&self) -> f64 {
        Self::mean(&self.augmented_rounds)
    }

    pub fn augmented_max(&self) -> usize {
        self.augmented_rounds.iter().copied().max().unwrap_or(0)
    }
}

/// Rounds to full coverage from up to `sources` distinct random nodes, on
/// `g` and on its augmentation by `schedule`.
pub fn coverage_comparison(g: &Graph, schedule: &CoarseningSchedule, sources: usize, seed: u64) -> Result<CoverageReport> {
    let n = g.num_nodes();
    if n == 0 || !g.is_connected() {
        return Err(Error::domain("coverage comparison needs a connected, non-empty graph"));
    }
    if sources == 0 {
        return Err(Error::domain("need at least one source"));
    }
    let h = build_hsg(g, schedule)?;
    let mut picked = sample(&mut seeded_rng(seed), n, sources.min(n)).into_vec();
    picked.sort_unstable();
    let mut report = CoverageReport {
        sources: picked.clone(),
        original_rounds: Vec::with_capacity(picked.len()),
        augmented_rounds: Vec::with_capacity(picked.len()),
    };
    for s in picked {
        let before = rounds_to_full_coverage(g, s)?.expect("connected");
        let after = rounds_to_full_coverage(h.graph(), s)?
            .ok_or_else(|| Error::invalid("augmented graph lost coverage"))?;
        report.original_rounds.push(before);
        report.augmented_rounds.push(after);
    }
    Ok(report)
}
