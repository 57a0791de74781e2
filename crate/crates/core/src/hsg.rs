//! Hierarchical support graph augmentation.
//!
//! A schedule of coarsening steps turns the input graph `G` into layers
//! `H(1) .. H(Z)`. The augmented graph holds the original nodes first, then
//! each layer's nodes in a contiguous index range. Every non-top node gets one
//! vertical edge to its super-node `phi(v)`.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use log::warn;
use serde_json::{Map, Value};

use crate::coarsening::{
    cluster_count, partition_balanced_cut, partition_random, quotient, reduction_trace, Partition,
    ReductionTrace, DEFAULT_EPSILON,
};
use crate::error::{Error, Result};
use crate::graph::{EdgeKind, Graph, GraphParts};
use crate::io::{as_array, graph_from_value, graph_to_value};

/// One coarsening step.
#[derive(Clone, Debug, PartialEq)]
pub enum CoarseningStep {
    /// Random equal-size clusters, `q = max(1, floor(ratio * n))`.
    Random { ratio: f64, seed: u64 },
    /// Balanced edge-cut partition with the same `q`.
    BalancedCut { ratio: f64, seed: u64 },
    /// Contract the whole layer into one super-node (`q = 1`).
    Apex,
    /// Caller-supplied cluster assignment for the layer this step applies to.
    External { cluster_of: Vec<usize>, q: usize },
}

impl fmt::Display for CoarseningStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoarseningStep::Random { ratio, .. } => write!(f, "r:{ratio}"),
            CoarseningStep::BalancedCut { ratio, .. } => write!(f, "m:{ratio}"),
            CoarseningStep::Apex => f.write_str("vn"),
            CoarseningStep::External { q, .. } => write!(f, "x:{q}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoarseningSchedule {
    steps: Vec<CoarseningStep>,
    /// Balance tolerance for balanced-cut steps.
    pub epsilon: f64,
}

impl CoarseningSchedule {
    pub fn new(steps: Vec<CoarseningStep>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::domain("coarsening schedule is empty"));
        }
        for step in &steps {
            if let CoarseningStep::Random { ratio, .. } | CoarseningStep::BalancedCut { ratio, .. } = step {
                if !(*ratio > 0.0 && *ratio <= 1.0) {
                    return Err(Error::domain(format!("coarsening ratio {ratio} outside (0, 1]")));
                }
            }
        }
        Ok(CoarseningSchedule {
            steps,
            epsilon: DEFAULT_EPSILON,
        })
    }

    /// The single virtual-node step.
    pub fn virtual_node() -> Self {
        Self::new(vec![CoarseningStep::Apex]).expect("non-empty")
    }

    /// Parses `m:<ratio>`, `r:<ratio>` and `vn` tokens separated by commas
    /// (or `+`). Step `i` gets seed `seed + i`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let steps = text
            .split([',', '+'])
            .map(str::trim)
            .enumerate()
            .map(|(i, token)| {
                let step_seed = seed.wrapping_add(i as u64);
                let ratio = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|e| Error::invalid(format!("bad ratio in schedule step {token:?}: {e}")))
                };
                match token.split_once(':') {
                    _ if token == "vn" || token == "•" => Ok(CoarseningStep::Apex),
                    Some(("m", r)) => Ok(CoarseningStep::BalancedCut {
                        ratio: ratio(r)?,
                        seed: step_seed,
                    }),
                    Some(("r", r)) => Ok(CoarseningStep::Random {
                        ratio: ratio(r)?,
                        seed: step_seed,
                    }),
                    _ => Err(Error::invalid(format!(
                        "unknown schedule step {token:?}; expected m:<ratio>, r:<ratio> or vn"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(steps)
    }

    /// Repeats a ratio-`r` step until a graph of `n` nodes reaches one node.
    pub fn uniform_to_apex(r: f64, n: usize, balanced: bool, seed: u64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::domain(format!("uniform ratio {r} outside (0, 1)")));
        }
        let mut steps = Vec::new();
        let mut size = n;
        while size > 1 {
            let step_seed = seed.wrapping_add(steps.len() as u64);
            steps.push(if balanced {
                CoarseningStep::BalancedCut { ratio: r, seed: step_seed }
            } else {
                CoarseningStep::Random { ratio: r, seed: step_seed }
            });
            size = cluster_count(r, size);
        }
        if steps.is_empty() {
            steps.push(CoarseningStep::Apex);
        }
        Self::new(steps)
    }

    pub fn steps(&self) -> &[CoarseningStep] {
        &self.steps
    }

    /// Steps joined with `+`, safe inside a CSV field.
    pub fn label(&self) -> String {
        self.steps.iter().map(ToString::to_string).collect::<Vec<_>>().join("+")
    }
}

impl fmt::Display for CoarseningSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.steps.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImputeMode {
    /// Element-wise mean over children.
    Mean,
    /// Element-wise most frequent value; features must be integer-coded.
    Mode,
    /// Zero vector.
    Dummy,
}

impl FromStr for ImputeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(ImputeMode::Mean),
            "mode" => Ok(ImputeMode::Mode),
            "dummy" => Ok(ImputeMode::Dummy),
            other => Err(Error::invalid(format!("unknown imputation mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Features {
    /// Input features, not yet placed on the augmented graph.
    Raw {
        node: Option<Vec<Vec<f64>>>,
        edge: Option<Vec<Vec<f64>>>,
    },
    /// Features live on the augmented graph: payload followed by indicators.
    Imputed { node_dim: usize, edge_dim: usize },
}

/// The augmented graph `G^H` with its layer bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct HsgGraph {
    graph: Graph,
    layer_ranges: Vec<Range<usize>>,
    phi: Vec<Option<usize>>,
    features: Features,
}

fn partition_for(step: &CoarseningStep, g: &Graph, epsilon: f64) -> Result<Partition> {
    let n = g.num_nodes();
    match step {
        CoarseningStep::Random { ratio, seed } => partition_random(g, *ratio, *seed),
        CoarseningStep::BalancedCut { ratio, seed } => {
            partition_balanced_cut(g, cluster_count(*ratio, n), epsilon, *seed)
        }
        CoarseningStep::Apex => Partition::new(g, vec![0; n], 1),
        CoarseningStep::External { cluster_of, q } => Partition::new(g, cluster_of.clone(), *q),
    }
}

/// Builds `G^H` by repeated partition and quotient.
///
/// Stops early, with a warning, once a step would not shrink the current
/// layer; a layer of one node ends the recursion silently.
pub fn build_hsg(g: &Graph, schedule: &CoarseningSchedule) -> Result<HsgGraph> {
    if g.num_nodes() == 0 {
        return Err(Error::domain("cannot augment an empty graph"));
    }
    if schedule.steps.is_empty() {
        return Err(Error::domain("coarsening schedule is empty"));
    }
    let base = Graph::new(g.num_nodes(), g.edges().iter().copied())?;
    let mut layers = vec![base];
    let mut parents: Vec<Vec<usize>> = Vec::new();
    for (i, step) in schedule.steps.iter().enumerate() {
        let current = layers.last().expect("non-empty");
        let n = current.num_nodes();
        if n <= 1 {
            break;
        }
        let partition = partition_for(step, current, schedule.epsilon)?;
        if partition.q() >= n {
            warn!(
                "schedule step {} ({step}) would not shrink a layer of {n} nodes; skipping {} remaining step(s)",
                i + 1,
                schedule.steps.len() - i
            );
            break;
        }
        let next = quotient(current, &partition)?;
        parents.push(partition.cluster_of().to_vec());
        layers.push(next);
    }

    let mut offsets = Vec::with_capacity(layers.len());
    let mut total = 0;
    for layer in &layers {
        offsets.push(total);
        total += layer.num_nodes();
    }
    let layer_ranges: Vec<Range<usize>> = offsets
        .iter()
        .zip(&layers)
        .map(|(&o, l)| o..o + l.num_nodes())
        .collect();

    let mut edges = Vec::new();
    let mut edge_kind = Vec::new();
    let mut node_layer = Vec::with_capacity(total);
    let mut phi = vec![None; total];
    for (l, layer) in layers.iter().enumerate() {
        let off = offsets[l];
        node_layer.extend(std::iter::repeat_n(l as u32, layer.num_nodes()));
        let kind = if l == 0 { EdgeKind::Original } else { EdgeKind::Horizontal };
        for &(u, v) in layer.edges() {
            edges.push((off + u, off + v));
            edge_kind.push(kind);
        }
        if let Some(cluster_of) = parents.get(l) {
            let up = offsets[l + 1];
            for (v, &c) in cluster_of.iter().enumerate() {
                edges.push((off + v, up + c));
                edge_kind.push(EdgeKind::Vertical);
                phi[off + v] = Some(up + c);
            }
        }
    }
    let graph = Graph::from_parts(GraphParts {
        num_nodes: total,
        edges,
        node_layer,
        edge_kind,
        ..GraphParts::default()
    })?;
    Ok(HsgGraph {
        graph,
        layer_ranges,
        phi,
        features: Features::Raw {
            node: g.node_features().map(<[_]>::to_vec),
            edge: g.edge_features().map(<[_]>::to_vec),
        },
    })
}

fn is_integer_coded(rows: &[Vec<f64>]) -> bool {
    rows.iter().flatten().all(|x| x.is_finite() && x.fract() == 0.0)
}

fn aggregate(children: &[&[f64]], dim: usize, mode: ImputeMode) -> Vec<f64> {
    match mode {
        ImputeMode::Dummy => vec![0.0; dim],
        ImputeMode::Mean => {
            let mut out = vec![0.0; dim];
            for row in children {
                for (o, x) in out.iter_mut().zip(row.iter()) {
                    *o += x;
                }
            }
            let k = children.len().max(1) as f64;
            out.iter_mut().for_each(|o| *o /= k);
            out
        }
        ImputeMode::Mode => (0..dim)
            .map(|j| {
                let mut values: Vec<f64> = children.iter().map(|row| row[j]).collect();
                values.sort_by(f64::total_cmp);
                // most frequent, smallest value on ties
                let mut best = (0usize, 0.0);
                let mut i = 0;
                while i < values.len() {
                    let run = values[i..].iter().take_while(|&&x| x == values[i]).count();
                    if run > best.0 {
                        best = (run, values[i]);
                    }
                    i += run;
                }
                best.1
            })
            .collect(),
    }
}

impl HsgGraph {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Number of support layers `Z`.
    pub fn num_layers(&self) -> usize {
        self.layer_ranges.len() - 1
    }

    /// Index ranges of `G, H(1), .., H(Z)`.
    pub fn layer_ranges(&self) -> &[Range<usize>] {
        &self.layer_ranges
    }

    pub fn phi(&self) -> &[Option<usize>] {
        &self.phi
    }

    pub fn original_node_count(&self) -> usize {
        self.layer_ranges[0].len()
    }

    pub fn is_imputed(&self) -> bool {
        matches!(self.features, Features::Imputed { .. })
    }

    /// Nodes of the highest layer, used as a pooling mask.
    pub fn top_layer_nodes(&self) -> Vec<usize> {
        self.layer_ranges.last().expect("layer 0 always present").clone().collect()
    }

    /// Each layer as a standalone graph (layer 0 is the input topology).
    pub fn layer_graphs(&self) -> Result<Vec<Graph>> {
        self.layer_ranges
            .iter()
            .map(|range| {
                let keep: Vec<usize> = range.clone().collect();
                let sub = self.graph.induced_subgraph(&keep)?.graph;
                Graph::new(sub.num_nodes(), sub.edges().iter().copied())
            })
            .collect()
    }

    pub fn reduction_trace(&self) -> Result<ReductionTrace> {
        reduction_trace(&self.layer_graphs()?)
    }

    /// Attaches features to every node and edge of `G^H`.
    ///
    /// Super-node features aggregate their direct children; super-edge
    /// features aggregate the lower-layer edges crossing the two child
    /// clusters. Vertical edges always get zero payloads. A one-hot layer
    /// indicator (`Z + 1` wide) is appended to node rows and a one-hot edge
    /// kind indicator (3 wide) to edge rows.
    pub fn impute_features(&self, node_mode: ImputeMode, edge_mode: ImputeMode) -> Result<HsgGraph> {
        let Features::Raw { node, edge } = &self.features else {
            return Err(Error::domain("features are already imputed"));
        };
        let z = self.num_layers();
        let g = &self.graph;
        let n0 = self.original_node_count();

        if node_mode != ImputeMode::Dummy && node.is_none() {
            return Err(Error::domain("node imputation requested but the input has no node features"));
        }
        if edge_mode != ImputeMode::Dummy && edge.is_none() {
            return Err(Error::domain("edge imputation requested but the input has no edge features"));
        }
        if node_mode == ImputeMode::Mode && !is_integer_coded(node.as_deref().unwrap_or_default()) {
            return Err(Error::domain("mode imputation needs integer-coded node features"));
        }
        if edge_mode == ImputeMode::Mode && !is_integer_coded(edge.as_deref().unwrap_or_default()) {
            return Err(Error::domain("mode imputation needs integer-coded edge features"));
        }
        let node_dim = node.as_ref().and_then(|r| r.first()).map_or(0, Vec::len);
        let edge_dim = edge.as_ref().and_then(|r| r.first()).map_or(0, Vec::len);

        // Node payloads, bottom-up.
        let mut node_rows: Vec<Vec<f64>> = vec![Vec::new(); g.num_nodes()];
        for v in 0..n0 {
            node_rows[v] = node.as_ref().map_or_else(Vec::new, |rows| rows[v].clone());
        }
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); g.num_nodes()];
        for (v, p) in self.phi.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(v);
            }
        }
        for range in &self.layer_ranges[1..] {
            for s in range.clone() {
                let rows: Vec<&[f64]> = children[s].iter().map(|&c| node_rows[c].as_slice()).collect();
                node_rows[s] = aggregate(&rows, node_dim, node_mode);
            }
        }
        for (v, row) in node_rows.iter_mut().enumerate() {
            let layer = g.node_layer()[v] as usize;
            row.extend((0..=z).map(|l| if l == layer { 1.0 } else { 0.0 }));
        }

        // Edge payloads. Original edges keep the input rows, in the same
        // relative order as the input's sorted edge list.
        let m = g.num_edges();
        let mut edge_rows: Vec<Option<Vec<f64>>> = vec![None; m];
        let mut original = 0;
        for (i, kind) in g.edge_kind().iter().enumerate() {
            match kind {
                EdgeKind::Original => {
                    edge_rows[i] = Some(edge.as_ref().map_or_else(Vec::new, |rows| rows[original].clone()));
                    original += 1;
                }
                EdgeKind::Vertical => edge_rows[i] = Some(vec![0.0; edge_dim]),
                EdgeKind::Horizontal => {}
            }
        }
        let layer_of = |v: usize| g.node_layer()[v] as usize;
        for l in 1..=z {
            let mut below: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
            for (i, &(u, v)) in g.edges().iter().enumerate() {
                if g.edge_kind()[i] == EdgeKind::Vertical || layer_of(u) != l - 1 {
                    continue;
                }
                let (a, b) = (self.phi[u].expect("non-top"), self.phi[v].expect("non-top"));
                if a != b {
                    below.entry((a.min(b), a.max(b))).or_default().push(i);
                }
            }
            for (i, &(u, v)) in g.edges().iter().enumerate() {
                if g.edge_kind()[i] != EdgeKind::Horizontal || layer_of(u) != l {
                    continue;
                }
                let crossing = below.get(&(u, v)).map(Vec::as_slice).unwrap_or_default();
                let rows: Vec<&[f64]> = crossing
                    .iter()
                    .map(|&c| edge_rows[c].as_deref().expect("lower layer done"))
                    .collect();
                edge_rows[i] = Some(aggregate(&rows, edge_dim, edge_mode));
            }
        }
        let edge_rows: Vec<Vec<f64>> = edge_rows
            .into_iter()
            .zip(g.edge_kind())
            .map(|(row, kind)| {
                let mut row = row.expect("every edge assigned");
                row.extend(EdgeKind::ALL.iter().map(|k| if k == kind { 1.0 } else { 0.0 }));
                row
            })
            .collect();

        let graph = g.clone().with_node_features(node_rows)?.with_edge_features(edge_rows)?;
        Ok(HsgGraph {
            graph,
            layer_ranges: self.layer_ranges.clone(),
            phi: self.phi.clone(),
            features: Features::Imputed { node_dim, edge_dim },
        })
    }

    /// Recovers the input graph: layer-0 nodes, original edges, and the
    /// input features without indicators.
    pub fn strip_to_original(&self) -> Result<Graph> {
        let g = &self.graph;
        let n0 = self.original_node_count();
        let original: Vec<usize> = (0..g.num_edges())
            .filter(|&i| g.edge_kind()[i] == EdgeKind::Original)
            .collect();
        let (node_features, edge_features) = match &self.features {
            Features::Raw { node, edge } => (node.clone(), edge.clone()),
            Features::Imputed { node_dim, edge_dim } => {
                let node = (*node_dim > 0)
                    .then(|| g.node_features().map(|rows| rows[..n0].iter().map(|r| r[..*node_dim].to_vec()).collect()))
                    .flatten();
                let edge = (*edge_dim > 0)
                    .then(|| {
                        g.edge_features()
                            .map(|rows| original.iter().map(|&i| rows[i][..*edge_dim].to_vec()).collect())
                    })
                    .flatten();
                (node, edge)
            }
        };
        Graph::from_parts(GraphParts {
            num_nodes: n0,
            edges: original.iter().map(|&i| g.edges()[i]).collect(),
            node_features,
            edge_features,
            ..GraphParts::default()
        })
    }

    /// Canonical JSON object: the graph plus `phi` (-1 on the top layer) and
    /// `layers` as `[start, end)` pairs.
    pub fn to_value(&self) -> Result<Map<String, Value>> {
        if let Features::Raw { node, edge } = &self.features {
            if node.is_some() || edge.is_some() {
                return Err(Error::invalid("impute features before serializing an augmented graph"));
            }
        }
        let mut obj = graph_to_value(&self.graph);
        obj.insert(
            "phi".into(),
            Value::Array(
                self.phi
                    .iter()
                    .map(|p| p.map_or(Value::from(-1), Value::from))
                    .collect(),
            ),
        );
        obj.insert(
            "layers".into(),
            Value::Array(self.layer_ranges.iter().map(|r| Value::from(vec![r.start, r.end])).collect()),
        );
        Ok(obj)
    }

    /// Reads the object written by [`HsgGraph::to_value`] and checks the layer invariants.
    pub fn from_value(obj: &Map<String, Value>) -> Result<Self> {
        let graph = graph_from_value(obj)?;
        let phi = as_array(obj.get("phi").ok_or_else(|| Error::invalid("missing key \"phi\""))?, "phi")?
            .iter()
            .map(|p| match p.as_i64() {
                Some(-1) => Ok(None),
                Some(x) if x >= 0 => Ok(Some(x as usize)),
                _ => Err(Error::invalid(format!("bad phi entry {p}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let layer_ranges = as_array(
            obj.get("layers").ok_or_else(|| Error::invalid("missing key \"layers\""))?,
            "layers",
        )?
        .iter()
        .map(|r| match r.as_array().map(Vec::as_slice) {
            Some([a, b]) => match (a.as_u64(), b.as_u64()) {
                (Some(a), Some(b)) if a <= b => Ok(a as usize..b as usize),
                _ => Err(Error::invalid(format!("bad layer range {r}"))),
            },
            _ => Err(Error::invalid(format!("bad layer range {r}"))),
        })
        .collect::<Result<Vec<_>>>()?;
        let z = layer_ranges.len().saturating_sub(1);
        let features = match (graph.node_features(), graph.edge_features()) {
            (Some(nodes), edges) => Features::Imputed {
                node_dim: nodes[0].len().saturating_sub(z + 1),
                edge_dim: edges.and_then(|e| e.first()).map_or(0, |r| r.len().saturating_sub(3)),
            },
            (None, _) => Features::Raw { node: None, edge: None },
        };
        let h = HsgGraph {
            graph,
            layer_ranges,
            phi,
            features,
        };
        h.validate()?;
        Ok(h)
    }

    fn validate(&self) -> Result<()> {
        let g = &self.graph;
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.layer_ranges.is_empty() || self.layer_ranges[0].start != 0 {
            return bad("layers must start at node 0".into());
        }
        for w in self.layer_ranges.windows(2) {
            if w[0].end != w[1].start {
                return bad("layer ranges must be contiguous".into());
            }
        }
        if self.layer_ranges.last().map(|r| r.end) != Some(g.num_nodes()) || self.phi.len() != g.num_nodes() {
            return bad("layers and phi must cover every node".into());
        }
        let z = self.num_layers();
        for (l, range) in self.layer_ranges.iter().enumerate() {
            for v in range.clone() {
                if g.node_layer()[v] as usize != l {
                    return bad(format!("node {v} tagged layer {} but lies in layer {l}", g.node_layer()[v]));
                }
                match self.phi[v] {
                    None if l == z => {}
                    Some(p) if l < z && self.layer_ranges[l + 1].contains(&p) && g.has_edge(v, p) => {}
                    _ => return bad(format!("node {v} has an invalid parent")),
                }
            }
        }
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            let (lu, lv) = (g.node_layer()[u], g.node_layer()[v]);
            let ok = match g.edge_kind()[i] {
                EdgeKind::Original => lu == 0 && lv == 0,
                EdgeKind::Horizontal => lu == lv && lu > 0,
                EdgeKind::Vertical => self.phi[u] == Some(v) || self.phi[v] == Some(u),
            };
            if !ok {
                return bad(format!("edge {{{u}, {v}}} contradicts its kind"));
            }
        }
        Ok(())
    }
}

/// Node bound `n / (1 - r)` for uniform ratio `r < 1`.
pub fn node_bound(n: usize, r: f64) -> f64 {
    n as f64 / (1.0 - r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{self, seeded_rng};
    use crate::io::to_canonical_json;

    fn path4_hsg() -> HsgGraph {
        let schedule = CoarseningSchedule::parse("m:0.5,vn", 0).unwrap();
        build_hsg(&generators::path(4), &schedule).unwrap()
    }

    #[test]
    fn path4_example_counts() {
        let h = path4_hsg();
        let g = h.graph();
        assert_eq!(g.num_nodes(), 7);
        let count = |k| g.edge_kind().iter().filter(|&&x| x == k).count();
        assert_eq!(count(EdgeKind::Vertical), 6);
        assert_eq!(count(EdgeKind::Horizontal), 1);
        assert_eq!(count(EdgeKind::Original), 3);
        assert_eq!(g.num_edges(), 10);
        assert!((g.num_nodes() as f64) <= node_bound(4, 0.5));
        assert_eq!(h.phi()[..4], [Some(4), Some(4), Some(5), Some(5)]);
        assert_eq!(h.top_layer_nodes(), vec![6]);
        assert_eq!(h.num_layers(), 2);
    }

    #[test]
    fn virtual_node_is_single_apex() {
        let g = generators::grid(3, 4);
        let h = build_hsg(&g, &CoarseningSchedule::virtual_node()).unwrap();
        assert_eq!(h.graph().num_nodes(), 13);
        assert_eq!(h.graph().num_edges(), g.num_edges() + 12);
        assert_eq!(h.top_layer_nodes(), vec![12]);
        let stripped = h.strip_to_original().unwrap();
        assert_eq!(h.graph().num_edges() - stripped.num_edges(), 12);
        assert_eq!(h.graph().num_nodes() - stripped.num_nodes(), 1);
    }

    #[test]
    fn uniform_half_without_apex_keeps_half() {
        let g = generators::path(100);
        let schedule = CoarseningSchedule::parse("m:0.5", 0).unwrap();
        assert_eq!(build_hsg(&g, &schedule).unwrap().top_layer_nodes().len(), 50);
    }

    #[test]
    fn uniform_to_apex_respects_node_bound() {
        let g = generators::path(100);
        let schedule = CoarseningSchedule::uniform_to_apex(0.5, 100, true, 1).unwrap();
        let h = build_hsg(&g, &schedule).unwrap();
        assert_eq!(h.top_layer_nodes().len(), 1);
        assert!(h.graph().num_nodes() <= 200);
        assert!(h.num_layers() <= 7);
    }

    #[test]
    fn schedule_grammar() {
        let s = CoarseningSchedule::parse("m:0.25,vn", 3).unwrap();
        assert_eq!(
            s.steps(),
            &[CoarseningStep::BalancedCut { ratio: 0.25, seed: 3 }, CoarseningStep::Apex]
        );
        assert_eq!(s.to_string(), "m:0.25,vn");
        assert_eq!(s.label(), "m:0.25+vn");
        assert_eq!(CoarseningSchedule::parse("r:0.5+vn", 0).unwrap().steps().len(), 2);
        assert!(CoarseningSchedule::parse("q:0.5", 0).is_err());
        assert!(CoarseningSchedule::parse("m:1.5", 0).is_err());
        assert!(CoarseningSchedule::parse("m:abc", 0).is_err());
        assert!(matches!(CoarseningSchedule::new(vec![]), Err(Error::Domain(_))));
    }

    #[test]
    fn non_shrinking_step_stops_recursion() {
        let g = generators::path(6);
        let s = CoarseningSchedule::parse("r:1.0,vn", 0).unwrap();
        let h = build_hsg(&g, &s).unwrap();
        assert_eq!(h.num_layers(), 0);
        assert_eq!(h.top_layer_nodes().len(), 6);
        assert!(h.phi().iter().all(Option::is_none));
    }

    #[test]
    fn external_partition_step() {
        let g = generators::path(4);
        let s = CoarseningSchedule::new(vec![CoarseningStep::External {
            cluster_of: vec![0, 1, 1, 0],
            q: 2,
        }])
        .unwrap();
        let h = build_hsg(&g, &s).unwrap();
        assert_eq!(h.phi()[..4], [Some(4), Some(5), Some(5), Some(4)]);
    }

    #[test]
    fn mean_and_mode_imputation() {
        let g = generators::path(4)
            .with_node_features(vec![vec![1.0, 3.0], vec![3.0, 5.0], vec![2.0, 2.0], vec![7.0, 7.0]])
            .unwrap();
        let h = build_hsg(&g, &CoarseningSchedule::parse("m:0.5,vn", 0).unwrap()).unwrap();
        let imputed = h.impute_features(ImputeMode::Mean, ImputeMode::Dummy).unwrap();
        let rows = imputed.graph().node_features().unwrap();
        assert_eq!(rows[4], vec![2.0, 4.0, 0.0, 1.0, 0.0]);
        assert_eq!(rows[5], vec![4.5, 4.5, 0.0, 1.0, 0.0]);
        assert_eq!(rows[6], vec![3.25, 4.25, 0.0, 0.0, 1.0]);
        assert_eq!(rows[0], vec![1.0, 3.0, 1.0, 0.0, 0.0]);

        let codes = Graph::empty(3).with_node_features(vec![vec![2.0], vec![2.0], vec![7.0]]).unwrap();
        let h = build_hsg(&codes, &CoarseningSchedule::virtual_node()).unwrap();
        let imputed = h.impute_features(ImputeMode::Mode, ImputeMode::Dummy).unwrap();
        assert_eq!(imputed.graph().node_features().unwrap()[3], vec![2.0, 0.0, 1.0]);

        let real = Graph::empty(2).with_node_features(vec![vec![0.5], vec![1.0]]).unwrap();
        let h = build_hsg(&real, &CoarseningSchedule::virtual_node()).unwrap();
        assert!(matches!(h.impute_features(ImputeMode::Mode, ImputeMode::Dummy), Err(Error::Domain(_))));
        assert!(matches!(h.impute_features(ImputeMode::Mean, ImputeMode::Mean), Err(Error::Domain(_))));
    }

    #[test]
    fn super_edges_aggregate_crossing_edges() {
        // clusters {0,1} {2,3} {4,5}; edges 1-2 and 0-3 cross into {2,3}
        let g = Graph::new(6, [(0, 1), (1, 2), (0, 3), (2, 3), (3, 4), (4, 5)])
            .unwrap()
            .with_edge_features(vec![vec![1.0], vec![9.0], vec![2.0], vec![4.0], vec![6.0], vec![8.0]])
            .unwrap();
        // sorted edge order: (0,1)=1 (0,3)=2 (1,2)=9 (2,3)=4 (3,4)=6 (4,5)=8
        let s = CoarseningSchedule::new(vec![CoarseningStep::External {
            cluster_of: vec![0, 0, 1, 1, 2, 2],
            q: 3,
        }])
        .unwrap();
        let h = build_hsg(&g, &s).unwrap().impute_features(ImputeMode::Dummy, ImputeMode::Mean).unwrap();
        let hg = h.graph();
        let e01 = hg.edge_index(6, 7).unwrap();
        let e12 = hg.edge_index(7, 8).unwrap();
        assert_eq!(hg.edge_features().unwrap()[e01], vec![5.5, 0.0, 1.0, 0.0]);
        assert_eq!(hg.edge_features().unwrap()[e12], vec![6.0, 0.0, 1.0, 0.0]);
        let vertical = hg.edge_index(0, 6).unwrap();
        assert_eq!(hg.edge_features().unwrap()[vertical], vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(h.strip_to_original().unwrap(), g);
    }

    #[test]
    fn indicator_widths() {
        let g = generators::cycle(10).with_node_features(vec![vec![1.0; 4]; 10]).unwrap();
        let h = build_hsg(&g, &CoarseningSchedule::parse("m:0.5,vn", 0).unwrap()).unwrap();
        let z = h.num_layers();
        let imputed = h.impute_features(ImputeMode::Mean, ImputeMode::Dummy).unwrap();
        assert!(imputed.graph().node_features().unwrap().iter().all(|r| r.len() == 4 + z + 1));
        assert!(imputed.graph().edge_features().unwrap().iter().all(|r| r.len() == 3));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let h = path4_hsg().impute_features(ImputeMode::Dummy, ImputeMode::Dummy).unwrap();
        let obj = h.to_value().unwrap();
        let back = HsgGraph::from_value(&obj).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.strip_to_original().unwrap(), generators::path(4));

        let mut broken = obj.clone();
        broken.insert("phi".into(), Value::from(vec![-1; 7]));
        assert!(HsgGraph::from_value(&broken).is_err());

        let g = generators::path(4).with_node_features(vec![vec![1.0]; 4]).unwrap();
        let raw = build_hsg(&g, &CoarseningSchedule::virtual_node()).unwrap();
        assert!(raw.to_value().is_err());
    }

    #[test]
    fn dummy_round_trip_restores_features_bit_exactly() {
        let mut rng = seeded_rng(5);
        use rand::Rng;
        let g = generators::random_tree(30, &mut rng);
        let feats: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let g = g.with_node_features(feats).unwrap();
        let h = build_hsg(&g, &CoarseningSchedule::parse("m:0.25,vn", 1).unwrap()).unwrap();
        let imputed = h.impute_features(ImputeMode::Dummy, ImputeMode::Dummy).unwrap();
        let stripped = imputed.strip_to_original().unwrap();
        let bytes = |g: &Graph| to_canonical_json(&Value::Object(graph_to_value(g))).unwrap();
        assert_eq!(bytes(&stripped), bytes(&g));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_case() -> impl Strategy<Value = (Graph, CoarseningSchedule)> {
            (2usize..80, any::<u64>(), 0.1f64..0.9, any::<bool>(), any::<bool>()).prop_map(
                |(n, seed, r, balanced, apex)| {
                    let g = crate::lab::gen_erdos_renyi(n, (3.0 / n as f64).min(1.0), seed);
                    let step = if balanced {
                        CoarseningStep::BalancedCut { ratio: r, seed }
                    } else {
                        CoarseningStep::Random { ratio: r, seed }
                    };
                    let mut steps = vec![step.clone(), step];
                    if apex {
                        steps.push(CoarseningStep::Apex);
                    }
                    (g, CoarseningSchedule::new(steps).unwrap())
                },
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn structural_invariants((g, schedule) in arb_case()) {
                let h = build_hsg(&g, &schedule).unwrap();
                let hg = h.graph();
                let layer_total: usize = h.layer_ranges().iter().map(|r| r.len()).sum();
                prop_assert_eq!(hg.num_nodes(), layer_total);
                // exactly one vertical edge per non-top node, to phi(v)
                let mut up = vec![0usize; hg.num_nodes()];
                for (i, &(u, v)) in hg.edges().iter().enumerate() {
                    if hg.edge_kind()[i] == EdgeKind::Vertical {
                        let child = if h.phi()[u] == Some(v) { u } else { v };
                        up[child] += 1;
                    }
                }
                let top = h.layer_ranges().last().unwrap().clone();
                for v in 0..hg.num_nodes() {
                    prop_assert_eq!(up[v], usize::from(!top.contains(&v)));
                    prop_assert_eq!(h.phi()[v].is_none(), top.contains(&v));
                }
                for &(u, v) in g.edges() {
                    prop_assert!(hg.has_edge(u, v));
                }
                prop_assert_eq!(h.strip_to_original().unwrap(), g);
                prop_assert!(h.validate().is_ok());
            }
        }
    }
}
