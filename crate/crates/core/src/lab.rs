//! Erdős–Rényi graphs and empirical checks of the size, degree and
//! cross-edge claims about coarsened hierarchies.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coarsening::{cluster_count, random_assignment, quotient, Partition, ReductionTrace};
use crate::error::{Error, Result};
use crate::generators::seeded_rng;
use crate::graph::Graph;
use crate::hsg::{build_hsg, node_bound, CoarseningSchedule};
use crate::io::{graph_to_value, to_canonical_json};
use crate::metrics::diameter;
use crate::parallel::with_workers;

/// Edge density of a `G(n, p)` graph: `p` directly or `p = n^-beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    P(f64),
    Beta(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErdosRenyiSpec {
    pub n: usize,
    pub density: Density,
    pub seed: u64,
}

impl ErdosRenyiSpec {
    pub fn p(&self) -> Result<f64> {
        let p = match self.density {
            Density::P(p) => p,
            Density::Beta(beta) if beta >= 0.0 => {
                if self.n == 0 {
                    1.0
                } else {
                    (self.n as f64).powf(-beta)
                }
            }
            Density::Beta(beta) => return Err(Error::domain(format!("beta {beta} is negative"))),
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("edge probability {p} outside [0, 1]")));
        }
        Ok(p)
    }

    pub fn generate(&self) -> Result<Graph> {
        Ok(gen_erdos_renyi(self.n, self.p()?, self.seed))
    }
}

/// Pairs `(v, w)`, `w < v`, each present with probability `p`, drawn by
/// geometric skipping so the cost is linear in the edge count.
fn er_edges(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    assert!((0.0..=1.0).contains(&p), "edge probability {p} outside [0, 1]");
    let mut edges = Vec::new();
    if n < 2 || p == 0.0 {
        return edges;
    }
    if p == 1.0 {
        for v in 1..n {
            edges.extend((0..v).map(|w| (w, v)));
        }
        return edges;
    }
    let log_q = (1.0 - p).ln();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let u: f64 = rng.gen();
        w += 1 + ((1.0 - u).ln() / log_q).floor() as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((w as usize, v));
        }
    }
    edges
}

/// `G(n, p)`, deterministic in `seed`.
///
/// # Panics
/// If `p` is outside `[0, 1]`.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    er_graph(n, p, &mut seeded_rng(seed))
}

fn er_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
    Graph::new(n, er_edges(n, p, rng)).expect("generated edges are valid")
}

/// `G(n, p)` redrawn from the same stream until connected.
pub fn gen_connected_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    let mut rng = seeded_rng(seed);
    for _ in 0..10_000 {
        let g = er_graph(n, p, &mut rng);
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::domain(format!("G({n}, {p}) stayed disconnected after 10000 draws")))
}

fn trial_seed(seed: u64, trial: usize) -> u64 {
    seed ^ trial as u64
}

/// Outcome of the size checks on one augmented graph.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeBoundCheck {
    pub n: usize,
    pub m: usize,
    pub r: f64,
    pub nodes: usize,
    pub node_bound: f64,
    pub layers: usize,
    pub layer_bound: usize,
    pub diameter: usize,
    pub max_layer_edges: usize,
    pub violations: Vec<String>,
}

/// `ceil(ln n / -ln r)`, never below 1.
pub fn layer_bound(n: usize, r: f64) -> usize {
    let raw = (n as f64).ln() / -r.ln();
    ((raw - 1e-9).ceil() as usize).max(1)
}

/// Builds the uniform-ratio hierarchy of a connected `g` down to one node and
/// checks node count, layer count, diameter and per-layer edge counts.
pub fn check_size_bounds(g: &Graph, r: f64, seed: u64) -> Result<SizeBoundCheck> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("ratio {r} outside (0, 1)")));
    }
    if !g.is_connected() {
        return Err(Error::domain("size bounds are stated for connected graphs"));
    }
    let (n, m) = (g.num_nodes(), g.num_edges());
    let schedule = CoarseningSchedule::uniform_to_apex(r, n, false, seed)?;
    let h = build_hsg(g, &schedule)?;
    let nodes = h.graph().num_nodes();
    let layers = h.num_layers();
    let diam = diameter(h.graph()).ok_or_else(|| Error::invalid("augmented graph is disconnected"))?;
    let layer_graphs = h.layer_graphs()?;
    let max_layer_edges = layer_graphs[1..].iter().map(Graph::num_edges).max().unwrap_or(0);

    let bound = node_bound(n, r);
    let z_bound = layer_bound(n, r);
    let mut violations = Vec::new();
    if nodes as f64 > bound {
        violations.push(format!("{nodes} nodes exceed n/(1-r) = {bound}"));
    }
    if layers > z_bound {
        violations.push(format!("{layers} layers exceed {z_bound}"));
    }
    if diam > 2 * layers {
        violations.push(format!("diameter {diam} exceeds 2Z = {}", 2 * layers));
    }
    for (i, lg) in layer_graphs.iter().enumerate().skip(1) {
        if lg.num_edges() > m {
            violations.push(format!("layer {i} has {} edges, more than m = {m}", lg.num_edges()));
        }
    }
    Ok(SizeBoundCheck {
        n,
        m,
        r,
        nodes,
        node_bound: bound,
        layers,
        layer_bound: z_bound,
        diameter: diam,
        max_layer_edges,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub violations: Vec<String>,
    /// Canonical JSON of the input graph.
    pub graph: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizeBoundsReport {
    pub r: f64,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub checked: usize,
    /// Largest `|V(G^H)| / (n / (1 - r))` seen.
    pub max_node_fill: f64,
    pub max_layers: usize,
    pub max_diameter: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl SizeBoundsReport {
    pub fn pass(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Size checks over `trials` connected `G(n, 2 ln n / n)` graphs per `n`.
pub fn verify_size_bounds(
    n_values: &[usize],
    r: f64,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<SizeBoundsReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("ratio {r} outside (0, 1)")));
    }
    if let Some(&n) = n_values.iter().find(|&&n| n < 2) {
        return Err(Error::domain(format!("n = {n} is too small for connected random graphs")));
    }
    let jobs: Vec<(usize, usize)> = n_values
        .iter()
        .flat_map(|&n| (0..trials).map(move |t| (n, t)))
        .collect();
    let results: Vec<Result<(SizeBoundCheck, Option<Counterexample>)>> = with_workers(workers, || {
        jobs.par_iter()
            .map(|&(n, trial)| {
                let s = trial_seed(seed, trial);
                let p = (2.0 * (n as f64).ln() / n as f64).min(1.0);
                let g = gen_connected_erdos_renyi(n, p, s)?;
                let check = check_size_bounds(&g, r, s)?;
                let cx = if check.violations.is_empty() {
                    None
                } else {
                    Some(Counterexample {
                        n,
                        trial,
                        seed: s,
                        violations: check.violations.clone(),
                        graph: to_canonical_json(&graph_to_value(&g).into())?,
                    })
                };
                Ok((check, cx))
            })
            .collect()
    });
    let mut report = SizeBoundsReport {
        r,
        n_values: n_values.to_vec(),
        trials,
        checked: 0,
        max_node_fill: 0.0,
        max_layers: 0,
        max_diameter: 0,
        counterexamples: Vec::new(),
    };
    for res in results {
        let (check, cx) = res?;
        report.checked += 1;
        report.max_node_fill = report.max_node_fill.max(check.nodes as f64 / check.node_bound);
        report.max_layers = report.max_layers.max(check.layers);
        report.max_diameter = report.max_diameter.max(check.diameter);
        report.counterexamples.extend(cx);
    }
    Ok(report)
}

/// Measured against predicted probability that two random clusters share an edge.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossEdgeReport {
    pub n: usize,
    pub p: f64,
    pub r: f64,
    pub trials: usize,
    /// `1 - (1 - p)^(1/r^2)`.
    pub formula: f64,
    /// Mean over sampled cluster pairs of `1 - (1 - p)^(s_i s_j)`.
    pub predicted: f64,
    pub measured: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub super_edges: usize,
    pub expected_super_edges: f64,
    pub super_edge_sd: f64,
}

impl CrossEdgeReport {
    pub fn pass(&self) -> bool {
        (self.measured - self.predicted).abs() <= self.tolerance
            && (self.super_edges as f64 - self.expected_super_edges).abs() <= 4.0 * self.super_edge_sd + 1e-9
    }
}

/// Random equal partitions of fresh `G(n, p)` graphs into `floor(r n)` clusters.
pub fn cross_edge_probability(n: usize, p: f64, r: f64, trials: usize, seed: u64) -> Result<CrossEdgeReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("edge probability {p} outside [0, 1]")));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::domain(format!("ratio {r} outside (0, 1]")));
    }
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    let q = cluster_count(r, n);
    if q < 2 {
        return Err(Error::domain("need at least two clusters"));
    }
    let (mut samples, mut super_edges) = (0usize, 0usize);
    let (mut expected, mut variance) = (0.0f64, 0.0f64);
    for trial in 0..trials {
        let mut rng = seeded_rng(trial_seed(seed, trial));
        let g = er_graph(n, p, &mut rng);
        let cluster_of = random_assignment(n, q, &mut rng);
        let partition = Partition::new(&g, cluster_of, q)?;
        let sizes = partition.sizes();
        for i in 0..q {
            for j in i + 1..q {
                let prob = 1.0 - (1.0 - p).powf((sizes[i] * sizes[j]) as f64);
                expected += prob;
                variance += prob * (1.0 - prob);
            }
        }
        samples += q * (q - 1) / 2;
        super_edges += quotient(&g, &partition)?.num_edges();
    }
    let predicted = expected / samples as f64;
    Ok(CrossEdgeReport {
        n,
        p,
        r,
        trials,
        formula: 1.0 - (1.0 - p).powf(1.0 / (r * r)),
        predicted,
        measured: super_edges as f64 / samples as f64,
        samples,
        tolerance: 4.0 * (predicted * (1.0 - predicted) / samples as f64).sqrt(),
        super_edges,
        expected_super_edges: expected,
        super_edge_sd: variance.sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Vanishing,
    Constant,
    Diverging,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Vanishing => "vanishing",
            Regime::Constant => "constant",
            Regime::Diverging => "diverging",
        })
    }
}

/// Regime predicted for `p = n^-beta` with `r = n / (m + n)`.
pub fn expected_regime(beta: f64) -> Regime {
    if beta < 0.5 {
        Regime::Vanishing
    } else if beta == 0.5 || beta >= 1.0 {
        Regime::Constant
    } else {
        Regime::Diverging
    }
}

pub const SLOPE_BAND: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimePoint {
    pub n: usize,
    /// Mean over trials of `E[d(1)] / E[d(0)]`.
    pub ratio: f64,
    pub std_error: f64,
    /// Trials with at least one edge.
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeResult {
    pub beta: f64,
    pub points: Vec<RegimePoint>,
    /// Least-squares slope of `ln ratio` on `ln n`.
    pub slope: f64,
    pub verdict: Regime,
}

/// Degree ratio of one random coarsening of `G(n, n^-beta)`; `None` when
/// the sample has no edges.
fn degree_ratio_trial(n: usize, p: f64, seed: u64) -> Option<f64> {
    let mut rng = seeded_rng(seed);
    let edges = er_edges(n, p, &mut rng);
    let m = edges.len();
    if m == 0 {
        return None;
    }
    let r = n as f64 / (m + n) as f64;
    let q = cluster_count(r, n);
    let cluster_of = random_assignment(n, q, &mut rng);
    let mut pairs: Vec<(usize, usize)> = edges
        .iter()
        .filter_map(|&(u, v)| {
            let (a, b) = (cluster_of[u], cluster_of[v]);
            (a != b).then(|| (a.min(b), a.max(b)))
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let coarse = 2.0 * pairs.len() as f64 / q as f64;
    let fine = 2.0 * m as f64 / n as f64;
    Some(coarse / fine)
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Sweeps `n`, measuring how the mean horizontal degree of one random
/// coarsening compares with the input mean degree.
pub fn degree_regime(beta: f64, n_values: &[usize], trials: usize, seed: u64, workers: usize) -> Result<RegimeResult> {
    if !(beta >= 0.0) {
        return Err(Error::domain(format!("beta {beta} is negative")));
    }
    if n_values.len() < 4 || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("need at least four increasing n values"));
    }
    if n_values[0] < 2 || trials == 0 {
        return Err(Error::domain("need n >= 2 and at least one trial"));
    }
    let mut points = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let p = (n as f64).powf(-beta);
        let ratios: Vec<f64> = with_workers(workers, || {
            (0..trials)
                .into_par_iter()
                .filter_map(|t| degree_ratio_trial(n, p, trial_seed(seed, t)))
                .collect()
        });
        if ratios.is_empty() {
            return Err(Error::domain(format!("every trial at n = {n} drew an empty graph")));
        }
        let k = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / k;
        let var = if ratios.len() > 1 {
            ratios.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        points.push(RegimePoint {
            n,
            ratio: mean,
            std_error: (var / k).sqrt(),
            trials: ratios.len(),
        });
    }
    let (slope, verdict) = if points.iter().all(|pt| pt.ratio > 0.0) {
        let xs: Vec<f64> = points.iter().map(|pt| (pt.n as f64).ln()).collect();
        let ys: Vec<f64> = points.iter().map(|pt| pt.ratio.ln()).collect();
        let s = slope(&xs, &ys);
        let verdict = if s < -SLOPE_BAND {
            Regime::Vanishing
        } else if s > SLOPE_BAND {
            Regime::Diverging
        } else {
            Regime::Constant
        };
        (s, verdict)
    } else {
        (f64::NEG_INFINITY, Regime::Vanishing)
    };
    Ok(RegimeResult {
        beta,
        points,
        slope,
        verdict,
    })
}

pub const DEFAULT_BAND: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerCondition {
    pub layer: usize,
    /// `r(i)`.
    pub node_ratio: f64,
    /// `r(i) * m / n`.
    pub scaled_node_ratio: f64,
    /// `C(i) / R(i)`; `None` once an earlier layer has no edges.
    pub edge_node_ratio: Option<f64>,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeConditions {
    pub band: f64,
    pub layers: Vec<LayerCondition>,
}

impl DegreeConditions {
    pub fn pass(&self) -> bool {
        self.layers.iter().all(|l| !l.flagged)
    }
}

/// Per-layer degree conditions of a hierarchy over `g`. Layers whose
/// `C(i)/R(i)` leaves `[1/band, band]` are flagged.
pub fn check_degree_conditions(trace: &ReductionTrace, g: &Graph, band: f64) -> Result<DegreeConditions> {
    if !(band >= 1.0) {
        return Err(Error::domain(format!("band {band} must be at least 1")));
    }
    if trace.node_counts.first() != Some(&g.num_nodes()) || trace.edge_counts.first() != Some(&g.num_edges()) {
        return Err(Error::invalid("trace does not start at the given graph"));
    }
    let scale = g.num_edges() as f64 / g.num_nodes() as f64;
    let layers = trace
        .node_ratio
        .iter()
        .zip(trace.edge_to_node_ratio())
        .enumerate()
        .map(|(i, (&r, cr))| LayerCondition {
            layer: i + 1,
            node_ratio: r,
            scaled_node_ratio: r * scale,
            edge_node_ratio: cr,
            flagged: cr.is_some_and(|x| x < 1.0 / band || x > band),
        })
        .collect();
    Ok(DegreeConditions { band, layers })
}

/// One random coarsening step of `G(n, p)` at ratio `r`, defaulting to
/// `n / (m + n)`, followed by the degree-condition check.
pub fn degree_condition_trial(spec: &ErdosRenyiSpec, r: Option<f64>, band: f64) -> Result<DegreeConditions> {
    let g = spec.generate()?;
    let (n, m) = (g.num_nodes(), g.num_edges());
    let r = r.unwrap_or(n as f64 / (m + n) as f64);
    let schedule = CoarseningSchedule::parse(&format!("r:{r}"), spec.seed)?;
    let h = build_hsg(&g, &schedule)?;
    if h.num_layers() == 0 {
        return Err(Error::domain(format!("ratio {r} does not shrink a graph of {n} nodes")));
    }
    check_degree_conditions(&h.reduction_trace()?, &g, band)
}
