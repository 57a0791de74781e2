use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde_json::{json, Map, Value};

use hsg_core::coarsening::{partition_balanced_cut, partition_random, DEFAULT_EPSILON};
use hsg_core::generators::{self, seeded_rng};
use hsg_core::hsg::{build_hsg, node_bound, CoarseningSchedule, CoarseningStep, HsgGraph, ImputeMode};
use hsg_core::io::{graph_to_value, parse_json_object, read_graph, to_canonical_json};
use hsg_core::lab::{
    cross_edge_probability, degree_condition_trial, degree_regime, expected_regime, gen_erdos_renyi,
    verify_size_bounds, Density, ErdosRenyiSpec, DEFAULT_BAND,
};
use hsg_core::metrics::{stats_report, MetricsReport, PairScope, STATS_CSV_HEADER};
use hsg_core::propagation::{simulate_informed, Aggregator, Update};
use hsg_core::{Error, Graph};

/// Hierarchical support graphs: generate, augment, measure and verify.
#[derive(Parser, Debug)]
#[command(name = "hsg", version)]
struct Cli {
    /// Random seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel metrics and trials (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic graph as canonical JSON.
    Generate {
        #[command(subcommand)]
        kind: GraphKind,
    },
    /// Augment a graph with support layers.
    Augment(AugmentArgs),
    /// Recover the original graph from an augmented one.
    Strip(StripArgs),
    /// Table of averaged graph statistics, one row per configuration.
    Stats(StatsArgs),
    /// Run an empirical check and report pass/fail as JSON.
    Verify(VerifyArgs),
    /// Per-round informed counts of untrained message passing.
    Propagate(PropagateArgs),
    /// Partition a graph into clusters.
    Partition(PartitionArgs),
}

#[derive(Args, Debug, Clone)]
struct OutArg {
    /// Output file (stdout when absent).
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum GraphKind {
    Path {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: OutArg,
    },
    Cycle {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: OutArg,
    },
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Uniform random labeled tree.
    Tree {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// G(n, p), with p given directly or as n^-beta.
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with = "beta", required_unless_present = "beta")]
        p: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ImputeArg {
    Mean,
    Mode,
    Dummy,
}

impl From<ImputeArg> for ImputeMode {
    fn from(a: ImputeArg) -> Self {
        match a {
            ImputeArg::Mean => ImputeMode::Mean,
            ImputeArg::Mode => ImputeMode::Mode,
            ImputeArg::Dummy => ImputeMode::Dummy,
        }
    }
}

#[derive(Args, Debug)]
struct AugmentArgs {
    input: PathBuf,
    /// Comma-separated steps: m:<ratio>, r:<ratio> or vn.
    #[arg(long)]
    schedule: String,
    /// Imputation for super-node features (used when the input has node features).
    #[arg(long, value_enum, default_value_t = ImputeArg::Mean)]
    node_impute: ImputeArg,
    /// Imputation for super-edge features (used when the input has edge features).
    #[arg(long, value_enum, default_value_t = ImputeArg::Mean)]
    edge_impute: ImputeArg,
    /// Balance tolerance of balanced-cut steps.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct StripArgs {
    input: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScopeArg {
    Original,
    All,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// `none` or a schedule; repeat for several rows.
    #[arg(long = "config", default_values_t = ["none".to_string()])]
    configs: Vec<String>,
    /// Node pairs averaged by pairwise columns.
    #[arg(long, value_enum, default_value_t = ScopeArg::Original)]
    scope: ScopeArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Check {
    /// Node, layer, diameter and edge bounds of uniform hierarchies.
    #[value(name = "4.1", alias = "size")]
    Size,
    /// Per-layer degree conditions of one random coarsening.
    #[value(name = "4.2", alias = "degree")]
    Degree,
    /// Degree-ratio regime over an n sweep.
    #[value(name = "4.3", alias = "regime")]
    Regime,
    /// Cross-edge probability between random clusters.
    #[value(name = "B.1", alias = "cross-edge")]
    CrossEdge,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    theorem: Check,
    /// Graph sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, conflicts_with = "p")]
    beta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Band for C(i)/R(i) in the degree check.
    #[arg(long, default_value_t = DEFAULT_BAND)]
    band: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AggArg {
    Sum,
    Mean,
    Max,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum UpdateArg {
    Replace,
    Add,
    HalveMix,
}

#[derive(Args, Debug)]
struct PropagateArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    source: usize,
    #[arg(long, default_value_t = 20)]
    rounds: usize,
    #[arg(long, value_enum, default_value_t = AggArg::Sum)]
    agg: AggArg,
    #[arg(long, value_enum, default_value_t = UpdateArg::Add)]
    update: UpdateArg,
    /// Augment the input with this schedule first.
    #[arg(long)]
    schedule: Option<String>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Balanced,
    Random,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    input: PathBuf,
    /// Number of clusters.
    #[arg(long, conflicts_with = "r", required_unless_present = "r")]
    q: Option<usize>,
    /// Coarsening ratio; q = max(1, floor(r n)).
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Balanced)]
    method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[command(flatten)]
    out: OutArg,
}

enum Failure {
    /// Bad input, flags or files.
    Usage(String),
    /// A check ran and did not hold.
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn meta(command: &str, seed: u64, config: Value) -> Value {
    json!({
        "tool": "hsg",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "config": config,
    })
}

fn emit(out: &OutArg, text: &str) -> Outcome {
    match &out.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_object(out: &OutArg, mut obj: Map<String, Value>, meta: Value) -> Outcome {
    obj.insert("meta".into(), meta);
    emit(out, &to_canonical_json(&Value::Object(obj))?)
}

/// CSV with the metadata as a leading `#` comment line.
fn emit_csv(out: &OutArg, body: &str, meta: Value) -> Outcome {
    let mut text = format!("# {}", to_canonical_json(&json!({ "meta": meta }))?);
    text.push_str(body);
    emit(out, &text)
}

fn load(path: &Path) -> Result<Graph, Failure> {
    read_graph(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Non-finite values become `null`.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn generate(kind: GraphKind, seed: u64) -> Outcome {
    let (g, name, config, out) = match kind {
        GraphKind::Path { n, out } => (generators::path(n), "path", json!({ "n": n }), out),
        GraphKind::Cycle { n, out } => (generators::cycle(n), "cycle", json!({ "n": n }), out),
        GraphKind::Grid { rows, cols, out } => {
            (generators::grid(rows, cols), "grid", json!({ "rows": rows, "cols": cols }), out)
        }
        GraphKind::Tree { n, out } => {
            if n == 0 {
                return Err(Failure::Usage("tree needs n >= 1".into()));
            }
            (generators::random_tree(n, &mut seeded_rng(seed)), "tree", json!({ "n": n }), out)
        }
        GraphKind::Er { n, p, beta, out } => {
            let density = match (p, beta) {
                (Some(p), _) => Density::P(p),
                (None, Some(b)) => Density::Beta(b),
                (None, None) => unreachable!("clap requires p or beta"),
            };
            let spec = ErdosRenyiSpec { n, density, seed };
            let p = spec.p()?;
            (gen_erdos_renyi(n, p, seed), "er", json!({ "n": n, "p": p, "beta": beta }), out)
        }
    };
    let mut config = config;
    config["kind"] = json!(name);
    emit_object(&out, graph_to_value(&g), meta("generate", seed, config))
}

fn augment(args: AugmentArgs, seed: u64) -> Outcome {
    let g = load(&args.input)?;
    let mut schedule = CoarseningSchedule::parse(&args.schedule, seed)?;
    schedule.epsilon = args.epsilon;
    let h = build_hsg(&g, &schedule)?;
    let node_mode = if g.node_features().is_some() { args.node_impute.into() } else { ImputeMode::Dummy };
    let edge_mode = if g.edge_features().is_some() { args.edge_impute.into() } else { ImputeMode::Dummy };
    let h = if g.node_features().is_some() || g.edge_features().is_some() {
        h.impute_features(node_mode, edge_mode)?
    } else {
        h
    };
    let n = g.num_nodes();
    let r_max = if h.num_layers() > 0 {
        h.reduction_trace()?.node_ratio.iter().copied().fold(0.0, f64::max)
    } else {
        0.0
    };
    let summary = format!(
        "layers={} nodes={} edges={} bound={:.2}",
        h.num_layers(),
        h.graph().num_nodes(),
        h.graph().num_edges(),
        node_bound(n, r_max)
    );
    if args.out.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    let config = json!({
        "input": path_str(&args.input),
        "schedule": schedule.to_string(),
        "epsilon": args.epsilon,
        "node_impute": format!("{:?}", node_mode).to_lowercase(),
        "edge_impute": format!("{:?}", edge_mode).to_lowercase(),
    });
    emit_object(&args.out, h.to_value()?, meta("augment", seed, config))
}

fn strip(args: StripArgs, seed: u64) -> Outcome {
    let text = fs::read_to_string(&args.input).map_err(|e| Failure::Usage(format!("{}: {e}", args.input.display())))?;
    let obj = parse_json_object(&text).map_err(|e| Failure::Usage(format!("{}: {e}", args.input.display())))?;
    let g = HsgGraph::from_value(&obj)?.strip_to_original()?;
    let config = json!({ "input": path_str(&args.input) });
    emit_object(&args.out, graph_to_value(&g), meta("strip", seed, config))
}

fn config_names(schedule: Option<&CoarseningSchedule>) -> (String, String) {
    match schedule {
        None => ("none".into(), "-".into()),
        Some(s) if s.steps() == [CoarseningStep::Apex] => ("vn".into(), s.label()),
        Some(s) => ("hsg".into(), s.label()),
    }
}

fn stats(args: StatsArgs, seed: u64, workers: usize) -> Outcome {
    let graphs = args.inputs.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    let schedules = args
        .configs
        .iter()
        .map(|c| if c == "none" { Ok(None) } else { CoarseningSchedule::parse(c, seed).map(Some) })
        .collect::<Result<Vec<_>, _>>()?;
    let scope = match args.scope {
        ScopeArg::Original => PairScope::OriginalPairs,
        ScopeArg::All => PairScope::AllPairs,
    };
    let connected: Vec<(usize, &Graph)> = graphs
        .iter()
        .enumerate()
        .filter(|(i, g)| {
            let ok = g.num_nodes() >= 2 && g.is_connected();
            if !ok {
                warn!("skipping {}: statistics need a connected graph with at least two nodes", args.inputs[*i].display());
            }
            ok
        })
        .collect();
    if connected.is_empty() {
        return Err(Failure::Usage("every input graph was skipped".into()));
    }
    let mut body = format!("{STATS_CSV_HEADER}\n");
    for schedule in &schedules {
        let mut reports = Vec::with_capacity(connected.len());
        for &(_, g) in &connected {
            let report = match schedule {
                None => stats_report(g, scope, workers)?,
                Some(s) => stats_report(build_hsg(g, s)?.graph(), scope, workers)?,
            };
            reports.push(report);
        }
        let avg = MetricsReport::average(&reports).expect("non-empty");
        let (aug, coarse) = config_names(schedule.as_ref());
        let _ = write!(body, "{aug},{coarse}");
        for x in avg.columns() {
            let _ = write!(body, ",{x:.4}");
        }
        body.push('\n');
    }
    let config = json!({
        "inputs": args.inputs.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
        "used": connected.len(),
        "configs": args.configs,
        "scope": format!("{:?}", args.scope).to_lowercase(),
    });
    emit_csv(&args.out, &body, meta("stats", seed, config))
}

fn verify(args: VerifyArgs, seed: u64, workers: usize) -> Outcome {
    let n_or = |default: &[usize]| if args.n.is_empty() { default.to_vec() } else { args.n.clone() };
    let (name, parameters, pass, details) = match args.theorem {
        Check::Size => {
            let (n, r, trials) = (n_or(&[50, 100, 200, 500]), args.r.unwrap_or(0.5), args.trials.unwrap_or(100));
            let rep = verify_size_bounds(&n, r, trials, seed, workers)?;
            let counterexamples = rep
                .counterexamples
                .iter()
                .map(|c| {
                    Ok(json!({
                        "n": c.n,
                        "trial": c.trial,
                        "seed": c.seed,
                        "violations": c.violations,
                        "graph": Value::Object(parse_json_object(&c.graph)?),
                    }))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let details = json!({
                "checked": rep.checked,
                "max_node_fill": num(rep.max_node_fill),
                "max_layers": rep.max_layers,
                "max_diameter": rep.max_diameter,
                "counterexamples": counterexamples,
            });
            ("4.1", json!({ "n": n, "r": r, "trials": trials }), rep.pass(), details)
        }
        Check::Degree => {
            let (n, trials) = (n_or(&[1000]), args.trials.unwrap_or(10));
            let density = match (args.p, args.beta) {
                (Some(p), _) => Density::P(p),
                (None, b) => Density::Beta(b.unwrap_or(1.0)),
            };
            let mut pass = true;
            let mut runs = Vec::new();
            for &size in &n {
                for t in 0..trials {
                    let spec = ErdosRenyiSpec { n: size, density, seed: seed ^ t as u64 };
                    let rep = degree_condition_trial(&spec, args.r, args.band)?;
                    pass &= rep.pass();
                    let layers: Vec<Value> = rep
                        .layers
                        .iter()
                        .map(|l| {
                            json!({
                                "layer": l.layer,
                                "node_ratio": num(l.node_ratio),
                                "scaled_node_ratio": num(l.scaled_node_ratio),
                                "edge_node_ratio": l.edge_node_ratio.map(num),
                                "flagged": l.flagged,
                            })
                        })
                        .collect();
                    runs.push(json!({ "n": size, "trial": t, "layers": layers }));
                }
            }
            let density_json = match density {
                Density::P(p) => json!({ "p": p }),
                Density::Beta(b) => json!({ "beta": b }),
            };
            let params = json!({ "n": n, "density": density_json, "r": args.r, "trials": trials, "band": args.band });
            ("4.2", params, pass, json!({ "runs": runs }))
        }
        Check::Regime => {
            let beta = args.beta.ok_or_else(|| Failure::Usage("the regime check needs --beta".into()))?;
            let (n, trials) = (n_or(&[512, 1024, 2048, 4096]), args.trials.unwrap_or(20));
            let res = degree_regime(beta, &n, trials, seed, workers)?;
            let want = expected_regime(beta);
            let points: Vec<Value> = res
                .points
                .iter()
                .map(|p| json!({ "n": p.n, "ratio": num(p.ratio), "std_error": num(p.std_error), "trials": p.trials }))
                .collect();
            let details = json!({
                "points": points,
                "slope": num(res.slope),
                "verdict": res.verdict.to_string(),
                "expected": want.to_string(),
            });
            ("4.3", json!({ "beta": beta, "n": n, "trials": trials }), res.verdict == want, details)
        }
        Check::CrossEdge => {
            let n = n_or(&[1000])[0];
            let (p, r, trials) = (args.p.unwrap_or(0.05), args.r.unwrap_or(0.1), args.trials.unwrap_or(4));
            let rep = cross_edge_probability(n, p, r, trials, seed)?;
            let details = json!({
                "formula": num(rep.formula),
                "predicted": num(rep.predicted),
                "measured": num(rep.measured),
                "samples": rep.samples,
                "tolerance": num(rep.tolerance),
                "super_edges": rep.super_edges,
                "expected_super_edges": num(rep.expected_super_edges),
                "super_edge_sd": num(rep.super_edge_sd),
            });
            ("B.1", json!({ "n": n, "p": p, "r": r, "trials": trials }), rep.pass(), details)
        }
    };
    let mut obj = Map::new();
    obj.insert("theorem".into(), json!(name));
    obj.insert("parameters".into(), parameters.clone());
    obj.insert("pass".into(), json!(pass));
    obj.insert("details".into(), details);
    emit_object(&args.out, obj, meta("verify", seed, json!({ "theorem": name, "parameters": parameters })))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn propagate(args: PropagateArgs, seed: u64) -> Outcome {
    let g = load(&args.input)?;
    let g = match &args.schedule {
        Some(s) => build_hsg(&g, &CoarseningSchedule::parse(s, seed)?)?.graph().clone(),
        None => g,
    };
    let agg = match args.agg {
        AggArg::Sum => Aggregator::Sum,
        AggArg::Mean => Aggregator::Mean,
        AggArg::Max => Aggregator::Max,
    };
    let update = match args.update {
        UpdateArg::Replace => Update::Replace,
        UpdateArg::Add => Update::Add,
        UpdateArg::HalveMix => Update::HalveMix,
    };
    let counts = simulate_informed(&g, args.source, args.rounds, agg, update)?;
    let total = g.node_layer().iter().filter(|&&l| l == 0).count();
    let mut body = String::from("round,informed,informed_fraction\n");
    for (t, c) in counts.iter().enumerate() {
        let _ = writeln!(body, "{t},{c},{:.6}", *c as f64 / total as f64);
    }
    let config = json!({
        "input": path_str(&args.input),
        "source": args.source,
        "rounds": args.rounds,
        "agg": format!("{:?}", args.agg).to_lowercase(),
        "update": format!("{:?}", args.update).to_lowercase(),
        "schedule": args.schedule,
    });
    emit_csv(&args.out, &body, meta("propagate", seed, config))
}

fn partition(args: PartitionArgs, seed: u64) -> Outcome {
    let g = load(&args.input)?;
    let n = g.num_nodes();
    let p = match (args.method, args.q, args.r) {
        (MethodArg::Balanced, Some(q), _) => partition_balanced_cut(&g, q, args.epsilon, seed)?,
        (MethodArg::Balanced, None, Some(r)) => {
            partition_balanced_cut(&g, hsg_core::coarsening::cluster_count(r, n), args.epsilon, seed)?
        }
        (MethodArg::Random, Some(q), _) => {
            if q == 0 || q > n {
                return Err(Failure::Usage(format!("cluster count {q} outside [1, {n}]")));
            }
            let cluster_of = hsg_core::coarsening::random_assignment(n, q, &mut seeded_rng(seed));
            hsg_core::coarsening::Partition::new(&g, cluster_of, q)?
        }
        (MethodArg::Random, None, Some(r)) => partition_random(&g, r, seed)?,
        (_, None, None) => unreachable!("clap requires q or r"),
    };
    let mut obj = p.to_value();
    obj.insert("edge_cut".into(), json!(p.edge_cut()));
    obj.insert("max_imbalance".into(), num(p.max_imbalance()));
    obj.insert("sizes".into(), json!(p.sizes()));
    let config = json!({
        "input": path_str(&args.input),
        "method": format!("{:?}", args.method).to_lowercase(),
        "q": p.q(),
        "epsilon": args.epsilon,
    });
    emit_object(&args.out, obj, meta("partition", seed, config))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (seed, workers) = (cli.seed, cli.workers);
    let result = match cli.command {
        Command::Generate { kind } => generate(kind, seed),
        Command::Augment(a) => augment(a, seed),
        Command::Strip(a) => strip(a, seed),
        Command::Stats(a) => stats(a, seed, workers),
        Command::Verify(a) => verify(a, seed, workers),
        Command::Propagate(a) => propagate(a, seed),
        Command::Partition(a) => partition(a, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
