//! Edge-list and canonical JSON graph formats.
//!
//! Canonical JSON: object keys sorted, edges sorted lexicographically, floats
//! written with 17 significant digits, no insignificant whitespace, one
//! trailing newline. Equal graphs always produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, Graph, GraphParts};

/// Parses `u v` lines. `#` starts a comment; `n <count>` fixes the node count.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut declared = None;
    let mut max_index = None::<usize>;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("{s:?}: {e}"),
            })
        };
        match fields.as_slice() {
            ["n", count] => {
                if declared.is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "repeated node-count header".into(),
                    });
                }
                declared = Some(parse(count)?);
            }
            [u, v] => {
                let (u, v) = (parse(u)?, parse(v)?);
                max_index = Some(max_index.map_or(u.max(v), |m| m.max(u).max(v)));
                edges.push((u, v));
            }
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `u v` or `n <count>`, got {line:?}"),
                })
            }
        }
    }
    let num_nodes = declared.unwrap_or_else(|| max_index.map_or(0, |m| m + 1));
    Graph::new(num_nodes, edges)
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut out = format!("n {}\n", g.num_nodes());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

fn float_array(row: &[f64]) -> Value {
    Value::Array(row.iter().map(|&x| Value::from(x)).collect())
}

/// Graph contents as a JSON object (without `phi`, `layers` or `meta`).
pub fn graph_to_value(g: &Graph) -> Map<String, Value> {
    let mut obj = Map::new();
    obj.insert("num_nodes".into(), Value::from(g.num_nodes()));
    obj.insert(
        "edges".into(),
        Value::Array(g.edges().iter().map(|&(u, v)| Value::from(vec![u, v])).collect()),
    );
    obj.insert("node_layer".into(), Value::from(g.node_layer().to_vec()));
    obj.insert(
        "edge_kind".into(),
        Value::Array(g.edge_kind().iter().map(|k| Value::from(k.as_str())).collect()),
    );
    if let Some(rows) = g.node_features() {
        obj.insert("node_features".into(), Value::Array(rows.iter().map(|r| float_array(r)).collect()));
    }
    if let Some(rows) = g.edge_features() {
        obj.insert("edge_features".into(), Value::Array(rows.iter().map(|r| float_array(r)).collect()));
    }
    obj
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::invalid(format!("missing key {key:?}")))
}

pub(crate) fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::invalid(format!("{what} must be a non-negative integer, got {v}")))
}

pub(crate) fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::invalid(format!("{what} must be an array")))
}

fn float_rows(v: &Value, what: &str) -> Result<Vec<Vec<f64>>> {
    as_array(v, what)?
        .iter()
        .map(|row| {
            as_array(row, what)?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Error::invalid(format!("{what} entries must be numbers"))))
                .collect()
        })
        .collect()
}

pub fn graph_from_value(obj: &Map<String, Value>) -> Result<Graph> {
    let num_nodes = as_usize(field(obj, "num_nodes")?, "num_nodes")?;
    let edges = as_array(field(obj, "edges")?, "edges")?
        .iter()
        .map(|pair| match pair.as_array().map(Vec::as_slice) {
            Some([u, v]) => Ok((as_usize(u, "edge endpoint")?, as_usize(v, "edge endpoint")?)),
            _ => Err(Error::invalid(format!("edge must be a [u, v] pair, got {pair}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let node_layer = match obj.get("node_layer") {
        Some(v) => as_array(v, "node_layer")?
            .iter()
            .map(|x| as_usize(x, "node_layer").map(|l| l as u32))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let edge_kind = match obj.get("edge_kind") {
        Some(v) => as_array(v, "edge_kind")?
            .iter()
            .map(|x| {
                x.as_str()
                    .ok_or_else(|| Error::invalid("edge_kind entries must be strings"))?
                    .parse::<EdgeKind>()
            })
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let node_features = obj.get("node_features").map(|v| float_rows(v, "node_features")).transpose()?;
    let edge_features = obj.get("edge_features").map(|v| float_rows(v, "edge_features")).transpose()?;
    Graph::from_parts(GraphParts {
        num_nodes,
        edges,
        node_features,
        edge_features,
        node_layer,
        edge_kind,
    })
}

fn write_value(out: &mut String, v: &Value) -> Result<()> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let x = n.as_f64().expect("number is i64, u64 or f64");
                if !x.is_finite() {
                    return Err(Error::invalid("non-finite float cannot be serialized"));
                }
                let _ = write!(out, "{x:.16e}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s)?),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item)?;
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key)?);
                out.push(':');
                write_value(out, &map[key])?;
            }
            out.push('}');
        }
    }
    Ok(())
}

/// Canonical text of any JSON value, newline-terminated.
pub fn to_canonical_json(v: &Value) -> Result<String> {
    let mut out = String::new();
    write_value(&mut out, v)?;
    out.push('\n');
    Ok(out)
}

pub fn graph_to_json(g: &Graph) -> Result<String> {
    to_canonical_json(&Value::Object(graph_to_value(g)))
}

pub fn parse_json_object(text: &str) -> Result<Map<String, Value>> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(Error::Parse {
            line: 1,
            message: "top-level JSON value must be an object".into(),
        }),
    }
}

pub fn graph_from_json(text: &str) -> Result<Graph> {
    graph_from_value(&parse_json_object(text)?)
}

/// Reads JSON when the first non-blank character is `{`, an edge list otherwise.
pub fn parse_graph(text: &str) -> Result<Graph> {
    if text.trim_start().starts_with('{') {
        graph_from_json(text)
    } else {
        parse_edge_list(text)
    }
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    parse_graph(&std::fs::read_to_string(path)?)
}
