//! File formats: float formatting, posterior and trace CSVs, edge-list and
//! DAG files, and the "forbid parent" constraint format.
//!
//! All floats are written with 17 significant digits so every CSV
//! round-trips to the exact same bits.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{CandidateEdge, CandidateGraph, Constraints, NodeId};
use crate::sampler::{PosteriorTable, Trace};

/// Formats with 17 significant digits; parsing the result with
/// `str::parse::<f64>()` recovers the exact input bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `edge_lo,edge_hi,p_forward,p_reverse,p_absent` rows, nodes 1-based.
pub fn write_posterior_csv<W: Write>(table: &PosteriorTable, mut w: W) -> Result<()> {
    writeln!(w, "edge_lo,edge_hi,p_forward,p_reverse,p_absent")?;
    for (edge, row) in table.edges().iter().zip(table.probs()) {
        writeln!(
            w,
            "{},{},{},{},{}",
            edge.lo + 1,
            edge.hi + 1,
            fmt_f64(row[0]),
            fmt_f64(row[1]),
            fmt_f64(row[2])
        )?;
    }
    Ok(())
}

pub fn write_posterior_path(table: &PosteriorTable, path: impl AsRef<Path>) -> Result<()> {
    write_posterior_csv(table, std::fs::File::create(path)?)
}

/// Reads the posterior CSV format back; edges must be strictly increasing.
pub fn read_posterior_csv<R: Read>(reader: R) -> Result<PosteriorTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["edge_lo", "edge_hi", "p_forward", "p_reverse", "p_absent"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse(format!(
            "posterior CSV header must be {:?}, got {:?}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut edges = Vec::new();
    let mut probs = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let field = |j: usize| -> Result<&str> {
            record
                .get(j)
                .ok_or_else(|| Error::Parse(format!("row {row}: missing field {}", j + 1)))
        };
        let node = |j: usize| -> Result<usize> {
            let raw = field(j)?;
            let v: usize = raw
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad node id {raw:?}")))?;
            if v == 0 {
                return Err(Error::Parse(format!("row {row}: node ids are 1-based")));
            }
            Ok(v - 1)
        };
        let prob = |j: usize| -> Result<f64> {
            let raw = field(j)?;
            raw.parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad probability {raw:?}")))
        };
        let edge = CandidateEdge::new(node(0)?, node(1)?)?;
        if let Some(prev) = edges.last() {
            if *prev >= edge {
                return Err(Error::Parse(format!(
                    "row {row}: edges must be strictly increasing"
                )));
            }
        }
        edges.push(edge);
        probs.push([prob(2)?, prob(3)?, prob(4)?]);
    }
    PosteriorTable::from_rows(edges, probs)
}

pub fn read_posterior_path(path: impl AsRef<Path>) -> Result<PosteriorTable> {
    read_posterior_csv(std::fs::File::open(path)?)
}

/// Writes `iteration,loglik,state` rows; the state is the edge-state digit
/// string in edge order (0 forward, 1 reverse, 2 absent).
pub fn write_trace_csv<W: Write>(trace: &Trace, mut w: W) -> Result<()> {
    writeln!(w, "iteration,loglik,state")?;
    for sample in &trace.samples {
        let digits: String = sample
            .s
            .iter()
            .map(|st| char::from(b'0' + st.index() as u8))
            .collect();
        writeln!(w, "{},{},{}", sample.iteration, fmt_f64(sample.loglik), digits)?;
    }
    Ok(())
}

pub fn write_trace_path(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    write_trace_csv(trace, std::fs::File::create(path)?)
}

/// Declared node count, when a `nodes B` line is present, plus the pairs in
/// file order.
pub type ParsedPairs = (Option<usize>, Vec<(NodeId, NodeId)>);

/// Parses node-pair files: optional `nodes B` line, then one `U V` pair per
/// line (1-based), with `#` comments. Returns the declared node count and
/// the pairs in file order.
pub fn parse_pairs(text: &str) -> Result<ParsedPairs> {
    let mut nodes = None;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fail =
            |msg: &str| Error::Parse(format!("line {}: {msg}: {raw}", lineno + 1));
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens[0] == "nodes" {
            if tokens.len() != 2 {
                return Err(fail("expected `nodes B`"));
            }
            nodes = Some(
                tokens[1]
                    .parse()
                    .map_err(|_| fail("node count must be an integer"))?,
            );
            continue;
        }
        if tokens.len() != 2 {
            return Err(fail("expected two node ids"));
        }
        let node = |t: &str| -> Result<usize> {
            let v: usize = t.parse().map_err(|_| fail("node ids must be integers"))?;
            if v == 0 {
                return Err(fail("node ids are 1-based"));
            }
            Ok(v - 1)
        };
        pairs.push((node(tokens[0])?, node(tokens[1])?));
    }
    Ok((nodes, pairs))
}

/// Resolves the node count for a pair file: the declared count if present
/// (validated against the pairs), otherwise the largest mentioned node.
pub fn resolve_node_count(
    declared: Option<usize>,
    pairs: &[(NodeId, NodeId)],
) -> Result<usize> {
    let max_node = pairs
        .iter()
        .map(|&(u, v)| u.max(v) + 1)
        .max()
        .unwrap_or(0);
    match declared {
        Some(b) => {
            if b < max_node {
                return Err(Error::Parse(format!(
                    "file declares {b} nodes but mentions node {max_node}"
                )));
            }
            Ok(b)
        }
        None if max_node >= 2 => Ok(max_node),
        None => Err(Error::Parse(
            "pair file mentions fewer than 2 nodes and declares no node count".into(),
        )),
    }
}

/// Reads an undirected candidate-graph edge list.
pub fn read_candidate_graph_str(text: &str) -> Result<CandidateGraph> {
    let (declared, pairs) = parse_pairs(text)?;
    if pairs.is_empty() {
        return Err(Error::Parse("edge list contains no edges".into()));
    }
    CandidateGraph::new(resolve_node_count(declared, &pairs)?, &pairs)
}

pub fn read_candidate_graph_path(path: impl AsRef<Path>) -> Result<CandidateGraph> {
    read_candidate_graph_str(&std::fs::read_to_string(path)?)
}

/// Reads a directed DAG file: each `U V` line is an arrow U -> V. A node
/// pair may appear only once in either direction.
pub fn read_dag_str(text: &str) -> Result<(usize, Vec<(NodeId, NodeId)>)> {
    let (declared, pairs) = parse_pairs(text)?;
    if pairs.is_empty() {
        return Err(Error::Parse("DAG file contains no edges".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for &(u, v) in &pairs {
        if !seen.insert(CandidateEdge::new(u, v)?) {
            return Err(Error::Parse(format!(
                "DAG file repeats the pair ({}, {})",
                u + 1,
                v + 1
            )));
        }
    }
    Ok((resolve_node_count(declared, &pairs)?, pairs))
}

pub fn read_dag_path(path: impl AsRef<Path>) -> Result<(usize, Vec<(NodeId, NodeId)>)> {
    read_dag_str(&std::fs::read_to_string(path)?)
}

/// Parses constraint lines `U V forbid parent` (1-based): node U may not be
/// a parent of node V. The pair must be a candidate edge of `g`.
pub fn parse_constraints(text: &str, g: &CandidateGraph) -> Result<Constraints> {
    let mut constraints = Constraints::none(g.edge_count());
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fail =
            |msg: &str| Error::Parse(format!("line {}: {msg}: {raw}", lineno + 1));
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 || tokens[2] != "forbid" || tokens[3] != "parent" {
            return Err(fail("expected `U V forbid parent`"));
        }
        let node = |t: &str| -> Result<usize> {
            let v: usize = t.parse().map_err(|_| fail("node ids must be integers"))?;
            if v == 0 {
                return Err(fail("node ids are 1-based"));
            }
            Ok(v - 1)
        };
        let u = node(tokens[0])?;
        let v = node(tokens[1])?;
        constraints.forbid_parent(g, u, v)?;
    }
    Ok(constraints)
}

pub fn parse_constraints_path(path: impl AsRef<Path>, g: &CandidateGraph) -> Result<Constraints> {
    parse_constraints(&std::fs::read_to_string(path)?, g)
}
