//! Named benchmark topologies and linear-Gaussian data simulation.
//!
//! The catalog entries are frozen as data files (one `edge parent child`
//! line per true edge, `false u v` for spurious candidate edges) and are
//! looked up by case-insensitive name. Simulation generates each node as
//! `beta * (sum of parents) + standard normal noise` in topological order.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{CandidateEdge, CandidateGraph, EdgeState, EdgeStateVector, NodeId};
use crate::oracle::{expected_edge_probabilities, ExpectedProbabilities};
use crate::score::DataMatrix;

/// A benchmark network: true directed edges plus optional false candidate
/// edges that belong to the search space but not to the data-generating DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    name: String,
    nodes: usize,
    /// (parent, child) pairs, 0-based.
    true_edges: Vec<(NodeId, NodeId)>,
    false_edges: Vec<CandidateEdge>,
}

const CATALOG_SOURCES: [(&str, &str); 11] = [
    ("M1", include_str!("../data/m1.top")),
    ("M2", include_str!("../data/m2.top")),
    ("GN4", include_str!("../data/gn4.top")),
    ("GN5", include_str!("../data/gn5.top")),
    ("multiparent", include_str!("../data/multiparent.top")),
    ("GN8", include_str!("../data/gn8.top")),
    ("GN11", include_str!("../data/gn11.top")),
    ("m1f", include_str!("../data/m1f.top")),
    ("m2f", include_str!("../data/m2f.top")),
    ("gn4f", include_str!("../data/gn4f.top")),
    ("gn11f", include_str!("../data/gn11f.top")),
];

/// The built-in topologies in catalog order.
pub fn catalog() -> &'static [Topology] {
    static CATALOG: OnceLock<Vec<Topology>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        CATALOG_SOURCES
            .iter()
            .map(|(name, text)| {
                Topology::parse(name, text)
                    .unwrap_or_else(|e| panic!("built-in topology {name} is invalid: {e}"))
            })
            .collect()
    })
}

/// Case-insensitive catalog lookup.
pub fn lookup(name: &str) -> Option<&'static Topology> {
    catalog().iter().find(|t| t.name.eq_ignore_ascii_case(name))
}

impl Topology {
    /// Builds a topology from explicit 0-based edge lists.
    pub fn new(
        name: &str,
        nodes: usize,
        true_edges: Vec<(NodeId, NodeId)>,
        false_edges: Vec<CandidateEdge>,
    ) -> Result<Self> {
        let topo = Self {
            name: name.to_string(),
            nodes,
            true_edges,
            false_edges,
        };
        topo.validate()?;
        Ok(topo)
    }

    /// Parses the `.top` format: `nodes B`, `edge U V` (directed, 1-based),
    /// `false U V`, with `#` comments.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut nodes: Option<usize> = None;
        let mut true_edges = Vec::new();
        let mut false_edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let keyword = parts.next().unwrap();
            let fail = |msg: &str| {
                Error::Parse(format!("{name} line {}: {msg}: {raw}", lineno + 1))
            };
            match keyword {
                "nodes" => {
                    let b: usize = parts
                        .next()
                        .ok_or_else(|| fail("missing node count"))?
                        .parse()
                        .map_err(|_| fail("node count must be an integer"))?;
                    nodes = Some(b);
                }
                "edge" | "false" => {
                    let mut node = || -> Result<usize> {
                        let v: usize = parts
                            .next()
                            .ok_or_else(|| fail("expected two node ids"))?
                            .parse()
                            .map_err(|_| fail("node ids must be integers"))?;
                        if v == 0 {
                            return Err(fail("node ids are 1-based"));
                        }
                        Ok(v - 1)
                    };
                    let u = node()?;
                    let v = node()?;
                    if keyword == "edge" {
                        true_edges.push((u, v));
                    } else {
                        false_edges.push(CandidateEdge::new(u, v)?);
                    }
                }
                _ => return Err(fail("unknown directive")),
            }
            if parts.next().is_some() {
                return Err(Error::Parse(format!(
                    "{name} line {}: trailing tokens: {raw}",
                    lineno + 1
                )));
            }
        }
        let nodes = nodes.ok_or_else(|| {
            Error::Parse(format!("{name}: missing `nodes` line"))
        })?;
        Self::new(name, nodes, true_edges, false_edges)
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::InvalidGraph(format!(
                "{}: a topology needs at least 2 nodes",
                self.name
            )));
        }
        let mut pairs = std::collections::HashSet::new();
        for &(p, c) in &self.true_edges {
            if p >= self.nodes || c >= self.nodes {
                return Err(Error::InvalidGraph(format!(
                    "{}: edge ({}, {}) is out of range",
                    self.name,
                    p + 1,
                    c + 1
                )));
            }
            if !pairs.insert(CandidateEdge::new(p, c)?) {
                return Err(Error::InvalidGraph(format!(
                    "{}: duplicate edge between {} and {}",
                    self.name,
                    p + 1,
                    c + 1
                )));
            }
        }
        for &f in &self.false_edges {
            if f.hi >= self.nodes {
                return Err(Error::InvalidGraph(format!(
                    "{}: false edge ({}, {}) is out of range",
                    self.name,
                    f.lo + 1,
                    f.hi + 1
                )));
            }
            if !pairs.insert(f) {
                return Err(Error::InvalidGraph(format!(
                    "{}: false edge ({}, {}) duplicates a candidate pair",
                    self.name,
                    f.lo + 1,
                    f.hi + 1
                )));
            }
        }
        // The true edges must form a DAG.
        topological_order(&self.parent_lists()).map_err(|_| {
            Error::InvalidGraph(format!("{}: true edges contain a cycle", self.name))
        })?;
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn true_edges(&self) -> &[(NodeId, NodeId)] {
        &self.true_edges
    }

    pub fn false_edges(&self) -> &[CandidateEdge] {
        &self.false_edges
    }

    /// Candidate graph over the true and false edges.
    pub fn candidate_graph(&self) -> Result<CandidateGraph> {
        let mut pairs = self.true_edges.to_vec();
        pairs.extend(self.false_edges.iter().map(|e| (e.lo, e.hi)));
        CandidateGraph::new(self.nodes, &pairs)
    }

    /// Candidate graph over the true edges only.
    pub fn true_graph(&self) -> Result<CandidateGraph> {
        CandidateGraph::new(self.nodes, &self.true_edges)
    }

    /// The data-generating state vector on `g`: true orientation on true
    /// edges, absent on every other candidate edge.
    pub fn true_states_on(&self, g: &CandidateGraph) -> Result<EdgeStateVector> {
        let mut s = vec![EdgeState::Absent; g.edge_count()];
        for &(p, c) in &self.true_edges {
            let e = g.edge_index(p, c).ok_or_else(|| {
                Error::InvalidGraph(format!(
                    "candidate graph is missing the true edge ({}, {})",
                    p + 1,
                    c + 1
                ))
            })?;
            s[e] = if p < c {
                EdgeState::Forward
            } else {
                EdgeState::Reverse
            };
        }
        Ok(s)
    }

    /// True states on the topology's own candidate graph.
    pub fn true_states(&self) -> Result<EdgeStateVector> {
        self.true_states_on(&self.candidate_graph()?)
    }

    /// Which edges of `g` are true edges of this topology.
    pub fn true_edge_flags(&self, g: &CandidateGraph) -> Vec<bool> {
        let set: std::collections::HashSet<CandidateEdge> = self
            .true_edges
            .iter()
            .map(|&(p, c)| CandidateEdge::new(p, c).expect("validated edge"))
            .collect();
        g.edges().iter().map(|e| set.contains(e)).collect()
    }

    /// Equivalence-class expectations mapped onto `g`: class fractions on
    /// true edges, (0, 0, 1) on every other candidate edge of `g`.
    pub fn expected_probabilities_on(&self, g: &CandidateGraph) -> Result<ExpectedProbabilities> {
        let gt = self.true_graph()?;
        let true_dag = self.true_states_on(&gt)?;
        let class_rows = expected_edge_probabilities(&true_dag, &gt)?;
        let mut rows = Vec::with_capacity(g.edge_count());
        for edge in g.edges() {
            match gt.edge_index(edge.lo, edge.hi) {
                Some(te) => rows.push(class_rows.rows()[te]),
                None => rows.push([0.0, 0.0, 1.0]),
            }
        }
        ExpectedProbabilities::from_rows(g.edges().to_vec(), rows)
    }

    /// Expectations on the topology's own candidate graph.
    pub fn expected_probabilities(&self) -> Result<ExpectedProbabilities> {
        self.expected_probabilities_on(&self.candidate_graph()?)
    }

    fn parent_lists(&self) -> Vec<Vec<NodeId>> {
        let mut parents = vec![Vec::new(); self.nodes];
        for &(p, c) in &self.true_edges {
            parents[c].push(p);
        }
        parents
    }

    /// Simulates N rows from the true DAG.
    pub fn simulate(&self, n: usize, beta: f64, seed: u64) -> Result<DataMatrix> {
        simulate_parents(&self.parent_lists(), n, beta, seed)
    }
}

/// Kahn topological order over parent lists; errors on a cycle.
pub fn topological_order(parents: &[Vec<NodeId>]) -> Result<Vec<NodeId>> {
    let b = parents.len();
    let mut indegree = vec![0usize; b];
    let mut children = vec![Vec::new(); b];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            if p >= b || p == c {
                return Err(Error::InvalidGraph(format!(
                    "node {} has invalid parent {}",
                    c + 1,
                    p + 1
                )));
            }
            indegree[c] += 1;
            children[p].push(c);
        }
    }
    let mut queue: Vec<NodeId> = (0..b).filter(|&j| indegree[j] == 0).collect();
    let mut order = Vec::with_capacity(b);
    while let Some(j) = queue.pop() {
        order.push(j);
        for &c in &children[j] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push(c);
            }
        }
    }
    if order.len() != b {
        return Err(Error::InvalidGraph(
            "parent structure contains a directed cycle".into(),
        ));
    }
    Ok(order)
}

/// Linear-Gaussian simulation from explicit parent lists: noise is drawn
/// per node in node-index order, then values fill in topological order as
/// `beta * (sum of parent values) + noise`. Columns are named T1..Tb.
pub fn simulate_parents(
    parents: &[Vec<NodeId>],
    n: usize,
    beta: f64,
    seed: u64,
) -> Result<DataMatrix> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "sample size must be at least 2, got {n}"
        )));
    }
    if !beta.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "signal strength must be finite, got {beta}"
        )));
    }
    let order = topological_order(parents)?;
    let b = parents.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    for &j in &order {
        if parents[j].is_empty() {
            continue;
        }
        let sums: Vec<f64> = (0..n)
            .map(|i| parents[j].iter().map(|&p| columns[p][i]).sum())
            .collect();
        for (value, parent_sum) in columns[j].iter_mut().zip(&sums) {
            *value += beta * parent_sum;
        }
    }
    let names = (0..b).map(|j| format!("T{}", j + 1)).collect();
    DataMatrix::new(names, columns)
}
