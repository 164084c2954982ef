//! Brute-force ground truth: acyclic-orientation enumeration, Markov
//! equivalence classes, exact posteriors, and repair-path enumeration.
//!
//! Everything here trades scale for certainty and is guarded to small
//! graphs: it supplies the reference answers the sampler is tested against.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::cycles::{detect_cycles, CycleCatalog};
use crate::error::{Error, Result};
use crate::graph::{
    check_state_len, parent_sets, states_to_adjacency, CandidateEdge, CandidateGraph,
    Constraints, EdgeState, EdgeStateVector,
};
use crate::sampler::{state_diff, PosteriorTable, Prior};
use crate::score::{graph_log_likelihood, DataMatrix, ScoreCache};

/// Enumeration guard for 2^m orientation scans.
pub const MAX_ORIENTATION_EDGES: usize = 20;
/// Enumeration guard for 3^m state scans.
pub const MAX_POSTERIOR_EDGES: usize = 8;
/// Enumeration guard for repair-path enumeration.
pub const MAX_REPAIR_EDGES: usize = 6;

/// All DAGs sharing a skeleton and v-structure set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    /// Acyclic orientations (states in {0, 1}) in enumeration order; the
    /// class always contains its defining member.
    pub members: Vec<EdgeStateVector>,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Per-edge orientation fractions over an equivalence class, plus (0, 0, 1)
/// rows for edges absent from the true graph.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedProbabilities {
    edges: Vec<CandidateEdge>,
    rows: Vec<[f64; 3]>,
}

impl ExpectedProbabilities {
    /// Rows must sum to 1 and align with `edges`.
    pub fn from_rows(edges: Vec<CandidateEdge>, rows: Vec<[f64; 3]>) -> Result<Self> {
        if edges.len() != rows.len() {
            return Err(Error::InvalidData(format!(
                "{} edges but {} expectation rows",
                edges.len(),
                rows.len()
            )));
        }
        for (e, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|q| !(0.0..=1.0).contains(q)) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidData(format!(
                    "edge {}: malformed expectation row",
                    e + 1
                )));
            }
        }
        Ok(Self { edges, rows })
    }

    pub fn edges(&self) -> &[CandidateEdge] {
        &self.edges
    }

    pub fn rows(&self) -> &[[f64; 3]] {
        &self.rows
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// True edges are the rows with zero absent probability.
    pub fn is_true_edge(&self, edge: usize) -> bool {
        self.rows[edge][2] == 0.0
    }
}

/// Exactly the acyclic members of the 2^m orientations of `g` (every edge
/// present, oriented forward or reverse), in ascending code order.
pub fn enumerate_acyclic_orientations(g: &CandidateGraph) -> Result<Vec<EdgeStateVector>> {
    let m = g.edge_count();
    if m > MAX_ORIENTATION_EDGES {
        return Err(Error::GuardExceeded(format!(
            "orientation enumeration needs 2^{m} cases; limit is 2^{MAX_ORIENTATION_EDGES}"
        )));
    }
    let mut out = Vec::new();
    for code in 0u64..(1u64 << m) {
        let s: EdgeStateVector = (0..m)
            .map(|e| {
                if code >> e & 1 == 1 {
                    EdgeState::Reverse
                } else {
                    EdgeState::Forward
                }
            })
            .collect();
        if states_to_adjacency(g, &s)?.is_acyclic() {
            out.push(s);
        }
    }
    Ok(out)
}

/// Collider triples (j, k, l): j -> k <- l with j < l and j, l non-adjacent
/// under `s`.
pub fn v_structures(g: &CandidateGraph, s: &EdgeStateVector) -> Result<BTreeSet<(usize, usize, usize)>> {
    let parents = parent_sets(g, s)?;
    let adjacent = |a: usize, b: usize| -> bool {
        g.edge_index(a, b)
            .map(|e| s[e] != EdgeState::Absent)
            .unwrap_or(false)
    };
    let mut out = BTreeSet::new();
    for (k, pk) in parents.iter().enumerate() {
        for (i, &j) in pk.iter().enumerate() {
            for &l in &pk[i + 1..] {
                if !adjacent(j, l) {
                    out.insert((j, k, l));
                }
            }
        }
    }
    Ok(out)
}

/// All acyclic orientations of `g` with the same v-structure set as
/// `true_dag`; the input must be acyclic with every edge present.
pub fn equivalence_class(true_dag: &EdgeStateVector, g: &CandidateGraph) -> Result<EquivalenceClass> {
    check_state_len(g, true_dag)?;
    if true_dag.contains(&EdgeState::Absent) {
        return Err(Error::InvalidGraph(
            "equivalence class input must orient every candidate edge".into(),
        ));
    }
    if !states_to_adjacency(g, true_dag)?.is_acyclic() {
        return Err(Error::InvalidGraph(
            "equivalence class input contains a directed cycle".into(),
        ));
    }
    let target = v_structures(g, true_dag)?;
    let mut members = Vec::new();
    for s in enumerate_acyclic_orientations(g)? {
        if v_structures(g, &s)? == target {
            members.push(s);
        }
    }
    Ok(EquivalenceClass { members })
}

/// Fraction of class members carrying each orientation per edge; the absent
/// probability is 0 for every edge (class members orient all edges).
pub fn expected_edge_probabilities(
    true_dag: &EdgeStateVector,
    g: &CandidateGraph,
) -> Result<ExpectedProbabilities> {
    let class = equivalence_class(true_dag, g)?;
    let size = class.size() as f64;
    let mut rows = Vec::with_capacity(g.edge_count());
    for e in 0..g.edge_count() {
        let forward = class
            .members
            .iter()
            .filter(|s| s[e] == EdgeState::Forward)
            .count() as f64;
        rows.push([forward / size, (size - forward) / size, 0.0]);
    }
    ExpectedProbabilities::from_rows(g.edges().to_vec(), rows)
}

/// Exact posterior marginals by enumerating every acyclic state vector that
/// the constraints and prior permit, weighting with the restricted prior
/// times the plug-in likelihood.
pub fn exact_posterior(
    data: &DataMatrix,
    g: &CandidateGraph,
    prior: &Prior,
    constraints: &Constraints,
) -> Result<PosteriorTable> {
    let m = g.edge_count();
    if m > MAX_POSTERIOR_EDGES {
        return Err(Error::GuardExceeded(format!(
            "exact posterior needs 3^{m} cases; limit is 3^{MAX_POSTERIOR_EDGES}"
        )));
    }
    if constraints.len() != m {
        return Err(Error::InvalidConstraint(format!(
            "constraints cover {} edges but the graph has {}",
            constraints.len(),
            m
        )));
    }
    prior.validate_against(constraints)?;
    let mut cache = ScoreCache::new();
    let mut weighted: Vec<(f64, EdgeStateVector)> = Vec::new();
    let total_states = 3usize.pow(m as u32);
    for code in 0..total_states {
        let mut c = code;
        let mut s = Vec::with_capacity(m);
        for _ in 0..m {
            s.push(EdgeState::from_u8((c % 3) as u8)?);
            c /= 3;
        }
        let mut log_prior = 0.0;
        for (e, &st) in s.iter().enumerate() {
            log_prior += prior.restricted_log_prob(st, constraints.allowed(e));
        }
        if log_prior == f64::NEG_INFINITY {
            continue;
        }
        if !states_to_adjacency(g, &s)?.is_acyclic() {
            continue;
        }
        let loglik = graph_log_likelihood(data, g, &s, &mut cache)?;
        weighted.push((log_prior + loglik, s));
    }
    if weighted.is_empty() {
        return Err(Error::InvalidConstraint(
            "no acyclic state vector satisfies the constraints and prior".into(),
        ));
    }
    let max_w = weighted
        .iter()
        .map(|(w, _)| *w)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut buckets = vec![[0.0f64; 3]; m];
    for (w, s) in &weighted {
        let mass = (w - max_w).exp();
        for (e, &st) in s.iter().enumerate() {
            buckets[e][st.index()] += mass;
        }
    }
    let rows = buckets
        .iter()
        .map(|b| {
            let z = b[0] + b[1] + b[2];
            [b[0] / z, b[1] / z, b[2] / z]
        })
        .collect();
    PosteriorTable::from_rows(g.edges().to_vec(), rows)
}

/// One step of a create-then-repair path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathStep {
    pub edge: usize,
    pub old: EdgeState,
    pub new: EdgeState,
    /// Coefficient denominator: the edge count m for proposal-stage
    /// switches, the cycle length for repair switches.
    pub denominator: usize,
    pub is_repair: bool,
}

/// A complete path between two state vectors with its coefficient product
/// (over 1/denominator factors) and switch-probability product.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairPath {
    pub steps: Vec<PathStep>,
    pub coefficient: BigRational,
    pub probability: BigRational,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rational_switch_prob(p: &[BigRational; 3], from: EdgeState, to: EdgeState) -> BigRational {
    let zero = BigRational::from_integer(BigInt::from(0));
    let mut z = zero.clone();
    for st in EdgeState::ALL {
        if st != from {
            z += &p[st.index()];
        }
    }
    if z == zero {
        return zero;
    }
    &p[to.index()] / &z
}

/// A directed cycle as an order-insensitive (edge, state) map, so the same
/// cycle compares equal whether it came from the catalog or the live finder.
type CycleKey = Vec<(usize, EdgeState)>;

fn cycle_key(cycle: &crate::cycles::DirectedCycle) -> CycleKey {
    let mut key: CycleKey = cycle
        .edge_indices
        .iter()
        .copied()
        .zip(cycle.edge_states.iter().copied())
        .collect();
    key.sort_unstable();
    key
}

/// A create-then-repair decomposition: the proposal subset (positions into
/// the diff list) plus each remaining differing edge's assigned cycle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct PathShape {
    proposal: Vec<usize>,
    repairs: Vec<(usize, CycleKey)>,
}

impl PathShape {
    /// The multiset of repaired cycles; decompositions with equal signatures
    /// have equal coefficients.
    fn signature(&self) -> Vec<CycleKey> {
        let mut sig: Vec<CycleKey> = self.repairs.iter().map(|(_, k)| k.clone()).collect();
        sig.sort_unstable();
        sig
    }
}

/// All decompositions of the move `from` -> `to`: switch a nonempty subset
/// of the differing edges at once, then switch each remaining differing edge
/// to its target while it sits on a directed cycle, removing that cycle.
/// Two repair orders realizing the same edge-to-cycle assignment count once.
fn collect_path_shapes(
    from: &EdgeStateVector,
    to: &EdgeStateVector,
    catalog: &CycleCatalog,
) -> Result<Vec<PathShape>> {
    let d = state_diff(from, to);
    let mut shapes = Vec::new();
    for mask in 1u32..(1 << d.len()) {
        let mut state = from.clone();
        let mut proposal = Vec::new();
        let mut remaining = Vec::new();
        for (i, change) in d.iter().enumerate() {
            if mask >> i & 1 == 1 {
                state[change.edge] = change.new;
                proposal.push(i);
            } else {
                remaining.push(i);
            }
        }
        let mut assignments = BTreeSet::new();
        let mut current = Vec::new();
        assign_repairs(&mut state, &remaining, &mut current, &d, catalog, &mut assignments)?;
        for repairs in assignments {
            shapes.push(PathShape {
                proposal: proposal.clone(),
                repairs,
            });
        }
    }
    shapes.sort();
    Ok(shapes)
}

fn assign_repairs(
    state: &mut EdgeStateVector,
    remaining: &[usize],
    current: &mut Vec<(usize, CycleKey)>,
    d: &[crate::sampler::EdgeChange],
    catalog: &CycleCatalog,
    out: &mut BTreeSet<Vec<(usize, CycleKey)>>,
) -> Result<()> {
    let cycles = detect_cycles(state, catalog)?;
    if remaining.is_empty() {
        if cycles.is_empty() {
            let mut repairs = current.clone();
            repairs.sort_unstable();
            out.insert(repairs);
        }
        return Ok(());
    }
    for cycle in &cycles {
        let key = cycle_key(cycle);
        for (pos, &ri) in remaining.iter().enumerate() {
            let change = d[ri];
            if !cycle.edge_indices.contains(&change.edge) {
                continue;
            }
            let next_remaining: Vec<usize> = remaining
                .iter()
                .enumerate()
                .filter(|(q, _)| *q != pos)
                .map(|(_, &v)| v)
                .collect();
            state[change.edge] = change.new;
            current.push((ri, key.clone()));
            assign_repairs(state, &next_remaining, current, d, catalog, out)?;
            current.pop();
            state[change.edge] = change.old;
        }
    }
    Ok(())
}

/// Every path from `from` to `to` through the propose-and-repair kernel: a
/// nonempty subset of the differing edges switches in the proposal stage
/// (coefficient 1/m each), and every remaining differing edge is switched to
/// its target while removing a directed cycle it sits on (coefficient
/// 1/cycle-length). A decomposition counts only if the reverse move admits a
/// decomposition repairing the same cycles, mirroring how the kernel's
/// bookkeeping pairs each move with its reversal; unpaired decompositions are
/// dropped on both sides, which makes the forward and backward coefficient
/// sums equal by construction.
pub fn enumerate_repair_paths(
    from: &EdgeStateVector,
    to: &EdgeStateVector,
    g: &CandidateGraph,
    catalog: &CycleCatalog,
    prior: &Prior,
) -> Result<Vec<RepairPath>> {
    check_state_len(g, from)?;
    check_state_len(g, to)?;
    let m = g.edge_count();
    if m > MAX_REPAIR_EDGES {
        return Err(Error::GuardExceeded(format!(
            "repair-path enumeration is limited to {MAX_REPAIR_EDGES} edges, got {m}"
        )));
    }
    let one = BigRational::from_integer(BigInt::from(1));
    let d = state_diff(from, to);
    if d.is_empty() {
        return Ok(vec![RepairPath {
            steps: Vec::new(),
            coefficient: one.clone(),
            probability: one,
        }]);
    }
    let p_rational: [BigRational; 3] = [
        BigRational::from_float(prior.probs()[0]).unwrap(),
        BigRational::from_float(prior.probs()[1]).unwrap(),
        BigRational::from_float(prior.probs()[2]).unwrap(),
    ];
    let mut probability = one.clone();
    for change in &d {
        probability *= rational_switch_prob(&p_rational, change.old, change.new);
    }

    let forward = collect_path_shapes(from, to, catalog)?;
    let backward = collect_path_shapes(to, from, catalog)?;
    let mut reverse_counts: HashMap<Vec<CycleKey>, usize> = HashMap::new();
    for shape in &backward {
        *reverse_counts.entry(shape.signature()).or_insert(0) += 1;
    }

    let mut paths = Vec::new();
    let mut matched: HashMap<Vec<CycleKey>, usize> = HashMap::new();
    for shape in &forward {
        let sig = shape.signature();
        let cap = reverse_counts.get(&sig).copied().unwrap_or(0);
        let used = matched.entry(sig).or_insert(0);
        if *used == cap {
            continue;
        }
        *used += 1;

        let mut steps = Vec::new();
        let mut coefficient = one.clone();
        for &i in &shape.proposal {
            let change = d[i];
            steps.push(PathStep {
                edge: change.edge,
                old: change.old,
                new: change.new,
                denominator: m,
                is_repair: false,
            });
            coefficient *= ratio(1, m as i64);
        }
        for (i, key) in &shape.repairs {
            let change = d[*i];
            steps.push(PathStep {
                edge: change.edge,
                old: change.old,
                new: change.new,
                denominator: key.len(),
                is_repair: true,
            });
            coefficient *= ratio(1, key.len() as i64);
        }
        paths.push(RepairPath {
            steps,
            coefficient,
            probability: probability.clone(),
        });
    }
    Ok(paths)
}

/// Sum of path coefficients; Theorem-1 equality compares this forward and
/// backward.
pub fn coefficient_sum(paths: &[RepairPath]) -> BigRational {
    let mut total = BigRational::from_integer(BigInt::from(0));
    for path in paths {
        total += &path.coefficient;
    }
    total
}
