//! Directed-cycle finding, signature encoding, and cycle removal.
//!
//! The finder reduces the adjacency matrix (dropping nodes that cannot lie on
//! a cycle), grows branch trees from every surviving node following directed
//! arcs until a node repeats, trims each repeating branch to its cycle
//! suffix, and converts the node sequence to candidate-edge indices and
//! states. A directed cycle is identified by its length together with a
//! decimal code: sum over cycle edges of (state * 3^k + k) where k is the
//! one-based edge index; 3^k exceeds u64 range near k = 40, so the decimal is
//! arbitrary precision.
//!
//! A catalog precomputes every simple cycle of the undirected skeleton with
//! both directed orientations, so in-chain detection is a state comparison
//! instead of a graph search. Skeletons whose simple-cycle count exceeds the
//! cap, or whose signature table would contain a (length, decimal)
//! collision, fall back to running the finder per query.

use std::collections::HashSet;

use num_bigint::BigUint;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{
    check_state_len, states_to_adjacency, AdjacencyMatrix, CandidateGraph, Constraints, EdgeState,
    EdgeStateVector, NodeId,
};
use crate::sampler::Prior;

/// Skeletons with more simple cycles than this are not cataloged; detection
/// falls back to the per-query finder.
pub const DEFAULT_CYCLE_CAP: usize = 10_000;

/// A node sequence grown from a root by following directed arcs.
pub type Branch = Vec<NodeId>;

/// A simple directed cycle expressed over candidate edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedCycle {
    /// Candidate-edge indices in traversal order, starting at the cycle's
    /// smallest node.
    pub edge_indices: Vec<usize>,
    /// Edge states parallel to `edge_indices`; never `Absent`.
    pub edge_states: Vec<EdgeState>,
    /// Number of edges; at least 3.
    pub length: usize,
    /// The (length, decimal) pair identifies the directed cycle.
    pub decimal: BigUint,
}

impl DirectedCycle {
    fn from_parts(edge_indices: Vec<usize>, edge_states: Vec<EdgeState>, pow3: &[BigUint]) -> Self {
        let decimal = decimal_from_parts(&edge_indices, &edge_states, pow3);
        Self {
            length: edge_indices.len(),
            edge_indices,
            edge_states,
            decimal,
        }
    }

    /// True when `s` carries this cycle's orientation on every cycle edge.
    pub fn present_in(&self, s: &EdgeStateVector) -> bool {
        self.edge_indices
            .iter()
            .zip(&self.edge_states)
            .all(|(&e, &st)| s[e] == st)
    }
}

/// Rotates a closed node sequence (first == last) to start at its smallest
/// node, preserving direction.
fn canonical_rotation(seq: &[NodeId]) -> Vec<NodeId> {
    debug_assert!(seq.len() >= 2 && seq.first() == seq.last());
    let nodes = &seq[..seq.len() - 1];
    let p = nodes
        .iter()
        .enumerate()
        .min_by_key(|(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap();
    let mut out = Vec::with_capacity(seq.len());
    out.extend_from_slice(&nodes[p..]);
    out.extend_from_slice(&nodes[..p]);
    out.push(nodes[p]);
    out
}

/// Adds the transpose, then iteratively deletes nodes connected to fewer than
/// two surviving nodes. Returns the reduced directed matrix (re-indexed over
/// survivors) and the surviving original node indices, ascending.
pub fn reduce_adjacency(a: &AdjacencyMatrix) -> (AdjacencyMatrix, Vec<NodeId>) {
    let b = a.node_count();
    let mut alive = vec![true; b];
    loop {
        let mut changed = false;
        for v in 0..b {
            if !alive[v] {
                continue;
            }
            let degree = (0..b)
                .filter(|&u| u != v && alive[u] && (a.get(v, u) || a.get(u, v)))
                .count();
            if degree < 2 {
                alive[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let survivors: Vec<NodeId> = (0..b).filter(|&v| alive[v]).collect();
    let mut reduced = AdjacencyMatrix::zeros(survivors.len());
    for (i, &v) in survivors.iter().enumerate() {
        for (j, &u) in survivors.iter().enumerate() {
            if i != j && a.get(v, u) {
                reduced.set(i, j, true);
            }
        }
    }
    (reduced, survivors)
}

/// Exactly the simple directed cycles of `a`, each in canonical form.
///
/// Branch trees are grown from every surviving node of the reduced matrix
/// (children in ascending order); a branch ends where a node repeats, is
/// trimmed to its cycle suffix, and duplicates are dropped by edge set.
pub fn find_directed_cycles(
    a: &AdjacencyMatrix,
    g: &CandidateGraph,
) -> Result<Vec<DirectedCycle>> {
    if a.node_count() != g.node_count() {
        return Err(Error::InvalidGraph(format!(
            "adjacency has {} nodes but candidate graph has {}",
            a.node_count(),
            g.node_count()
        )));
    }
    for from in 0..a.node_count() {
        for to in a.children(from) {
            if g.edge_index(from, to).is_none() {
                return Err(Error::InvalidGraph(format!(
                    "arc {} -> {} is not an orientation of a candidate edge",
                    from + 1,
                    to + 1
                )));
            }
            if a.get(to, from) {
                return Err(Error::InvalidGraph(format!(
                    "pair ({}, {}) is oriented both ways",
                    from + 1,
                    to + 1
                )));
            }
        }
    }

    let (_, survivors) = reduce_adjacency(a);
    let surviving = {
        let mut mask = vec![false; a.node_count()];
        for &v in &survivors {
            mask[v] = true;
        }
        mask
    };
    // Out-neighbor lists restricted to survivors, ascending.
    let children: Vec<Vec<NodeId>> = (0..a.node_count())
        .map(|v| {
            if surviving[v] {
                a.children(v).filter(|&u| surviving[u]).collect()
            } else {
                Vec::new()
            }
        })
        .collect();

    let pow3 = powers_of_three(g.edge_count());
    let mut cycles = Vec::new();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut path: Branch = Vec::new();
    let mut on_path = vec![false; a.node_count()];
    for &root in &survivors {
        path.push(root);
        on_path[root] = true;
        grow_branches(
            &children, &mut path, &mut on_path, g, &pow3, &mut seen, &mut cycles,
        )?;
        on_path[root] = false;
        path.pop();
    }
    Ok(cycles)
}

fn grow_branches(
    children: &[Vec<NodeId>],
    path: &mut Branch,
    on_path: &mut [bool],
    g: &CandidateGraph,
    pow3: &[BigUint],
    seen: &mut HashSet<Vec<usize>>,
    cycles: &mut Vec<DirectedCycle>,
) -> Result<()> {
    let last = *path.last().unwrap();
    for &child in &children[last] {
        if on_path[child] {
            // The branch ends here; its suffix from the repeat is a cycle.
            path.push(child);
            let trimmed = trim_branch(path)?;
            path.pop();
            if trimmed.len() >= 4 {
                let canonical = canonical_rotation(&trimmed);
                let coords = branch_to_coordinates(&canonical)?;
                let edge_indices = coordinates_to_edge_indices(&coords, g)?;
                let mut key = edge_indices.clone();
                key.sort_unstable();
                // Dense graphs reach the same cycle along many branches;
                // skip the state and decimal work for known edge sets.
                if seen.insert(key) {
                    let edge_states = coordinates_to_states(&coords);
                    cycles.push(DirectedCycle::from_parts(edge_indices, edge_states, pow3));
                }
            }
        } else {
            path.push(child);
            on_path[child] = true;
            grow_branches(children, path, on_path, g, pow3, seen, cycles)?;
            on_path[child] = false;
            path.pop();
        }
    }
    Ok(())
}

/// Suffix of the branch starting at the earlier occurrence of its leaf, so
/// the result begins and ends with the same node.
pub fn trim_branch(branch: &[NodeId]) -> Result<Branch> {
    let leaf = *branch.last().ok_or_else(|| {
        Error::InvalidGraph("cannot trim an empty branch".into())
    })?;
    let pos = branch[..branch.len() - 1]
        .iter()
        .position(|&v| v == leaf)
        .ok_or_else(|| {
            Error::InvalidGraph("branch leaf never repeats; no cycle on this branch".into())
        })?;
    Ok(branch[pos..].to_vec())
}

/// Consecutive (from, to) pairs of a trimmed branch.
pub fn branch_to_coordinates(trimmed: &[NodeId]) -> Result<Vec<(NodeId, NodeId)>> {
    if trimmed.len() < 2 || trimmed.first() != trimmed.last() {
        return Err(Error::InvalidGraph(
            "branch is not trimmed: it must start and end at the same node".into(),
        ));
    }
    Ok(trimmed.windows(2).map(|w| (w[0], w[1])).collect())
}

/// State 0 when the arc runs low node to high node, else state 1.
pub fn coordinates_to_states(coords: &[(NodeId, NodeId)]) -> Vec<EdgeState> {
    coords
        .iter()
        .map(|&(from, to)| {
            if from < to {
                EdgeState::Forward
            } else {
                EdgeState::Reverse
            }
        })
        .collect()
}

/// Candidate-edge index of each coordinate pair; errors when a pair is not a
/// candidate edge of `g`.
pub fn coordinates_to_edge_indices(
    coords: &[(NodeId, NodeId)],
    g: &CandidateGraph,
) -> Result<Vec<usize>> {
    coords
        .iter()
        .map(|&(from, to)| {
            g.edge_index(from, to).ok_or_else(|| {
                Error::InvalidGraph(format!(
                    "pair ({}, {}) is not a candidate edge",
                    from + 1,
                    to + 1
                ))
            })
        })
        .collect()
}

/// 3^1 .. 3^m at indices 1..=m (index 0 unused).
fn powers_of_three(m: usize) -> Vec<BigUint> {
    let mut pow3 = Vec::with_capacity(m + 1);
    pow3.push(BigUint::from(1u32));
    for k in 1..=m {
        let next = &pow3[k - 1] * 3u32;
        pow3.push(next);
    }
    pow3
}

fn decimal_from_parts(
    edge_indices: &[usize],
    edge_states: &[EdgeState],
    pow3: &[BigUint],
) -> BigUint {
    let mut total = BigUint::ZERO;
    for (&e, &st) in edge_indices.iter().zip(edge_states) {
        let k = e + 1;
        if st == EdgeState::Reverse {
            total += &pow3[k];
        }
        total += BigUint::from(k);
    }
    total
}

/// Sum over cycle edges of state * 3^k + k, with k the one-based edge index.
/// `edge_indices` are zero-based here; `m` is the candidate-edge count.
pub fn cycle_decimal(
    edge_indices: &[usize],
    edge_states: &[EdgeState],
    m: usize,
) -> Result<BigUint> {
    if edge_indices.len() != edge_states.len() {
        return Err(Error::InvalidGraph(
            "edge index and state lists differ in length".into(),
        ));
    }
    let mut dedup: Vec<usize> = edge_indices.to_vec();
    dedup.sort_unstable();
    if dedup.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidGraph("cycle edge indices must be distinct".into()));
    }
    for (&e, &st) in edge_indices.iter().zip(edge_states) {
        if e >= m {
            return Err(Error::InvalidGraph(format!(
                "edge index {} out of range for {} edges",
                e + 1,
                m
            )));
        }
        if st == EdgeState::Absent {
            return Err(Error::InvalidGraph(
                "cycle edges must be oriented; state 2 is not allowed".into(),
            ));
        }
    }
    Ok(decimal_from_parts(edge_indices, edge_states, &powers_of_three(m)))
}

/// One simple skeleton cycle with both directed orientations.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    /// Candidate-edge indices in traversal order from the smallest node.
    pub edge_indices: Vec<usize>,
    /// Two orientations: states parallel to `edge_indices` plus decimal code.
    pub orientations: [(Vec<EdgeState>, BigUint); 2],
}

/// Precomputed simple cycles of a candidate graph's skeleton.
#[derive(Debug, Clone)]
pub struct CycleCatalog {
    graph: CandidateGraph,
    entries: Vec<CatalogEntry>,
    fallback: bool,
}

/// Builds the catalog with the default cycle cap.
pub fn build_cycle_catalog(g: &CandidateGraph) -> Result<CycleCatalog> {
    CycleCatalog::build_with_cap(g, DEFAULT_CYCLE_CAP)
}

impl CycleCatalog {
    pub fn build(g: &CandidateGraph) -> Result<Self> {
        Self::build_with_cap(g, DEFAULT_CYCLE_CAP)
    }

    pub fn build_with_cap(g: &CandidateGraph, cap: usize) -> Result<Self> {
        let skeleton_cycles = match enumerate_skeleton_cycles(g, cap) {
            Some(cycles) => cycles,
            None => {
                return Ok(Self {
                    graph: g.clone(),
                    entries: Vec::new(),
                    fallback: true,
                })
            }
        };
        let m = g.edge_count();
        let mut entries = Vec::with_capacity(skeleton_cycles.len());
        let mut signatures: HashSet<(usize, BigUint)> = HashSet::new();
        for nodes in skeleton_cycles {
            let mut seq = nodes.clone();
            seq.push(nodes[0]);
            let coords = branch_to_coordinates(&seq)?;
            let edge_indices = coordinates_to_edge_indices(&coords, g)?;
            let states_a = coordinates_to_states(&coords);
            let states_b: Vec<EdgeState> = states_a
                .iter()
                .map(|&st| match st {
                    EdgeState::Forward => EdgeState::Reverse,
                    EdgeState::Reverse => EdgeState::Forward,
                    EdgeState::Absent => unreachable!(),
                })
                .collect();
            let dec_a = cycle_decimal(&edge_indices, &states_a, m)?;
            let dec_b = cycle_decimal(&edge_indices, &states_b, m)?;
            for dec in [&dec_a, &dec_b] {
                if !signatures.insert((edge_indices.len(), dec.clone())) {
                    // Dense skeletons can produce two distinct cycles with
                    // the same (length, decimal); signatures then no longer
                    // identify cycles, so detection reverts to the finder.
                    return Ok(Self {
                        graph: g.clone(),
                        entries: Vec::new(),
                        fallback: true,
                    });
                }
            }
            entries.push(CatalogEntry {
                edge_indices,
                orientations: [(states_a, dec_a), (states_b, dec_b)],
            });
        }
        Ok(Self {
            graph: g.clone(),
            entries,
            fallback: false,
        })
    }

    /// True when the skeleton exceeded the cycle cap or its signatures
    /// collide, so detection must run the finder per query.
    pub fn is_fallback(&self) -> bool {
        self.fallback
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn cycle_count(&self) -> usize {
        self.entries.len()
    }

    pub fn graph(&self) -> &CandidateGraph {
        &self.graph
    }
}

/// Node lists (smallest node first) of every simple cycle of the skeleton;
/// `None` when the count exceeds `cap`.
fn enumerate_skeleton_cycles(g: &CandidateGraph, cap: usize) -> Option<Vec<Vec<NodeId>>> {
    let b = g.node_count();
    let mut neigh = vec![Vec::new(); b];
    for e in g.edges() {
        neigh[e.lo].push(e.hi);
        neigh[e.hi].push(e.lo);
    }
    for n in &mut neigh {
        n.sort_unstable();
    }
    let mut out = Vec::new();
    let mut path = Vec::new();
    let mut on_path = vec![false; b];
    for v in 0..b {
        path.push(v);
        on_path[v] = true;
        if !skeleton_dfs(v, v, &neigh, &mut path, &mut on_path, cap, &mut out) {
            return None;
        }
        on_path[v] = false;
        path.pop();
    }
    Some(out)
}

fn skeleton_dfs(
    root: NodeId,
    u: NodeId,
    neigh: &[Vec<NodeId>],
    path: &mut Vec<NodeId>,
    on_path: &mut [bool],
    cap: usize,
    out: &mut Vec<Vec<NodeId>>,
) -> bool {
    for &w in &neigh[u] {
        if w == root {
            // Each undirected cycle is met twice from its smallest node;
            // keep the traversal whose second node is the smaller endpoint.
            if path.len() >= 3 && path[1] < *path.last().unwrap() {
                if out.len() == cap {
                    return false;
                }
                out.push(path.clone());
            }
        } else if w > root && !on_path[w] {
            path.push(w);
            on_path[w] = true;
            if !skeleton_dfs(root, w, neigh, path, on_path, cap, out) {
                return false;
            }
            on_path[w] = false;
            path.pop();
        }
    }
    true
}

/// Catalog cycles whose orientation `s` carries on all cycle edges; with a
/// fallback catalog this runs the finder on the oriented adjacency.
pub fn detect_cycles(s: &EdgeStateVector, catalog: &CycleCatalog) -> Result<Vec<DirectedCycle>> {
    check_state_len(&catalog.graph, s)?;
    if catalog.fallback {
        let a = states_to_adjacency(&catalog.graph, s)?;
        return find_directed_cycles(&a, &catalog.graph);
    }
    let mut found = Vec::new();
    for entry in &catalog.entries {
        for (states, decimal) in &entry.orientations {
            let matches = entry
                .edge_indices
                .iter()
                .zip(states)
                .all(|(&e, &st)| s[e] == st);
            if matches {
                found.push(DirectedCycle {
                    edge_indices: entry.edge_indices.clone(),
                    edge_states: states.clone(),
                    length: entry.edge_indices.len(),
                    decimal: decimal.clone(),
                });
            }
        }
    }
    Ok(found)
}

/// Repairs `s` until no directed cycle remains: per detected cycle, one edge
/// is picked uniformly among cycle edges that can move (another allowed state
/// with positive prior exists) and redrawn proportionally to the prior over
/// the allowed non-current states. Cycles are repaired in catalog order
/// within a round, re-checked against the evolving state, and re-detected
/// after each round. Rounds are capped at 100 * (catalog size + 1).
pub fn remove_cycles<R: Rng + ?Sized>(
    s: &EdgeStateVector,
    catalog: &CycleCatalog,
    prior: &Prior,
    constraints: &Constraints,
    rng: &mut R,
) -> Result<EdgeStateVector> {
    let mut s = s.clone();
    let round_cap = 100 * (catalog.cycle_count() + 1);
    let mut rounds = 0;
    loop {
        let detected = detect_cycles(&s, catalog)?;
        if detected.is_empty() {
            return Ok(s);
        }
        rounds += 1;
        if rounds > round_cap {
            return Err(Error::RepairOverflow { rounds: round_cap });
        }
        for cycle in &detected {
            // An earlier repair in this round may have broken this cycle.
            if !cycle.present_in(&s) {
                continue;
            }
            let movable: Vec<usize> = cycle
                .edge_indices
                .iter()
                .copied()
                .filter(|&e| prior.can_leave(s[e], constraints.allowed(e)))
                .collect();
            if movable.is_empty() {
                return Err(Error::UnsatisfiableRepair);
            }
            let e = movable[rng.random_range(0..movable.len())];
            s[e] = prior
                .sample_switch(s[e], constraints.allowed(e), rng)
                .expect("movable edge must have a reachable state");
        }
    }
}
