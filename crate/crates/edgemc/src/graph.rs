//! Candidate graphs, edge-state vectors, adjacency matrices, and constraints.
//!
//! Nodes are dense zero-based indices internally; all file formats and the
//! CLI use one-based labels. A candidate edge is an unordered pair stored as
//! (lo, hi) with lo < hi, and the edge index is the position in the
//! lexicographically sorted edge list, so indexing is a pure function of the
//! edge set.

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Unordered candidate edge, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidateEdge {
    pub lo: NodeId,
    pub hi: NodeId,
}

impl CandidateEdge {
    /// Normalizes the pair; self-loops are rejected.
    pub fn new(a: NodeId, b: NodeId) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidGraph(format!(
                "self-loop on node {}",
                a + 1
            )));
        }
        Ok(Self {
            lo: a.min(b),
            hi: a.max(b),
        })
    }
}

/// State of a candidate edge: forward orients lo -> hi, reverse hi -> lo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum EdgeState {
    Forward = 0,
    Reverse = 1,
    Absent = 2,
}

impl EdgeState {
    pub const ALL: [EdgeState; 3] = [EdgeState::Forward, EdgeState::Reverse, EdgeState::Absent];

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(EdgeState::Forward),
            1 => Ok(EdgeState::Reverse),
            2 => Ok(EdgeState::Absent),
            _ => Err(Error::Parse(format!("edge state must be 0, 1 or 2, got {v}"))),
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

/// The chain's state: one `EdgeState` per candidate edge, in edge-index order.
pub type EdgeStateVector = Vec<EdgeState>;

/// Node count plus sorted candidate-edge list; edge index = list position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateGraph {
    b: usize,
    edges: Vec<CandidateEdge>,
}

impl CandidateGraph {
    /// Builds a candidate graph from unordered node pairs (zero-based).
    /// Pairs are normalized and sorted; duplicates and self-loops are errors.
    pub fn new(b: usize, pairs: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, c) in pairs {
            if a >= b || c >= b {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) references a node outside 1..={}",
                    a + 1,
                    c + 1,
                    b
                )));
            }
            edges.push(CandidateEdge::new(a, c)?);
        }
        edges.sort();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate candidate edge ({}, {})",
                w[0].lo + 1,
                w[0].hi + 1
            )));
        }
        Ok(Self { b, edges })
    }

    /// All (b^2 - b)/2 unordered pairs.
    pub fn fully_connected(b: usize) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidGraph("node count must be at least 1".into()));
        }
        let mut edges = Vec::with_capacity(b * (b - 1) / 2);
        for lo in 0..b {
            for hi in lo + 1..b {
                edges.push(CandidateEdge { lo, hi });
            }
        }
        Ok(Self { b, edges })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.b
    }

    /// m, the candidate-edge count.
    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[CandidateEdge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, index: usize) -> CandidateEdge {
        self.edges[index]
    }

    /// Edge index of the unordered pair {a, b}, if it is a candidate edge.
    pub fn edge_index(&self, a: NodeId, b: NodeId) -> Option<usize> {
        let (lo, hi) = (a.min(b), a.max(b));
        self.edges
            .binary_search(&CandidateEdge { lo, hi })
            .ok()
    }
}

/// One candidate edge per unordered pair with `a[j][k] == 1` or `a[k][j] == 1`.
/// Accepts any square 0/1 matrix with a zero diagonal (symmetric or directed).
pub fn candidate_from_adjacency(rows: &[Vec<u8>]) -> Result<CandidateGraph> {
    let b = rows.len();
    let mut pairs = Vec::new();
    for (j, row) in rows.iter().enumerate() {
        if row.len() != b {
            return Err(Error::InvalidGraph(format!(
                "adjacency matrix is not square: row {} has {} entries, expected {}",
                j + 1,
                row.len(),
                b
            )));
        }
        for (k, &v) in row.iter().enumerate() {
            if v > 1 {
                return Err(Error::InvalidGraph(format!(
                    "adjacency entry ({}, {}) is {}, expected 0 or 1",
                    j + 1,
                    k + 1,
                    v
                )));
            }
            if v == 1 {
                if j == k {
                    return Err(Error::InvalidGraph(format!(
                        "nonzero diagonal at node {}",
                        j + 1
                    )));
                }
                if j < k || rows[k][j] == 0 {
                    pairs.push((j.min(k), j.max(k)));
                }
            }
        }
    }
    pairs.sort();
    pairs.dedup();
    CandidateGraph::new(b, &pairs)
}

/// Directed b x b binary adjacency. Zero diagonal; a pair is never oriented
/// both ways at once (states map each candidate edge to at most one arc).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    b: usize,
    bits: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn zeros(b: usize) -> Self {
        Self {
            b,
            bits: vec![false; b * b],
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.b
    }

    #[inline]
    pub fn get(&self, from: NodeId, to: NodeId) -> bool {
        self.bits[from * self.b + to]
    }

    #[inline]
    pub fn set(&mut self, from: NodeId, to: NodeId, value: bool) {
        debug_assert!(from != to || !value, "self-loops are not representable");
        self.bits[from * self.b + to] = value;
    }

    /// Out-neighbors of `from` in ascending order.
    pub fn children(&self, from: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let row = &self.bits[from * self.b..(from + 1) * self.b];
        row.iter()
            .enumerate()
            .filter_map(|(k, &v)| if v { Some(k) } else { None })
    }

    /// Kahn's algorithm; true when no directed cycle exists.
    pub fn is_acyclic(&self) -> bool {
        let b = self.b;
        let mut indeg = vec![0usize; b];
        for from in 0..b {
            for to in self.children(from) {
                indeg[to] += 1;
            }
        }
        let mut queue: Vec<NodeId> = (0..b).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for to in self.children(v) {
                indeg[to] -= 1;
                if indeg[to] == 0 {
                    queue.push(to);
                }
            }
        }
        seen == b
    }
}

/// State 0 sets `lo -> hi`, state 1 sets `hi -> lo`, state 2 sets neither.
pub fn states_to_adjacency(g: &CandidateGraph, s: &EdgeStateVector) -> Result<AdjacencyMatrix> {
    check_state_len(g, s)?;
    let mut a = AdjacencyMatrix::zeros(g.node_count());
    for (e, &state) in s.iter().enumerate() {
        let CandidateEdge { lo, hi } = g.edge(e);
        match state {
            EdgeState::Forward => a.set(lo, hi, true),
            EdgeState::Reverse => a.set(hi, lo, true),
            EdgeState::Absent => {}
        }
    }
    Ok(a)
}

/// Per-node parent lists under `s`, each sorted ascending.
pub fn parent_sets(g: &CandidateGraph, s: &EdgeStateVector) -> Result<Vec<Vec<NodeId>>> {
    check_state_len(g, s)?;
    let mut parents = vec![Vec::new(); g.node_count()];
    for (e, &state) in s.iter().enumerate() {
        let CandidateEdge { lo, hi } = g.edge(e);
        match state {
            EdgeState::Forward => parents[hi].push(lo),
            EdgeState::Reverse => parents[lo].push(hi),
            EdgeState::Absent => {}
        }
    }
    for p in &mut parents {
        p.sort_unstable();
    }
    Ok(parents)
}

pub(crate) fn check_state_len(g: &CandidateGraph, s: &EdgeStateVector) -> Result<()> {
    if s.len() != g.edge_count() {
        return Err(Error::InvalidGraph(format!(
            "state vector length {} does not match edge count {}",
            s.len(),
            g.edge_count()
        )));
    }
    Ok(())
}

/// Bitmask over the three edge states; bit i set means state i is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AllowedStates(u8);

impl AllowedStates {
    pub const ALL: AllowedStates = AllowedStates(0b111);

    pub fn from_states(states: &[EdgeState]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidConstraint(
                "allowed-state set must be nonempty".into(),
            ));
        }
        let mut mask = 0u8;
        for &st in states {
            mask |= 1 << st.index();
        }
        Ok(Self(mask))
    }

    #[inline]
    pub fn allows(self, state: EdgeState) -> bool {
        self.0 & (1 << state.index()) != 0
    }

    /// Removes `state`; errors if that would empty the set.
    pub fn forbid(self, state: EdgeState) -> Result<Self> {
        let mask = self.0 & !(1 << state.index());
        if mask == 0 {
            return Err(Error::InvalidConstraint(
                "constraint removes every state of an edge".into(),
            ));
        }
        Ok(Self(mask))
    }

    pub fn iter(self) -> impl Iterator<Item = EdgeState> {
        EdgeState::ALL.into_iter().filter(move |st| self.allows(*st))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// Restriction of one edge to a nonempty subset of the three states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeConstraint {
    pub edge: usize,
    pub allowed: AllowedStates,
}

/// Per-edge allowed-state table for a whole candidate graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraints {
    allowed: Vec<AllowedStates>,
}

impl Constraints {
    /// No restrictions: every edge may take any of the three states.
    pub fn none(m: usize) -> Self {
        Self {
            allowed: vec![AllowedStates::ALL; m],
        }
    }

    pub fn from_edge_constraints(m: usize, list: &[EdgeConstraint]) -> Result<Self> {
        let mut c = Self::none(m);
        for ec in list {
            if ec.edge >= m {
                return Err(Error::InvalidConstraint(format!(
                    "constraint references edge index {} but there are {} edges",
                    ec.edge, m
                )));
            }
            if ec.allowed.is_empty() {
                return Err(Error::InvalidConstraint(
                    "allowed-state set must be nonempty".into(),
                ));
            }
            c.allowed[ec.edge] = ec.allowed;
        }
        Ok(c)
    }

    /// Forbids `parent -> child`. Maps onto the candidate edge's forward or
    /// reverse state; errors when the pair is not a candidate edge.
    pub fn forbid_parent(&mut self, g: &CandidateGraph, parent: NodeId, child: NodeId) -> Result<()> {
        let e = g.edge_index(parent, child).ok_or_else(|| {
            Error::InvalidConstraint(format!(
                "pair ({}, {}) is not a candidate edge",
                parent + 1,
                child + 1
            ))
        })?;
        let banned = if g.edge(e).lo == parent {
            EdgeState::Forward
        } else {
            EdgeState::Reverse
        };
        self.allowed[e] = self.allowed[e].forbid(banned)?;
        Ok(())
    }

    #[inline]
    pub fn allowed(&self, edge: usize) -> AllowedStates {
        self.allowed[edge]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    /// True when every edge state of `s` is allowed.
    pub fn permits(&self, s: &EdgeStateVector) -> bool {
        s.iter().enumerate().all(|(e, &st)| self.allowed[e].allows(st))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gn4() -> CandidateGraph {
        CandidateGraph::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn candidate_edge_normalizes_and_rejects_self_loops() {
        let e = CandidateEdge::new(3, 1).unwrap();
        assert_eq!((e.lo, e.hi), (1, 3));
        assert!(CandidateEdge::new(2, 2).is_err());
    }

    #[test]
    fn candidate_from_symmetric_pair() {
        let rows = vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 0]];
        let g = candidate_from_adjacency(&rows).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge(0), CandidateEdge { lo: 0, hi: 1 });
    }

    #[test]
    fn candidate_from_zero_matrix() {
        let rows = vec![vec![0; 4]; 4];
        let g = candidate_from_adjacency(&rows).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 4);
    }

    #[test]
    fn candidate_from_gn4_skeleton_sorts_edges() {
        // T1-T2, T1-T3, T2-T4, T3-T4 entered asymmetrically and out of order.
        let mut rows = vec![vec![0u8; 4]; 4];
        rows[3][2] = 1;
        rows[0][1] = 1;
        rows[1][0] = 1;
        rows[1][3] = 1;
        rows[2][0] = 1;
        let g = candidate_from_adjacency(&rows).unwrap();
        let got: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.lo, e.hi)).collect();
        assert_eq!(got, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn candidate_from_adjacency_rejects_bad_input() {
        assert!(candidate_from_adjacency(&[vec![0, 1], vec![1]]).is_err());
        assert!(candidate_from_adjacency(&[vec![0, 2], vec![1, 0]]).is_err());
        assert!(candidate_from_adjacency(&[vec![1, 0], vec![0, 0]]).is_err());
    }

    #[test]
    fn fully_connected_counts() {
        assert_eq!(CandidateGraph::fully_connected(2).unwrap().edge_count(), 1);
        assert_eq!(CandidateGraph::fully_connected(4).unwrap().edge_count(), 6);
        assert_eq!(CandidateGraph::fully_connected(11).unwrap().edge_count(), 55);
        assert!(CandidateGraph::fully_connected(0).is_err());
    }

    #[test]
    fn states_to_adjacency_single_edge() {
        let g = CandidateGraph::new(2, &[(0, 1)]).unwrap();
        let a = states_to_adjacency(&g, &vec![EdgeState::Forward]).unwrap();
        assert!(a.get(0, 1) && !a.get(1, 0));
        let a = states_to_adjacency(&g, &vec![EdgeState::Absent]).unwrap();
        assert!(!a.get(0, 1) && !a.get(1, 0));
    }

    #[test]
    fn states_to_adjacency_gn4_true_orientation() {
        // True GN4: T1->T2, T1->T3, T2->T4, T4->T3.
        let g = gn4();
        let s = vec![
            EdgeState::Forward,
            EdgeState::Forward,
            EdgeState::Forward,
            EdgeState::Reverse,
        ];
        let a = states_to_adjacency(&g, &s).unwrap();
        assert!(a.get(0, 1) && a.get(0, 2) && a.get(1, 3) && a.get(3, 2));
        assert!(!a.get(2, 3));
        assert!(a.is_acyclic());
    }

    #[test]
    fn states_to_adjacency_rejects_length_mismatch() {
        let g = gn4();
        assert!(states_to_adjacency(&g, &vec![EdgeState::Forward]).is_err());
    }

    #[test]
    fn parent_sets_all_absent() {
        let g = gn4();
        let parents = parent_sets(&g, &vec![EdgeState::Absent; 4]).unwrap();
        assert!(parents.iter().all(|p| p.is_empty()));
    }

    #[test]
    fn parent_sets_v_structure() {
        // T1 -> T2 <- T3 on the chain skeleton (1,2), (2,3).
        let g = CandidateGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let parents =
            parent_sets(&g, &vec![EdgeState::Forward, EdgeState::Reverse]).unwrap();
        assert_eq!(parents[1], vec![0, 2]);
        assert!(parents[0].is_empty() && parents[2].is_empty());
    }

    #[test]
    fn parent_sets_gn4_true_orientation() {
        let g = gn4();
        let s = vec![
            EdgeState::Forward,
            EdgeState::Forward,
            EdgeState::Forward,
            EdgeState::Reverse,
        ];
        let parents = parent_sets(&g, &s).unwrap();
        assert_eq!(parents[2], vec![0, 3]);
    }

    #[test]
    fn duplicate_and_out_of_range_edges_rejected() {
        assert!(CandidateGraph::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(CandidateGraph::new(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn edge_index_round_trip() {
        let g = gn4();
        for (i, e) in g.edges().iter().enumerate() {
            assert_eq!(g.edge_index(e.lo, e.hi), Some(i));
            assert_eq!(g.edge_index(e.hi, e.lo), Some(i));
        }
        assert_eq!(g.edge_index(0, 3), None);
    }

    #[test]
    fn acyclicity_detects_triangle() {
        let g = CandidateGraph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        // T1 -> T2 -> T3 -> T1.
        let s = vec![EdgeState::Forward, EdgeState::Reverse, EdgeState::Forward];
        assert!(!states_to_adjacency(&g, &s).unwrap().is_acyclic());
        let s = vec![EdgeState::Forward, EdgeState::Forward, EdgeState::Forward];
        assert!(states_to_adjacency(&g, &s).unwrap().is_acyclic());
    }

    #[test]
    fn constraints_forbid_parent() {
        let g = gn4();
        let mut c = Constraints::none(g.edge_count());
        // Node T2 (index 1) may not be a parent of T1 (index 0): bans the
        // reverse state of candidate edge (0, 1).
        c.forbid_parent(&g, 1, 0).unwrap();
        assert!(c.allowed(0).allows(EdgeState::Forward));
        assert!(!c.allowed(0).allows(EdgeState::Reverse));
        assert!(c.allowed(0).allows(EdgeState::Absent));
        assert!(c.forbid_parent(&g, 0, 3).is_err());
    }

    #[test]
    fn constraints_cannot_empty_an_edge() {
        let g = CandidateGraph::new(2, &[(0, 1)]).unwrap();
        let mut c = Constraints::none(1);
        c.forbid_parent(&g, 0, 1).unwrap();
        c.forbid_parent(&g, 1, 0).unwrap();
        assert_eq!(c.allowed(0).len(), 1);
        assert!(c.allowed(0).allows(EdgeState::Absent));
    }
}
