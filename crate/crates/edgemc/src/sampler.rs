//! Metropolis-Hastings sampling over edge-state vectors.
//!
//! Each iteration draws a proposal by switching a binomially sized set of
//! edges to other allowed states, repairs any directed cycles, and accepts
//! with probability min(1, prior ratio * likelihood ratio * transition
//! ratio). Only the edges whose states differ after repair enter the
//! transition ratio: the path coefficients that weight every
//! create-then-repair ordering cancel between the forward and reverse moves,
//! so the ratio reduces to a product of per-edge switch probabilities.
//! The chain is fully deterministic given the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::cycles::{build_cycle_catalog, remove_cycles, CycleCatalog};
use crate::error::{Error, Result};
use crate::graph::{
    check_state_len, AllowedStates, CandidateEdge, CandidateGraph, Constraints, EdgeState,
    EdgeStateVector,
};
use crate::score::{graph_log_likelihood, DataMatrix, ScoreCache};

/// Independent per-edge prior over the three edge states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    p: [f64; 3],
}

impl Prior {
    /// Probabilities must be finite, nonnegative, and sum to 1 within 1e-9.
    pub fn new(p0: f64, p1: f64, p2: f64) -> Result<Self> {
        let p = [p0, p1, p2];
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidPrior(format!(
                "prior entries must be nonnegative, got ({p0}, {p1}, {p2})"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPrior(format!(
                "prior must sum to 1, got {sum}"
            )));
        }
        Ok(Self { p })
    }

    #[inline]
    pub fn prob(&self, state: EdgeState) -> f64 {
        self.p[state.index()]
    }

    pub fn probs(&self) -> [f64; 3] {
        self.p
    }

    /// Every edge must keep at least one allowed state with positive prior
    /// mass, or no state vector has positive probability.
    pub fn validate_against(&self, constraints: &Constraints) -> Result<()> {
        for e in 0..constraints.len() {
            if constraints.allowed(e).iter().all(|st| self.prob(st) == 0.0) {
                return Err(Error::InvalidPrior(format!(
                    "edge {} has no allowed state with positive prior",
                    e + 1
                )));
            }
        }
        Ok(())
    }

    /// Log prior of `state` renormalized over the allowed set.
    pub fn restricted_log_prob(&self, state: EdgeState, allowed: AllowedStates) -> f64 {
        let z: f64 = allowed.iter().map(|st| self.prob(st)).sum();
        if !allowed.allows(state) || self.prob(state) == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.prob(state).ln() - z.ln()
    }

    /// Draws a state from the prior restricted and renormalized to `allowed`.
    pub fn sample_restricted<R: Rng + ?Sized>(
        &self,
        allowed: AllowedStates,
        rng: &mut R,
    ) -> Result<EdgeState> {
        let z: f64 = allowed.iter().map(|st| self.prob(st)).sum();
        if z <= 0.0 {
            return Err(Error::InvalidPrior(
                "no allowed state has positive prior".into(),
            ));
        }
        let mut u: f64 = rng.random::<f64>() * z;
        for st in allowed.iter() {
            u -= self.prob(st);
            if u < 0.0 {
                return Ok(st);
            }
        }
        // Rounding pushed u to the top of the last positive-mass state.
        Ok(allowed
            .iter()
            .filter(|st| self.prob(*st) > 0.0)
            .last()
            .unwrap())
    }

    /// True when `current` can switch: another allowed state has positive
    /// prior mass.
    pub fn can_leave(&self, current: EdgeState, allowed: AllowedStates) -> bool {
        allowed
            .iter()
            .any(|st| st != current && self.prob(st) > 0.0)
    }

    /// Probability of switching `from -> to`: prior of `to` over the total
    /// prior of allowed states other than `from`; 0 for impossible switches.
    pub fn switch_prob(&self, from: EdgeState, to: EdgeState, allowed: AllowedStates) -> f64 {
        if to == from || !allowed.allows(to) {
            return 0.0;
        }
        let z: f64 = allowed
            .iter()
            .filter(|&st| st != from)
            .map(|st| self.prob(st))
            .sum();
        if z <= 0.0 {
            return 0.0;
        }
        self.prob(to) / z
    }

    /// Draws the switch target for an edge leaving `current`, proportional
    /// to the prior over the other allowed states; `None` when stuck.
    pub fn sample_switch<R: Rng + ?Sized>(
        &self,
        current: EdgeState,
        allowed: AllowedStates,
        rng: &mut R,
    ) -> Option<EdgeState> {
        let others: Vec<EdgeState> = allowed
            .iter()
            .filter(|&st| st != current && self.prob(st) > 0.0)
            .collect();
        let z: f64 = others.iter().map(|&st| self.prob(st)).sum();
        if others.is_empty() || z <= 0.0 {
            return None;
        }
        let mut u: f64 = rng.random::<f64>() * z;
        for &st in &others {
            u -= self.prob(st);
            if u < 0.0 {
                return Some(st);
            }
        }
        Some(*others.last().unwrap())
    }
}

/// Chain length, burn-in fraction, thinning interval, and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in_fraction: f64,
    pub step_size: usize,
    pub seed: u64,
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::InvalidConfig(format!(
                "burn-in fraction must lie in [0, 1), got {}",
                self.burn_in_fraction
            )));
        }
        if self.step_size == 0 {
            return Err(Error::InvalidConfig("step size must be at least 1".into()));
        }
        if self.retained_count() < 1 {
            return Err(Error::InvalidConfig(format!(
                "no samples retained: {} iterations, burn-in {}, step size {}",
                self.iterations, self.burn_in_fraction, self.step_size
            )));
        }
        Ok(())
    }

    /// floor(burn_in_fraction * iterations) iterations are discarded.
    pub fn burn_iterations(&self) -> usize {
        (self.burn_in_fraction * self.iterations as f64).floor() as usize
    }

    /// floor((iterations - burn-in) / step_size) samples are retained.
    pub fn retained_count(&self) -> usize {
        (self.iterations - self.burn_iterations()) / self.step_size
    }
}

/// Current chain position with its cached log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub s: EdgeStateVector,
    pub loglik: f64,
}

/// One edge whose state differs between the current and proposed vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeChange {
    pub edge: usize,
    pub old: EdgeState,
    pub new: EdgeState,
}

/// Componentwise diff `from -> to`.
pub fn state_diff(from: &EdgeStateVector, to: &EdgeStateVector) -> Vec<EdgeChange> {
    from.iter()
        .zip(to)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(edge, (&old, &new))| EdgeChange { edge, old, new })
        .collect()
}

/// One retained chain state.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub iteration: usize,
    pub loglik: f64,
    pub s: EdgeStateVector,
}

/// Retained samples in iteration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Per-edge relative frequencies of the three states.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    edges: Vec<CandidateEdge>,
    probs: Vec<[f64; 3]>,
}

impl PosteriorTable {
    /// Rows must be probabilities in [0, 1] summing to 1 within 1e-12.
    pub fn from_rows(edges: Vec<CandidateEdge>, probs: Vec<[f64; 3]>) -> Result<Self> {
        if edges.len() != probs.len() {
            return Err(Error::InvalidData(format!(
                "{} edges but {} probability rows",
                edges.len(),
                probs.len()
            )));
        }
        for (e, row) in probs.iter().enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidData(format!(
                    "edge {}: probabilities must lie in [0, 1]",
                    e + 1
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidData(format!(
                    "edge {}: probabilities sum to {sum}, expected 1",
                    e + 1
                )));
            }
        }
        Ok(Self { edges, probs })
    }

    pub fn edges(&self) -> &[CandidateEdge] {
        &self.edges
    }

    pub fn probs(&self) -> &[[f64; 3]] {
        &self.probs
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// P0 + P1: the posterior probability the edge is present.
    pub fn presence(&self, edge: usize) -> f64 {
        self.probs[edge][0] + self.probs[edge][1]
    }
}

/// Draws each edge's state from the restricted prior, then repairs cycles
/// and scores the result.
pub fn init_state<R: Rng + ?Sized>(
    data: &DataMatrix,
    g: &CandidateGraph,
    prior: &Prior,
    constraints: &Constraints,
    catalog: &CycleCatalog,
    cache: &mut ScoreCache,
    rng: &mut R,
) -> Result<ChainState> {
    check_constraint_len(g, constraints)?;
    prior.validate_against(constraints)?;
    let mut s: EdgeStateVector = Vec::with_capacity(g.edge_count());
    for e in 0..g.edge_count() {
        s.push(prior.sample_restricted(constraints.allowed(e), rng)?);
    }
    let s = remove_cycles(&s, catalog, prior, constraints, rng)?;
    let loglik = graph_log_likelihood(data, g, &s, cache)?;
    Ok(ChainState { s, loglik })
}

/// Proposal move: n ~ Binomial(m, 1/m) redrawn until 1 <= n <= (number of
/// edges able to switch), n distinct switchable edges chosen uniformly, each
/// switched proportionally to the prior over its other allowed states, then
/// cycle repair. Returns the repaired vector and the net diff from
/// `current`; when no edge can switch the proposal is the current state.
pub fn propose<R: Rng + ?Sized>(
    current: &EdgeStateVector,
    g: &CandidateGraph,
    prior: &Prior,
    constraints: &Constraints,
    catalog: &CycleCatalog,
    rng: &mut R,
) -> Result<(EdgeStateVector, Vec<EdgeChange>)> {
    check_state_len(g, current)?;
    check_constraint_len(g, constraints)?;
    let m = g.edge_count();
    if m == 0 {
        return Ok((current.clone(), Vec::new()));
    }
    let mut switchable: Vec<usize> = (0..m)
        .filter(|&e| prior.can_leave(current[e], constraints.allowed(e)))
        .collect();
    if switchable.is_empty() {
        return Ok((current.clone(), Vec::new()));
    }
    let binom = rand_distr::Binomial::new(m as u64, 1.0 / m as f64)
        .expect("1/m is a valid probability");
    let n = loop {
        let n = binom.sample(rng) as usize;
        if n >= 1 && n <= switchable.len() {
            break n;
        }
    };
    // Partial Fisher-Yates: the first n entries become the chosen edges.
    for i in 0..n {
        let j = i + rng.random_range(0..switchable.len() - i);
        switchable.swap(i, j);
    }
    let mut chosen = switchable[..n].to_vec();
    chosen.sort_unstable();

    let mut proposed = current.clone();
    for &e in &chosen {
        proposed[e] = prior
            .sample_switch(current[e], constraints.allowed(e), rng)
            .expect("switchable edge has a reachable state");
    }
    let repaired = remove_cycles(&proposed, catalog, prior, constraints, rng)?;
    let d = state_diff(current, &repaired);
    Ok((repaired, d))
}

/// Log of the proposal-probability ratio reverse/forward over the changed
/// edges: sum of log Pr(new -> old) - log Pr(old -> new), with
/// Pr(a -> b) = p_b / (sum of prior over allowed states other than a).
pub fn log_transition_ratio(
    d: &[EdgeChange],
    prior: &Prior,
    constraints: &Constraints,
) -> Result<f64> {
    let mut total = 0.0;
    for change in d {
        debug_assert!(change.old != change.new);
        let allowed = constraints.allowed(change.edge);
        let forward = prior.switch_prob(change.old, change.new, allowed);
        if forward <= 0.0 {
            return Err(Error::ZeroPriorTarget {
                edge: change.edge,
                state: change.new as u8,
            });
        }
        let backward = prior.switch_prob(change.new, change.old, allowed);
        if backward <= 0.0 {
            return Err(Error::ZeroPriorTarget {
                edge: change.edge,
                state: change.old as u8,
            });
        }
        total += backward.ln() - forward.ln();
    }
    Ok(total)
}

/// log alpha = min(0, log prior ratio + log likelihood ratio + log
/// transition ratio), with the prior ratio restricted to the changed edges.
pub fn log_acceptance(
    current: &ChainState,
    proposed: &ChainState,
    d: &[EdgeChange],
    prior: &Prior,
    constraints: &Constraints,
) -> Result<f64> {
    let transition = log_transition_ratio(d, prior, constraints)?;
    let mut log_prior_ratio = 0.0;
    for change in d {
        log_prior_ratio += prior.prob(change.new).ln() - prior.prob(change.old).ln();
    }
    let log_lik_ratio = proposed.loglik - current.loglik;
    Ok((log_prior_ratio + log_lik_ratio + transition).min(0.0))
}

/// Runs the chain: seeded init, `iterations` proposal/accept steps with
/// u ~ U(0,1) compared in log space, and thinning that records the state at
/// every `step_size`-th iteration after the burn-in.
pub fn run(
    data: &DataMatrix,
    g: &CandidateGraph,
    prior: &Prior,
    config: &McmcConfig,
    constraints: &Constraints,
) -> Result<Trace> {
    config.validate()?;
    if data.n_cols() != g.node_count() {
        return Err(Error::InvalidData(format!(
            "data has {} columns but graph has {} nodes",
            data.n_cols(),
            g.node_count()
        )));
    }
    let catalog = build_cycle_catalog(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cache = ScoreCache::new();
    let mut current = init_state(data, g, prior, constraints, &catalog, &mut cache, &mut rng)?;
    let burn = config.burn_iterations();
    let mut samples = Vec::with_capacity(config.retained_count());
    for t in 1..=config.iterations {
        let (proposed_s, d) = propose(&current.s, g, prior, constraints, &catalog, &mut rng)?;
        let candidate = if d.is_empty() {
            None
        } else {
            let loglik = graph_log_likelihood(data, g, &proposed_s, &mut cache)?;
            Some(ChainState {
                s: proposed_s,
                loglik,
            })
        };
        let log_alpha = match &candidate {
            None => 0.0,
            Some(proposed) => log_acceptance(&current, proposed, &d, prior, constraints)?,
        };
        let u: f64 = rng.random();
        if u.ln() < log_alpha {
            if let Some(proposed) = candidate {
                current = proposed;
            }
        }
        #[cfg(debug_assertions)]
        {
            let cycles = crate::cycles::detect_cycles(&current.s, &catalog)?;
            assert!(
                cycles.is_empty(),
                "iteration {t}: accepted state contains a directed cycle"
            );
        }
        if t > burn && (t - burn).is_multiple_of(config.step_size) {
            samples.push(TraceSample {
                iteration: t,
                loglik: current.loglik,
                s: current.s.clone(),
            });
        }
    }
    Ok(Trace { samples })
}

/// Empirical per-edge state frequencies over the retained samples.
pub fn posterior_from_trace(trace: &Trace, g: &CandidateGraph) -> Result<PosteriorTable> {
    if trace.is_empty() {
        return Err(Error::InvalidData(
            "trace has no retained samples".into(),
        ));
    }
    let m = g.edge_count();
    let mut counts = vec![[0usize; 3]; m];
    for sample in &trace.samples {
        check_state_len(g, &sample.s)?;
        for (e, &st) in sample.s.iter().enumerate() {
            counts[e][st.index()] += 1;
        }
    }
    let n = trace.len() as f64;
    let probs = counts
        .iter()
        .map(|c| [c[0] as f64 / n, c[1] as f64 / n, c[2] as f64 / n])
        .collect();
    PosteriorTable::from_rows(g.edges().to_vec(), probs)
}

fn check_constraint_len(g: &CandidateGraph, constraints: &Constraints) -> Result<()> {
    if constraints.len() != g.edge_count() {
        return Err(Error::InvalidConstraint(format!(
            "constraints cover {} edges but the graph has {}",
            constraints.len(),
            g.edge_count()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycles::detect_cycles;
    use approx::assert_relative_eq;
    use rand_distr::StandardNormal;

    use EdgeState::{Absent, Forward, Reverse};

    fn paper_prior() -> Prior {
        Prior::new(0.05, 0.05, 0.9).unwrap()
    }

    fn normal_data(b: usize, n: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let names = (0..b).map(|j| format!("T{}", j + 1)).collect();
        let columns = (0..b)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        DataMatrix::new(names, columns).unwrap()
    }

    #[test]
    fn prior_validation() {
        assert!(Prior::new(0.05, 0.05, 0.9).is_ok());
        assert!(Prior::new(0.0, 0.0, 1.0).is_ok());
        assert!(Prior::new(-0.1, 0.2, 0.9).is_err());
        assert!(Prior::new(0.3, 0.3, 0.3).is_err());
        assert!(Prior::new(f64::NAN, 0.5, 0.5).is_err());
    }

    #[test]
    fn switch_probabilities_follow_prior() {
        let prior = paper_prior();
        let all = AllowedStates::ALL;
        // Leaving state 0: to 1 with 0.05/0.95, to 2 with 0.9/0.95.
        assert_relative_eq!(prior.switch_prob(Forward, Reverse, all), 0.05 / 0.95);
        assert_relative_eq!(prior.switch_prob(Forward, Absent, all), 0.9 / 0.95);
        // Leaving state 2: the other two states have equal prior.
        assert_relative_eq!(prior.switch_prob(Absent, Forward, all), 0.5);
        assert_relative_eq!(prior.switch_prob(Absent, Reverse, all), 0.5);
        // Leaving state 1 back to 0.
        assert_relative_eq!(prior.switch_prob(Reverse, Forward, all), 0.05 / 0.95);
        assert_eq!(prior.switch_prob(Forward, Forward, all), 0.0);
    }

    #[test]
    fn switch_respects_constraints() {
        let prior = paper_prior();
        let no_reverse = AllowedStates::from_states(&[Forward, Absent]).unwrap();
        assert_eq!(prior.switch_prob(Forward, Reverse, no_reverse), 0.0);
        assert_relative_eq!(prior.switch_prob(Forward, Absent, no_reverse), 1.0);
        assert_relative_eq!(prior.switch_prob(Absent, Forward, no_reverse), 1.0);
    }

    #[test]
    fn point_mass_prior_cannot_leave_absent() {
        let prior = Prior::new(0.0, 0.0, 1.0).unwrap();
        assert!(!prior.can_leave(Absent, AllowedStates::ALL));
        assert!(prior.can_leave(Forward, AllowedStates::ALL));
        assert!(prior
            .sample_switch(Absent, AllowedStates::ALL, &mut ChaCha8Rng::seed_from_u64(1))
            .is_none());
    }

    #[test]
    fn sample_switch_matches_probabilities() {
        let prior = paper_prior();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 20_000;
        let mut to_absent = 0;
        for _ in 0..draws {
            let st = prior
                .sample_switch(Forward, AllowedStates::ALL, &mut rng)
                .unwrap();
            assert_ne!(st, Forward);
            if st == Absent {
                to_absent += 1;
            }
        }
        let freq = to_absent as f64 / draws as f64;
        assert!((freq - 0.9 / 0.95).abs() < 0.01, "frequency {freq}");
    }

    #[test]
    fn config_retention_arithmetic() {
        let config = McmcConfig {
            iterations: 10,
            burn_in_fraction: 0.2,
            step_size: 2,
            seed: 0,
        };
        config.validate().unwrap();
        assert_eq!(config.burn_iterations(), 2);
        assert_eq!(config.retained_count(), 4);
        let bad = McmcConfig {
            iterations: 5,
            burn_in_fraction: 0.9,
            step_size: 10,
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn transition_ratio_empty_diff_is_zero() {
        let prior = paper_prior();
        let constraints = Constraints::none(3);
        assert_eq!(log_transition_ratio(&[], &prior, &constraints).unwrap(), 0.0);
    }

    #[test]
    fn transition_ratio_matches_published_example() {
        // Changes: one edge 0 -> 1, another 0 -> 2, under (0.05, 0.05, 0.9).
        // Forward product (0.05/0.95)(0.9/0.95); backward (0.05/0.95)(0.05/0.1).
        let prior = paper_prior();
        let constraints = Constraints::none(5);
        let d = [
            EdgeChange {
                edge: 1,
                old: Forward,
                new: Reverse,
            },
            EdgeChange {
                edge: 2,
                old: Forward,
                new: Absent,
            },
        ];
        let got = log_transition_ratio(&d, &prior, &constraints).unwrap();
        let forward: f64 = (0.05 / 0.95) * (0.9 / 0.95);
        let backward: f64 = (0.05 / 0.95) * (0.05 / 0.1);
        assert_relative_eq!(got, (backward / forward).ln(), epsilon = 1e-12);
    }

    #[test]
    fn transition_ratio_is_zero_for_uniform_prior() {
        let prior = Prior::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        let constraints = Constraints::none(4);
        let d = [
            EdgeChange {
                edge: 0,
                old: Forward,
                new: Absent,
            },
            EdgeChange {
                edge: 3,
                old: Absent,
                new: Reverse,
            },
        ];
        let got = log_transition_ratio(&d, &prior, &constraints).unwrap();
        assert_relative_eq!(got, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn transition_ratio_rejects_zero_prior_target() {
        let prior = Prior::new(0.5, 0.5, 0.0).unwrap();
        let constraints = Constraints::none(1);
        let d = [EdgeChange {
            edge: 0,
            old: Forward,
            new: Absent,
        }];
        assert!(matches!(
            log_transition_ratio(&d, &prior, &constraints),
            Err(Error::ZeroPriorTarget { edge: 0, state: 2 })
        ));
    }

    #[test]
    fn acceptance_is_zero_for_self_move() {
        let prior = paper_prior();
        let constraints = Constraints::none(2);
        let state = ChainState {
            s: vec![Forward, Absent],
            loglik: -12.5,
        };
        let got = log_acceptance(&state, &state.clone(), &[], &prior, &constraints).unwrap();
        assert_eq!(got, 0.0);
    }

    #[test]
    fn acceptance_capped_at_zero() {
        let prior = Prior::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        let constraints = Constraints::none(1);
        let current = ChainState {
            s: vec![Forward],
            loglik: -20.0,
        };
        let proposed = ChainState {
            s: vec![Absent],
            loglik: -10.0,
        };
        let d = state_diff(&current.s, &proposed.s);
        let got = log_acceptance(&current, &proposed, &d, &prior, &constraints).unwrap();
        assert_eq!(got, 0.0);
        // Downhill move: uniform prior and transition cancel, leaving the
        // likelihood difference.
        let got = log_acceptance(&proposed, &current, &d, &prior, &constraints).unwrap();
        assert_relative_eq!(got, -10.0, epsilon = 1e-12);
    }

    #[test]
    fn init_point_mass_prior_gives_all_absent() {
        let g = CandidateGraph::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let data = normal_data(4, 30, 5);
        let prior = Prior::new(0.0, 0.0, 1.0).unwrap();
        let constraints = Constraints::none(4);
        let catalog = build_cycle_catalog(&g).unwrap();
        let mut cache = ScoreCache::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let state =
            init_state(&data, &g, &prior, &constraints, &catalog, &mut cache, &mut rng).unwrap();
        assert_eq!(state.s, vec![Absent; 4]);
    }

    #[test]
    fn init_is_deterministic_and_acyclic() {
        let g = CandidateGraph::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let data = normal_data(4, 30, 5);
        let prior = paper_prior();
        let constraints = Constraints::none(4);
        let catalog = build_cycle_catalog(&g).unwrap();
        let mut states = Vec::new();
        for _ in 0..2 {
            let mut cache = ScoreCache::new();
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let state =
                init_state(&data, &g, &prior, &constraints, &catalog, &mut cache, &mut rng)
                    .unwrap();
            assert!(detect_cycles(&state.s, &catalog).unwrap().is_empty());
            states.push(state);
        }
        assert_eq!(states[0], states[1]);
    }

    #[test]
    fn empty_graph_runs() {
        let g = CandidateGraph::new(2, &[]).unwrap();
        let data = normal_data(2, 20, 3);
        let prior = paper_prior();
        let config = McmcConfig {
            iterations: 10,
            burn_in_fraction: 0.0,
            step_size: 1,
            seed: 1,
        };
        let trace = run(&data, &g, &prior, &config, &Constraints::none(0)).unwrap();
        assert_eq!(trace.len(), 10);
        assert!(trace.samples.iter().all(|smp| smp.s.is_empty()));
    }

    #[test]
    fn proposal_changes_at_least_one_edge_or_nothing() {
        let g = CandidateGraph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let prior = paper_prior();
        let constraints = Constraints::none(3);
        let catalog = build_cycle_catalog(&g).unwrap();
        let current = vec![Absent, Absent, Absent];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut nonempty = 0;
        for _ in 0..200 {
            let (proposed, d) = propose(&current, &g, &prior, &constraints, &catalog, &mut rng)
                .unwrap();
            assert_eq!(state_diff(&current, &proposed), d);
            assert!(detect_cycles(&proposed, &catalog).unwrap().is_empty());
            if !d.is_empty() {
                nonempty += 1;
            }
        }
        // Starting from all-absent no repair can revert a switch, so every
        // proposal changes something.
        assert_eq!(nonempty, 200);
    }

    #[test]
    fn single_edge_uniform_prior_proposal_split() {
        let g = CandidateGraph::new(2, &[(0, 1)]).unwrap();
        let prior = Prior::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0).unwrap();
        let constraints = Constraints::none(1);
        let catalog = build_cycle_catalog(&g).unwrap();
        let current = vec![Forward];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut to_reverse = 0;
        let draws = 10_000;
        for _ in 0..draws {
            let (proposed, d) =
                propose(&current, &g, &prior, &constraints, &catalog, &mut rng).unwrap();
            assert_eq!(d.len(), 1);
            assert_ne!(proposed[0], Forward);
            if proposed[0] == Reverse {
                to_reverse += 1;
            }
        }
        let freq = to_reverse as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.02, "frequency {freq}");
    }

    #[test]
    fn run_records_expected_iterations() {
        let g = CandidateGraph::new(2, &[(0, 1)]).unwrap();
        let data = normal_data(2, 20, 3);
        let prior = paper_prior();
        let config = McmcConfig {
            iterations: 10,
            burn_in_fraction: 0.2,
            step_size: 2,
            seed: 4,
        };
        let trace = run(&data, &g, &prior, &config, &Constraints::none(1)).unwrap();
        let iters: Vec<usize> = trace.samples.iter().map(|smp| smp.iteration).collect();
        assert_eq!(iters, vec![4, 6, 8, 10]);
    }

    #[test]
    fn run_is_deterministic() {
        let g = CandidateGraph::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let data = normal_data(4, 40, 8);
        let prior = paper_prior();
        let config = McmcConfig {
            iterations: 500,
            burn_in_fraction: 0.2,
            step_size: 5,
            seed: 99,
        };
        let constraints = Constraints::none(4);
        let a = run(&data, &g, &prior, &config, &constraints).unwrap();
        let b = run(&data, &g, &prior, &config, &constraints).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.loglik.to_bits(), y.loglik.to_bits());
        }
    }

    #[test]
    fn run_respects_constraints() {
        let g = CandidateGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let data = normal_data(3, 40, 2);
        let prior = paper_prior();
        let mut constraints = Constraints::none(2);
        // T2 may never be a parent of T1.
        constraints.forbid_parent(&g, 1, 0).unwrap();
        let config = McmcConfig {
            iterations: 400,
            burn_in_fraction: 0.0,
            step_size: 1,
            seed: 12,
        };
        let trace = run(&data, &g, &prior, &config, &constraints).unwrap();
        assert!(trace
            .samples
            .iter()
            .all(|smp| smp.s[0] != Reverse));
    }

    #[test]
    fn posterior_from_trace_frequencies() {
        let g = CandidateGraph::new(2, &[(0, 1)]).unwrap();
        let trace = Trace {
            samples: vec![
                TraceSample {
                    iteration: 1,
                    loglik: -1.0,
                    s: vec![Forward],
                },
                TraceSample {
                    iteration: 2,
                    loglik: -1.0,
                    s: vec![Reverse],
                },
            ],
        };
        let table = posterior_from_trace(&trace, &g).unwrap();
        assert_eq!(table.probs()[0], [0.5, 0.5, 0.0]);
        assert_relative_eq!(table.presence(0), 1.0);
        assert!(posterior_from_trace(&Trace::default(), &g).is_err());
    }

    #[test]
    fn posterior_point_mass_rows() {
        let g = CandidateGraph::new(2, &[(0, 1)]).unwrap();
        let trace = Trace {
            samples: (0..4)
                .map(|i| TraceSample {
                    iteration: i + 1,
                    loglik: -1.0,
                    s: vec![Absent],
                })
                .collect(),
        };
        let table = posterior_from_trace(&trace, &g).unwrap();
        assert_eq!(table.probs()[0], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn posterior_table_validation() {
        let edges = vec![CandidateEdge { lo: 0, hi: 1 }];
        assert!(PosteriorTable::from_rows(edges.clone(), vec![[0.5, 0.4, 0.2]]).is_err());
        assert!(PosteriorTable::from_rows(edges.clone(), vec![[1.2, -0.2, 0.0]]).is_err());
        assert!(PosteriorTable::from_rows(edges, vec![[0.25, 0.25, 0.5]]).is_ok());
    }
}
