//! Posterior-quality metrics: edge-wise and aggregate mean squared errors
//! against equivalence-class expectations, plus cutoff-based precision and
//! power for edge presence.

use crate::error::{Error, Result};
use crate::oracle::ExpectedProbabilities;
use crate::sampler::PosteriorTable;

fn check_row(label: &str, row: &[f64; 3]) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidData(format!(
            "{label} row {row:?} is not a probability vector"
        )));
    }
    Ok(())
}

/// Edge-wise mean squared error: (1/3) sum over the three states of the
/// squared deviation between expected and posterior probability.
pub fn emse(expected: &[f64; 3], posterior: &[f64; 3]) -> Result<f64> {
    check_row("expected", expected)?;
    check_row("posterior", posterior)?;
    let sum: f64 = expected
        .iter()
        .zip(posterior)
        .map(|(q, p)| (q - p) * (q - p))
        .sum();
    Ok(sum / 3.0)
}

fn check_alignment(expected: &ExpectedProbabilities, posterior: &PosteriorTable) -> Result<()> {
    if expected.edges() != posterior.edges() {
        return Err(Error::InvalidData(
            "expected and posterior tables cover different edge sets".into(),
        ));
    }
    Ok(())
}

/// Per-edge eMSE values, aligned with the tables' edge order.
pub fn emse_per_edge(
    expected: &ExpectedProbabilities,
    posterior: &PosteriorTable,
) -> Result<Vec<f64>> {
    check_alignment(expected, posterior)?;
    expected
        .rows()
        .iter()
        .zip(posterior.probs())
        .map(|(q, p)| emse(q, p))
        .collect()
}

/// eMSE averaged over all candidate edges.
pub fn mse1(expected: &ExpectedProbabilities, posterior: &PosteriorTable) -> Result<f64> {
    let per_edge = emse_per_edge(expected, posterior)?;
    Ok(per_edge.iter().sum::<f64>() / per_edge.len() as f64)
}

/// Mean squared error of the directed-presence probabilities over the true
/// edges (the rows whose expected absent probability is zero): the absent
/// state is excluded and the normalizer is twice the true-edge count.
pub fn mse2(expected: &ExpectedProbabilities, posterior: &PosteriorTable) -> Result<f64> {
    check_alignment(expected, posterior)?;
    let mut sum = 0.0;
    let mut true_edges = 0usize;
    for (e, (q, p)) in expected.rows().iter().zip(posterior.probs()).enumerate() {
        if expected.is_true_edge(e) {
            true_edges += 1;
            sum += (q[0] - p[0]) * (q[0] - p[0]) + (q[1] - p[1]) * (q[1] - p[1]);
        }
    }
    if true_edges == 0 {
        return Err(Error::InvalidData(
            "no true edges: every expected row has nonzero absent probability".into(),
        ));
    }
    Ok(sum / (2.0 * true_edges as f64))
}

/// Mean squared error of the directed-presence probabilities over all
/// b^2 - b ordered node pairs: candidate edges contribute their deviations,
/// non-candidate pairs contribute zero on both sides.
pub fn mse3(
    expected: &ExpectedProbabilities,
    posterior: &PosteriorTable,
    b: usize,
) -> Result<f64> {
    check_alignment(expected, posterior)?;
    if b < 2 {
        return Err(Error::InvalidData(format!(
            "node count must be at least 2, got {b}"
        )));
    }
    if let Some(edge) = expected.edges().iter().find(|e| e.hi >= b) {
        return Err(Error::InvalidData(format!(
            "edge ({}, {}) does not fit in a {b}-node graph",
            edge.lo + 1,
            edge.hi + 1
        )));
    }
    let mut sum = 0.0;
    for (q, p) in expected.rows().iter().zip(posterior.probs()) {
        sum += (q[0] - p[0]) * (q[0] - p[0]) + (q[1] - p[1]) * (q[1] - p[1]);
    }
    Ok(sum / (b * b - b) as f64)
}

/// Inferred edges are those with presence probability P0 + P1 above the
/// cutoff. Precision is the true fraction of inferred edges (1 when none
/// are inferred); power is the inferred fraction of true edges.
pub fn precision_power(
    posterior: &PosteriorTable,
    is_true: &[bool],
    cutoff: f64,
) -> Result<(f64, f64)> {
    if is_true.len() != posterior.edge_count() {
        return Err(Error::InvalidData(format!(
            "{} truth flags for {} edges",
            is_true.len(),
            posterior.edge_count()
        )));
    }
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "cutoff must lie in (0, 1), got {cutoff}"
        )));
    }
    let total_true = is_true.iter().filter(|&&t| t).count();
    if total_true == 0 {
        return Err(Error::InvalidData("no true edges to recover".into()));
    }
    let mut inferred = 0usize;
    let mut hits = 0usize;
    for (e, &t) in is_true.iter().enumerate() {
        if posterior.presence(e) > cutoff {
            inferred += 1;
            if t {
                hits += 1;
            }
        }
    }
    let precision = if inferred == 0 {
        1.0
    } else {
        hits as f64 / inferred as f64
    };
    let power = hits as f64 / total_true as f64;
    Ok((precision, power))
}
