//! Linear-Gaussian graph log-likelihood with plug-in ML parameters.
//!
//! Each node is regressed on an intercept plus its parents by ordinary least
//! squares; the residual variance uses the maximum-likelihood divisor N so
//! that Markov-equivalent structures score identically. The graph score is
//! the sum of per-node log-likelihoods and is cached by (node, parent set),
//! so rescoring after a proposal only refits nodes whose parents changed.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::files::fmt_f64;
use crate::graph::{parent_sets, CandidateGraph, EdgeStateVector, NodeId};

/// Residual variances below this are treated as degenerate (a node predicted
/// exactly by its parents).
pub const MIN_SIGMA2: f64 = 1e-12;

/// N observations of b real-valued nodes, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n: usize,
}

impl DataMatrix {
    /// Validates shape (N >= 2, equal column lengths), finiteness, and
    /// positive sample variance in every column.
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::InvalidData(format!(
                "{} column names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(Error::InvalidData("data has no columns".into()));
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidData(format!(
                    "column {} has {} values, expected {}",
                    names[j],
                    col.len(),
                    n
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "column {} contains a non-finite value",
                    names[j]
                )));
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            if var <= 0.0 {
                return Err(Error::InvalidData(format!(
                    "column {} has zero sample variance",
                    names[j]
                )));
            }
        }
        Ok(Self { names, columns, n })
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// Parses a CSV with a header row of node names and one observation per
    /// row; every field must be a finite 64-bit float.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let names: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.to_string())
            .collect();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for record in rdr.records() {
            let record = record?;
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::Parse(format!(
                        "row {}, column {}: {:?} is not a number",
                        columns[j].len() + 2,
                        names[j],
                        field
                    ))
                })?;
                columns[j].push(v);
            }
        }
        Self::new(names, columns)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Writes CSV with floats at 17 significant digits (exact round trip).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.names.join(","))?;
        for i in 0..self.n {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|col| fmt_f64(col[i]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Ordinary-least-squares fit of one node on an intercept plus its parents.
#[derive(Debug, Clone)]
pub struct NodeFit {
    pub node: NodeId,
    pub parents: Vec<NodeId>,
    /// Intercept first, then one coefficient per parent in `parents` order.
    pub coefficients: Vec<f64>,
    /// Residual variance with the ML divisor N.
    pub sigma2: f64,
    /// -N/2 * (log(2 * pi * sigma2) + 1).
    pub loglik: f64,
}

/// Fits `node` on an intercept plus `parents` by least squares (normal
/// equations with a Cholesky solve) and returns the plug-in log-likelihood.
pub fn node_log_likelihood(
    data: &DataMatrix,
    node: NodeId,
    parents: &[NodeId],
) -> Result<NodeFit> {
    let b = data.n_cols();
    let n = data.n_rows();
    if node >= b {
        return Err(Error::InvalidData(format!(
            "node index {} out of range for {} columns",
            node + 1,
            b
        )));
    }
    let mut sorted = parents.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted.iter().any(|&p| p == node || p >= b) {
        return Err(Error::InvalidData(format!(
            "parents of node {} must be distinct other nodes",
            node + 1
        )));
    }
    let p = parents.len();
    if p + 1 >= n {
        return Err(Error::InvalidData(format!(
            "node {} has {} parents but only {} observations",
            node + 1,
            p,
            n
        )));
    }

    // Design matrix: intercept column, then parent columns in given order.
    let mut x = DMatrix::zeros(n, p + 1);
    for i in 0..n {
        x[(i, 0)] = 1.0;
    }
    for (k, &parent) in parents.iter().enumerate() {
        let col = data.column(parent);
        for i in 0..n {
            x[(i, k + 1)] = col[i];
        }
    }
    let y = DVector::from_column_slice(data.column(node));

    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;
    let max_diag = (0..p + 1).map(|i| xtx[(i, i)]).fold(0.0f64, f64::max);
    let chol = Cholesky::new(xtx).ok_or(Error::RankDeficient { node })?;
    // A tiny pivot means collinear columns that survived rounding.
    for i in 0..p + 1 {
        let l_ii = chol.l_dirty()[(i, i)];
        if l_ii * l_ii <= 1e-10 * max_diag {
            return Err(Error::RankDeficient { node });
        }
    }
    let beta = chol.solve(&xty);

    let residuals = &y - &x * &beta;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma2 = rss / n as f64;
    if sigma2 < MIN_SIGMA2 {
        return Err(Error::DegenerateVariance { node, sigma2 });
    }
    let loglik = -(n as f64) / 2.0 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    Ok(NodeFit {
        node,
        parents: parents.to_vec(),
        coefficients: beta.iter().copied().collect(),
        sigma2,
        loglik,
    })
}

/// Per-chain node-score cache keyed by (node, sorted parent set).
#[derive(Debug, Default, Clone)]
pub struct ScoreCache {
    fits: HashMap<(NodeId, Vec<NodeId>), f64>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    /// Cached node log-likelihood; `parents` must be sorted ascending.
    pub fn get_or_compute(
        &mut self,
        data: &DataMatrix,
        node: NodeId,
        parents: &[NodeId],
    ) -> Result<f64> {
        debug_assert!(parents.windows(2).all(|w| w[0] < w[1]));
        if let Some(&ll) = self.fits.get(&(node, parents.to_vec())) {
            return Ok(ll);
        }
        let ll = node_log_likelihood(data, node, parents)?.loglik;
        self.fits.insert((node, parents.to_vec()), ll);
        Ok(ll)
    }
}

/// Sum of node log-likelihoods under the parent sets induced by `s`.
/// The caller guarantees acyclicity; the scorer does not re-check.
pub fn graph_log_likelihood(
    data: &DataMatrix,
    g: &CandidateGraph,
    s: &EdgeStateVector,
    cache: &mut ScoreCache,
) -> Result<f64> {
    if data.n_cols() != g.node_count() {
        return Err(Error::InvalidData(format!(
            "data has {} columns but graph has {} nodes",
            data.n_cols(),
            g.node_count()
        )));
    }
    let parents = parent_sets(g, s)?;
    let mut total = 0.0;
    for (node, parent_set) in parents.iter().enumerate() {
        total += cache.get_or_compute(data, node, parent_set)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeState;
    use approx::assert_relative_eq;

    fn data2(a: Vec<f64>, b: Vec<f64>) -> DataMatrix {
        DataMatrix::new(vec!["T1".into(), "T2".into()], vec![a, b]).unwrap()
    }

    #[test]
    fn intercept_only_closed_form() {
        let data = data2(vec![-1.0, 1.0, -1.0, 1.0], vec![0.5, 1.0, 1.5, 2.0]);
        let fit = node_log_likelihood(&data, 0, &[]).unwrap();
        assert_relative_eq!(fit.coefficients[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(fit.sigma2, 1.0, epsilon = 1e-12);
        let expect = -2.0 * ((2.0 * std::f64::consts::PI).ln() + 1.0);
        assert_relative_eq!(fit.loglik, expect, epsilon = 1e-12);
        assert_relative_eq!(fit.loglik, -5.67575, epsilon = 1e-4);
    }

    #[test]
    fn simple_regression_closed_form() {
        // y = 2 + x with residuals (-1, -1, 1, 1): beta = (2, 1), RSS = 4.
        let data = data2(vec![-1.0, 1.0, -1.0, 1.0], vec![0.0, 2.0, 2.0, 4.0]);
        let fit = node_log_likelihood(&data, 1, &[0]).unwrap();
        assert_relative_eq!(fit.coefficients[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.sigma2, 1.0, epsilon = 1e-12);
        let expect = -2.0 * ((2.0 * std::f64::consts::PI).ln() + 1.0);
        assert_relative_eq!(fit.loglik, expect, epsilon = 1e-12);
    }

    #[test]
    fn exact_copy_is_degenerate() {
        let data = data2(vec![-1.0, 0.5, 2.0, 3.0], vec![1.0, 2.5, 4.0, 5.0]);
        let err = node_log_likelihood(&data, 1, &[0]);
        assert!(matches!(err, Err(Error::DegenerateVariance { node: 1, .. })));
    }

    #[test]
    fn duplicate_parent_columns_are_rank_deficient() {
        let data = DataMatrix::new(
            vec!["T1".into(), "T2".into(), "T3".into()],
            vec![
                vec![-1.0, 0.5, 2.0, 3.0, -0.7],
                vec![-1.0, 0.5, 2.0, 3.0, -0.7],
                vec![0.3, -0.2, 1.9, 2.2, 0.4],
            ],
        )
        .unwrap();
        let err = node_log_likelihood(&data, 2, &[0, 1]);
        assert!(matches!(err, Err(Error::RankDeficient { node: 2 })));
    }

    #[test]
    fn parent_validation() {
        let data = data2(vec![-1.0, 1.0, 2.0], vec![0.0, 2.0, 1.0]);
        assert!(node_log_likelihood(&data, 1, &[1]).is_err());
        assert!(node_log_likelihood(&data, 1, &[0, 0]).is_err());
        assert!(node_log_likelihood(&data, 1, &[5]).is_err());
        assert!(node_log_likelihood(&data, 5, &[]).is_err());
    }

    #[test]
    fn too_many_parents_for_sample_size() {
        let data = data2(vec![-1.0, 1.0], vec![0.0, 2.0]);
        assert!(node_log_likelihood(&data, 1, &[0]).is_err());
    }

    #[test]
    fn adding_a_parent_never_hurts() {
        let data = data2(
            vec![-1.2, 0.4, 1.7, -0.3, 0.9, -2.0],
            vec![-0.9, 0.8, 1.1, 0.2, 1.4, -1.6],
        );
        let without = node_log_likelihood(&data, 1, &[]).unwrap().loglik;
        let with = node_log_likelihood(&data, 1, &[0]).unwrap().loglik;
        assert!(with >= without - 1e-12);
    }

    #[test]
    fn graph_score_all_absent_is_sum_of_marginals() {
        let g = CandidateGraph::new(2, &[(0, 1)]).unwrap();
        let data = data2(
            vec![-1.2, 0.4, 1.7, -0.3],
            vec![-0.9, 0.8, 1.1, 0.2],
        );
        let mut cache = ScoreCache::new();
        let total =
            graph_log_likelihood(&data, &g, &vec![EdgeState::Absent; 1], &mut cache).unwrap();
        let expect = node_log_likelihood(&data, 0, &[]).unwrap().loglik
            + node_log_likelihood(&data, 1, &[]).unwrap().loglik;
        assert_eq!(total, expect);
    }

    #[test]
    fn cache_is_transparent_and_reused() {
        let g = CandidateGraph::new(2, &[(0, 1)]).unwrap();
        let data = data2(
            vec![-1.2, 0.4, 1.7, -0.3, 2.2],
            vec![-0.9, 0.8, 1.1, 0.2, -1.0],
        );
        let s = vec![EdgeState::Forward];
        let mut cache = ScoreCache::new();
        let first = graph_log_likelihood(&data, &g, &s, &mut cache).unwrap();
        let cached_entries = cache.len();
        let second = graph_log_likelihood(&data, &g, &s, &mut cache).unwrap();
        assert_eq!(first.to_bits(), second.to_bits());
        assert_eq!(cache.len(), cached_entries);
        let mut fresh = ScoreCache::new();
        let third = graph_log_likelihood(&data, &g, &s, &mut fresh).unwrap();
        assert_eq!(first.to_bits(), third.to_bits());
    }

    #[test]
    fn graph_score_rejects_column_mismatch() {
        let g = CandidateGraph::new(3, &[(0, 1)]).unwrap();
        let data = data2(vec![-1.0, 1.0], vec![0.0, 2.0]);
        let mut cache = ScoreCache::new();
        assert!(graph_log_likelihood(&data, &g, &vec![EdgeState::Absent], &mut cache).is_err());
    }

    #[test]
    fn data_matrix_validation() {
        assert!(DataMatrix::new(vec!["a".into()], vec![vec![1.0]]).is_err());
        assert!(DataMatrix::new(vec!["a".into()], vec![vec![1.0, 1.0]]).is_err());
        assert!(DataMatrix::new(vec!["a".into()], vec![vec![1.0, f64::NAN]]).is_err());
        assert!(DataMatrix::new(vec!["a".into(), "b".into()], vec![vec![1.0, 2.0]]).is_err());
        assert!(DataMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![1.0, 2.0, 3.0]]
        )
        .is_err());
        assert!(DataMatrix::new(vec![], vec![]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = data2(
            vec![-1.234567890123456, 0.4, 1.0 / 3.0, -0.3],
            vec![-0.9, 0.8123456789012345, 1.1, 0.2],
        );
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = DataMatrix::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back.names(), data.names());
        for j in 0..2 {
            for i in 0..4 {
                assert_eq!(back.column(j)[i].to_bits(), data.column(j)[i].to_bits());
            }
        }
    }

    #[test]
    fn csv_parse_errors() {
        let bad = "a,b\n1.0,x\n2.0,3.0\n";
        assert!(DataMatrix::from_csv_reader(bad.as_bytes()).is_err());
        let ragged = "a,b\n1.0\n2.0,3.0\n";
        assert!(DataMatrix::from_csv_reader(ragged.as_bytes()).is_err());
    }
}
