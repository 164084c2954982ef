//! Replicate experiment runner: a (sample size) x (signal strength) grid of
//! simulate-infer-evaluate replicates with deterministically derived seeds,
//! aggregated into a mean/sd report.

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::files::fmt_f64;
use crate::metrics::{mse1, mse2, mse3, precision_power};
use crate::sampler::{posterior_from_trace, run, McmcConfig, Prior};
use crate::topology::{lookup, Topology};

/// Declarative experiment grid, parsed from a TOML file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: String,
    /// Sample sizes (key `n`, alias `N`).
    #[serde(alias = "N")]
    pub n: Vec<usize>,
    pub beta: Vec<f64>,
    pub replicates: usize,
    pub prior: [f64; 3],
    pub iterations: usize,
    pub burn_in: f64,
    pub step_size: usize,
    /// Master seed; every replicate's data and chain seeds derive from it.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Parse(format!("experiment config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.beta.is_empty() {
            return Err(Error::InvalidConfig(
                "the n and beta lists must be nonempty".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        Prior::new(self.prior[0], self.prior[1], self.prior[2])?;
        self.mcmc_config(0).validate()?;
        Ok(())
    }

    pub fn prior(&self) -> Result<Prior> {
        Prior::new(self.prior[0], self.prior[1], self.prior[2])
    }

    pub fn mcmc_config(&self, seed: u64) -> McmcConfig {
        McmcConfig {
            iterations: self.iterations,
            burn_in_fraction: self.burn_in,
            step_size: self.step_size,
            seed,
        }
    }
}

/// One splitmix64 step.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed stream: chains splitmix64 through the tag sequence.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = master;
    let mut out = splitmix64(&mut state);
    for &tag in tags {
        state = out ^ tag;
        out = splitmix64(&mut state);
    }
    out
}

/// Mean and sample standard deviation (0 for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStat {
    pub mean: f64,
    pub sd: f64,
}

pub fn summarize(values: &[f64]) -> SummaryStat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    SummaryStat { mean, sd }
}

/// Metrics from one simulate-infer-evaluate replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateMetrics {
    pub replicate: usize,
    pub data_seed: u64,
    pub chain_seed: u64,
    pub mse1: f64,
    pub mse2: f64,
    pub mse3: f64,
    pub precision: f64,
    pub power: f64,
}

/// Aggregates for one (topology, n, beta) grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellReport {
    pub topology: String,
    pub n: usize,
    pub beta: f64,
    pub per_replicate: Vec<ReplicateMetrics>,
    pub mse1: SummaryStat,
    pub mse2: SummaryStat,
    pub mse3: SummaryStat,
    pub precision: SummaryStat,
    pub power: SummaryStat,
}

/// Full experiment output: the config that produced it plus one report per
/// grid cell in (n, beta) order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
}

impl EvalReport {
    /// One CSV row per grid cell with mean/sd columns per metric.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "topology,n,beta,replicates,mse1_mean,mse1_sd,mse2_mean,mse2_sd,\
             mse3_mean,mse3_sd,precision_mean,precision_sd,power_mean,power_sd"
        )?;
        for cell in &self.cells {
            let stats = [cell.mse1, cell.mse2, cell.mse3, cell.precision, cell.power];
            let mut fields = vec![
                cell.topology.clone(),
                cell.n.to_string(),
                fmt_f64(cell.beta),
                cell.per_replicate.len().to_string(),
            ];
            for s in stats {
                fields.push(fmt_f64(s.mean));
                fields.push(fmt_f64(s.sd));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

fn run_replicate(
    topo: &Topology,
    config: &ExperimentConfig,
    n: usize,
    beta: f64,
    replicate: usize,
    cell: usize,
) -> Result<ReplicateMetrics> {
    let data_seed = derive_seed(config.seed, &[cell as u64, replicate as u64, 0]);
    let chain_seed = derive_seed(config.seed, &[cell as u64, replicate as u64, 1]);
    let g = topo.candidate_graph()?;
    let expected = topo.expected_probabilities()?;
    let is_true = topo.true_edge_flags(&g);
    let data = topo.simulate(n, beta, data_seed)?;
    let prior = config.prior()?;
    let constraints = crate::graph::Constraints::none(g.edge_count());
    let trace = run(&data, &g, &prior, &config.mcmc_config(chain_seed), &constraints)?;
    let posterior = posterior_from_trace(&trace, &g)?;
    let (precision, power) = precision_power(&posterior, &is_true, 0.5)?;
    Ok(ReplicateMetrics {
        replicate,
        data_seed,
        chain_seed,
        mse1: mse1(&expected, &posterior)?,
        mse2: mse2(&expected, &posterior)?,
        mse3: mse3(&expected, &posterior, g.node_count())?,
        precision,
        power,
    })
}

/// Runs the full grid with up to `jobs` worker threads. Results are
/// deterministic for a fixed config regardless of `jobs`: every replicate's
/// seeds derive from (master seed, cell index, replicate index), and
/// aggregation runs in grid order.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<EvalReport> {
    config.validate()?;
    if jobs == 0 {
        return Err(Error::InvalidConfig("jobs must be at least 1".into()));
    }
    let topo = lookup(&config.topology).ok_or_else(|| {
        Error::InvalidConfig(format!("unknown topology {:?}", config.topology))
    })?;
    let mut tasks = Vec::new();
    let mut cell_keys = Vec::new();
    for &n in &config.n {
        for &beta in &config.beta {
            let cell = cell_keys.len();
            cell_keys.push((n, beta));
            for replicate in 0..config.replicates {
                tasks.push((cell, replicate, n, beta));
            }
        }
    }
    let cursor = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<ReplicateMetrics>>>> =
        Mutex::new((0..tasks.len()).map(|_| None).collect());
    let workers = jobs.min(tasks.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= tasks.len() {
                    break;
                }
                let (cell, replicate, n, beta) = tasks[i];
                let outcome = run_replicate(topo, config, n, beta, replicate, cell);
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });
    let collected = results.into_inner().unwrap();
    let mut per_cell: Vec<Vec<ReplicateMetrics>> = vec![Vec::new(); cell_keys.len()];
    for (slot, (cell, ..)) in collected.into_iter().zip(&tasks) {
        let metrics = slot.expect("every task ran")?;
        per_cell[*cell].push(metrics);
    }
    let cells = cell_keys
        .iter()
        .zip(per_cell)
        .map(|(&(n, beta), mut reps)| {
            reps.sort_by_key(|r| r.replicate);
            let pick = |f: fn(&ReplicateMetrics) -> f64| -> SummaryStat {
                summarize(&reps.iter().map(f).collect::<Vec<_>>())
            };
            CellReport {
                topology: topo.name().to_string(),
                n,
                beta,
                mse1: pick(|r| r.mse1),
                mse2: pick(|r| r.mse2),
                mse3: pick(|r| r.mse3),
                precision: pick(|r| r.precision),
                power: pick(|r| r.power),
                per_replicate: reps,
            }
        })
        .collect();
    Ok(EvalReport {
        config: config.clone(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            topology: "M1".into(),
            n: vec![40],
            beta: vec![1.0],
            replicates: 2,
            prior: [0.05, 0.05, 0.9],
            iterations: 600,
            burn_in: 0.25,
            step_size: 5,
            seed: 9,
        }
    }

    #[test]
    fn toml_round_trip_with_alias() {
        let text = r#"
            topology = "GN4"
            N = [100, 600]
            beta = [0.2, 1.0]
            replicates = 3
            prior = [0.05, 0.05, 0.9]
            iterations = 30000
            burn_in = 0.2
            step_size = 120
            seed = 17
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(config.topology, "GN4");
        assert_eq!(config.n, vec![100, 600]);
        assert_eq!(config.beta, vec![0.2, 1.0]);
        assert_eq!(config.seed, 17);
    }

    #[test]
    fn toml_rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("topology = \"M1\"").is_err());
        let mut config = tiny_config();
        config.replicates = 0;
        assert!(config.validate().is_err());
        let mut config = tiny_config();
        config.prior = [0.5, 0.5, 0.5];
        assert!(config.validate().is_err());
        let mut config = tiny_config();
        config.burn_in = 1.0;
        assert!(config.validate().is_err());
    }

    #[test]
    fn splitmix_is_deterministic_and_spreads() {
        let mut a = 42;
        let mut b = 42;
        assert_eq!(splitmix64(&mut a), splitmix64(&mut b));
        let outputs: std::collections::HashSet<u64> = (0..1000)
            .map(|s| derive_seed(s, &[1, 2]))
            .collect();
        assert_eq!(outputs.len(), 1000);
    }

    #[test]
    fn derived_seeds_differ_across_tags() {
        let a = derive_seed(7, &[0, 0, 0]);
        let b = derive_seed(7, &[0, 0, 1]);
        let c = derive_seed(7, &[0, 1, 0]);
        let d = derive_seed(8, &[0, 0, 0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn report_shape_and_seed_wiring() {
        let report = run_experiment(&tiny_config(), 1).unwrap();
        assert_eq!(report.cells.len(), 1);
        let cell = &report.cells[0];
        assert_eq!(cell.topology, "M1");
        assert_eq!(cell.n, 40);
        assert_eq!(cell.per_replicate.len(), 2);
        assert_ne!(
            cell.per_replicate[0].data_seed,
            cell.per_replicate[1].data_seed
        );
        assert_ne!(
            cell.per_replicate[0].data_seed,
            cell.per_replicate[0].chain_seed
        );
        assert!(cell.mse1.mean >= 0.0);
        assert!(cell.mse1.sd >= 0.0);
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let mut config = tiny_config();
        config.n = vec![30, 40];
        let sequential = run_experiment(&config, 1).unwrap();
        let threaded = run_experiment(&config, 4).unwrap();
        assert_eq!(sequential, threaded);
    }

    #[test]
    fn single_replicate_has_zero_sd() {
        let mut config = tiny_config();
        config.replicates = 1;
        let report = run_experiment(&config, 1).unwrap();
        assert_eq!(report.cells[0].mse1.sd, 0.0);
    }

    #[test]
    fn unknown_topology_is_rejected() {
        let mut config = tiny_config();
        config.topology = "GN99".into();
        assert!(matches!(
            run_experiment(&config, 1),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn csv_report_layout() {
        let report = run_experiment(&tiny_config(), 2).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("topology,n,beta,replicates,mse1_mean"));
        assert!(lines[1].starts_with("M1,40,"));
        assert_eq!(lines[1].split(',').count(), 14);
    }
}
