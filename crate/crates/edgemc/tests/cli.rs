//! End-to-end command-line checks: exit codes, file round trips,
//! determinism, and the cycle listing format.

use std::path::Path;
use std::process::{Command, Output};

fn edgemc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edgemc"))
        .args(args)
        .env_remove("EDGEMC_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn exit_codes_follow_the_contract() {
    assert_eq!(edgemc(&["--help"]).status.code(), Some(0));
    assert_eq!(edgemc(&["--version"]).status.code(), Some(0));
    // Usage errors exit 1: unknown flag, unknown subcommand, bad flag value,
    // and semantic usage errors such as an unknown topology.
    assert_eq!(edgemc(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(edgemc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        edgemc(&["simulate", "--topology", "M1", "--n", "10", "--beta", "oops"]).status.code(),
        Some(1)
    );
    assert_eq!(
        edgemc(&["simulate", "--topology", "nope", "--n", "10", "--beta", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        edgemc(&["cycles", "--topology", "GN4", "--state", "0301"]).status.code(),
        Some(1)
    );
    assert_eq!(
        edgemc(&["cycles", "--topology", "GN4", "--state", "021"]).status.code(),
        Some(1)
    );
    // Runtime errors exit 2: a missing input file.
    assert_eq!(
        edgemc(&["infer", "/nonexistent/data.csv", "--fully-connected"]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_infer_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let graph = dir.path().join("graph.txt");
    let posterior = dir.path().join("posterior.csv");
    let trace = dir.path().join("trace.csv");
    let scores = dir.path().join("scores.csv");
    write(&graph, "1 2\n1 3\n2 4\n3 4\n");

    let sim = edgemc(&[
        "simulate", "--topology", "GN4", "--n", "300", "--beta", "1", "--seed", "11",
        "--out", data.to_str().unwrap(),
    ]);
    assert!(sim.status.success());
    let header = std::fs::read_to_string(&data).unwrap();
    assert!(header.starts_with("T1,T2,T3,T4\n"), "unexpected data header");
    assert_eq!(header.lines().count(), 301);

    let infer = edgemc(&[
        "infer", data.to_str().unwrap(), graph.to_str().unwrap(),
        "--iterations", "6000", "--step-size", "24", "--seed", "3",
        "--trace", trace.to_str().unwrap(),
        "--out", posterior.to_str().unwrap(),
    ]);
    assert!(infer.status.success(), "{}", String::from_utf8_lossy(&infer.stderr));
    let posterior_text = std::fs::read_to_string(&posterior).unwrap();
    assert!(posterior_text.starts_with("edge_lo,edge_hi,p_forward,p_reverse,p_absent\n"));
    assert_eq!(posterior_text.lines().count(), 5);
    let trace_text = std::fs::read_to_string(&trace).unwrap();
    assert!(trace_text.starts_with("iteration,loglik,state\n"));
    // 6000 iterations, 20% burn-in, thinning 24: 200 retained states.
    assert_eq!(trace_text.lines().count(), 201);

    let eval = edgemc(&[
        "evaluate", "--posterior", posterior.to_str().unwrap(), "--topology", "GN4",
        "--out", scores.to_str().unwrap(),
    ]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let scores_text = std::fs::read_to_string(&scores).unwrap();
    assert!(scores_text.starts_with("edge_lo,edge_hi,emse\n"));
    assert!(scores_text.contains("\nmse1,mse2,mse3,precision,power\n"));
    // Strong signal and N = 300: the true skeleton must be fully recovered.
    let summary = scores_text.lines().last().unwrap();
    let fields: Vec<&str> = summary.split(',').collect();
    assert_eq!(fields.len(), 5);
    let precision: f64 = fields[3].parse().unwrap();
    let power: f64 = fields[4].parse().unwrap();
    assert_eq!((precision, power), (1.0, 1.0), "summary row: {summary}");
}

#[test]
fn same_seed_reproduces_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let run = |out: &Path| {
        let status = edgemc(&[
            "infer", data.to_str().unwrap(), "--fully-connected",
            "--iterations", "4000", "--step-size", "20", "--seed", "99",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(status.status.success());
        std::fs::read(out).unwrap()
    };
    assert!(edgemc(&[
        "simulate", "--topology", "M1", "--n", "150", "--beta", "1", "--seed", "4",
        "--out", data.to_str().unwrap(),
    ])
    .status
    .success());
    let first = run(&dir.path().join("a.csv"));
    let second = run(&dir.path().join("b.csv"));
    assert_eq!(first, second);
}

#[test]
fn constraints_zero_out_forbidden_orientations() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let graph = dir.path().join("graph.txt");
    let constraints = dir.path().join("constraints.txt");
    let dag = dir.path().join("dag.txt");
    write(&graph, "1 2\n");
    write(&dag, "1 2\n");
    // Node 1 may not be a parent of node 2, despite the simulated signal.
    write(&constraints, "1 2 forbid parent\n");
    assert!(edgemc(&[
        "simulate", "--dag", dag.to_str().unwrap(), "--n", "300", "--beta", "1",
        "--seed", "8", "--out", data.to_str().unwrap(),
    ])
    .status
    .success());
    let out = dir.path().join("posterior.csv");
    let infer = edgemc(&[
        "infer", data.to_str().unwrap(), graph.to_str().unwrap(),
        "--constraints", constraints.to_str().unwrap(),
        "--iterations", "4000", "--step-size", "20", "--seed", "2",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(infer.status.success(), "{}", String::from_utf8_lossy(&infer.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    let p_forward: f64 = fields[2].parse().unwrap();
    assert_eq!(p_forward, 0.0, "forbidden orientation has mass: {row}");
}

#[test]
fn oracle_lists_class_expectations_and_exact_posterior() {
    let class = stdout_of(&edgemc(&["oracle", "--topology", "GN4"]));
    assert!(class.starts_with("edge_lo,edge_hi,p_forward,p_reverse,p_absent\n"));
    assert_eq!(class.lines().count(), 5);
    // Edge 2 (nodes 1 and 3) is oriented forward in every class member.
    let row: Vec<&str> = class.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(&row[..2], ["1", "3"]);
    assert_eq!(row[2].parse::<f64>().unwrap(), 1.0);

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    assert!(edgemc(&[
        "simulate", "--topology", "M1", "--n", "200", "--beta", "1", "--seed", "21",
        "--out", data.to_str().unwrap(),
    ])
    .status
    .success());
    let exact = stdout_of(&edgemc(&[
        "oracle", "--topology", "M1", "--data", data.to_str().unwrap(),
    ]));
    assert!(exact.starts_with("edge_lo,edge_hi,p_forward,p_reverse,p_absent\n"));
    assert_eq!(exact.lines().count(), 3);
    for line in exact.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let total: f64 = fields[2..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() <= 1e-12, "row does not sum to 1: {line}");
    }
}

#[test]
fn cycles_lists_catalog_and_state_cycles() {
    // GN4's skeleton holds a single four-cycle, listed in both orientations.
    let listing = stdout_of(&edgemc(&["cycles", "--topology", "GN4"]));
    let lines: Vec<&str> = listing.lines().collect();
    assert_eq!(lines[0], "edges\tstates\tlength\tdecimal");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[2], "4");
    }

    // The worked five-edge skeleton with edge 2 reversed: one three-edge
    // cycle through edges 1, 2, 3 whose encoding is 1 + (9 + 2) + 3 = 15.
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.txt");
    write(&edges, "1 2\n1 3\n2 3\n2 4\n3 4\n");
    let present = stdout_of(&edgemc(&[
        "cycles", "--edges", edges.to_str().unwrap(), "--state", "01011",
    ]));
    let lines: Vec<&str> = present.lines().collect();
    assert_eq!(lines[0], "edges\tstates\tlength\tdecimal");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split('\t').collect();
    let mut edge_ids: Vec<&str> = fields[0].split(';').collect();
    edge_ids.sort_unstable();
    assert_eq!(edge_ids, ["1", "2", "3"]);
    assert_eq!(fields[2], "3");
    assert_eq!(fields[3], "15");

    // An acyclic state lists nothing below the header.
    let empty = stdout_of(&edgemc(&[
        "cycles", "--edges", edges.to_str().unwrap(), "--state", "00011",
    ]));
    assert_eq!(empty.lines().count(), 1);
}

#[test]
fn bench_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.toml");
    write(
        &config,
        "topology = \"M1\"\nn = [60]\nbeta = [1.0]\nreplicates = 3\n\
         prior = [0.05, 0.05, 0.9]\niterations = 2000\nburn_in = 0.2\n\
         step_size = 20\nseed = 31\n",
    );
    let run = |args: &[&str], env_jobs: Option<&str>| -> Vec<u8> {
        let out = dir.path().join(format!("report_{}.csv", args.len()));
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_edgemc"));
        cmd.args(["bench", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        cmd.args(args);
        match env_jobs {
            Some(v) => cmd.env("EDGEMC_JOBS", v),
            None => cmd.env_remove("EDGEMC_JOBS"),
        };
        let result = cmd.output().unwrap();
        assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
        std::fs::read(&out).unwrap()
    };
    let solo = run(&["--jobs", "1"], None);
    let pooled = run(&["--jobs", "2"], None);
    let via_env = run(&[], Some("2"));
    assert_eq!(solo, pooled);
    assert_eq!(solo, via_env);
    let text = String::from_utf8(solo).unwrap();
    assert!(text.starts_with("topology,n,beta,replicates,"));
    assert_eq!(text.lines().count(), 2);
    // A malformed job count from the environment is a usage error.
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_edgemc"));
    cmd.args(["bench", "--config", config.to_str().unwrap(), "--out", "/dev/null"]);
    cmd.env("EDGEMC_JOBS", "zero");
    assert_eq!(cmd.output().unwrap().status.code(), Some(1));
}
