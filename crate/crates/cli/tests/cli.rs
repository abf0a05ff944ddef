//! End-to-end runs of the sqsolve binary.

use std::path::Path;
use std::process::{Command, Output};

fn sqsolve(args: &[&str], envs: &[(&str, &str)], dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sqsolve"));
    cmd.args(args).current_dir(dir).env_remove("SQSOLVE_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout_json_lines(out: &Output) -> Vec<serde_json::Value> {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("json line"))
        .collect()
}

#[test]
fn gen_solve_sample_query_norm_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let gen_out = sqsolve(
        &[
            "gen",
            "--rows",
            "12",
            "--cols",
            "8",
            "--kappa",
            "2.0",
            "--seed",
            "5",
            "--out",
            "m.mtx",
            "--rhs-out",
            "b.txt",
        ],
        &[],
        dir.path(),
    );
    let gen_info = &stdout_json_lines(&gen_out)[0];
    assert!((gen_info["kappa"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!(dir.path().join("m.mtx").exists());

    let solve_out = sqsolve(
        &[
            "solve",
            "--matrix",
            "m.mtx",
            "--rhs",
            "b.txt",
            "--solver",
            "dual",
            "--eps",
            "0.1",
            "--seed",
            "9",
            "--iters",
            "300",
            "--out",
            "sol.json",
            "--trace",
            "trace.json",
        ],
        &[],
        dir.path(),
    );
    let info = &stdout_json_lines(&solve_out)[0];
    assert!(info["relative_error"].as_f64().unwrap() < 0.1);
    assert!(info["support"].as_u64().unwrap() <= 12);
    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace.json")).unwrap())
            .unwrap();
    assert_eq!(trace["iterations"], 300);
    assert_eq!(trace["residual_norms"].as_array().unwrap().len(), 300);

    // The same trace comes out as step-indexed CSV when asked.
    let csv_out = sqsolve(
        &[
            "solve",
            "--matrix",
            "m.mtx",
            "--rhs",
            "b.txt",
            "--solver",
            "dual",
            "--seed",
            "9",
            "--iters",
            "50",
            "--trace",
            "trace.csv",
        ],
        &[],
        dir.path(),
    );
    assert!(csv_out.status.success());
    let csv_text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv_text.starts_with("step,residual_norm,error_norm,support_size"));
    assert_eq!(csv_text.lines().count(), 51);

    let query_out = sqsolve(
        &[
            "query",
            "--description",
            "sol.json",
            "--index",
            "0",
            "--index",
            "3",
        ],
        &[],
        dir.path(),
    );
    let values = stdout_json_lines(&query_out);
    assert_eq!(values.len(), 2);
    assert_eq!(values[1]["index"], 3);

    let sample_out = sqsolve(
        &[
            "sample",
            "--description",
            "sol.json",
            "--count",
            "5",
            "--seed",
            "1",
        ],
        &[],
        dir.path(),
    );
    let samples = stdout_json_lines(&sample_out);
    assert_eq!(samples.len(), 5);
    for s in &samples {
        assert!(s["index"].as_u64().unwrap() < 8);
        assert!(s["attempts"].as_u64().unwrap() >= 1);
    }

    let norm_out = sqsolve(
        &[
            "norm",
            "--description",
            "sol.json",
            "--eps",
            "0.1",
            "--delta",
            "0.01",
            "--seed",
            "2",
        ],
        &[],
        dir.path(),
    );
    let norm_info = &stdout_json_lines(&norm_out)[0];
    assert!(!norm_info["degenerate"].as_bool().unwrap());
    let est = norm_info["estimate"].as_f64().unwrap();
    let truth = info["solution_norm"].as_f64().unwrap();
    assert!(
        (est - truth).abs() / truth < 0.15,
        "est={est} truth={truth}"
    );
}

#[test]
fn seed_env_var_applies_when_flag_absent() {
    let dir = tempfile::tempdir().unwrap();
    let flagged = sqsolve(
        &[
            "gen", "--rows", "6", "--cols", "4", "--seed", "33", "--out", "a.mtx",
        ],
        &[],
        dir.path(),
    );
    let env_seeded = sqsolve(
        &["gen", "--rows", "6", "--cols", "4", "--out", "b.mtx"],
        &[("SQSOLVE_SEED", "33")],
        dir.path(),
    );
    assert!(flagged.status.success() && env_seeded.status.success());
    let a = std::fs::read(dir.path().join("a.mtx")).unwrap();
    let b = std::fs::read(dir.path().join("b.mtx")).unwrap();
    assert_eq!(a, b);

    // The flag wins over the environment.
    let overridden = sqsolve(
        &[
            "gen", "--rows", "6", "--cols", "4", "--seed", "44", "--out", "c.mtx",
        ],
        &[("SQSOLVE_SEED", "33")],
        dir.path(),
    );
    assert!(overridden.status.success());
    let c = std::fs::read(dir.path().join("c.mtx")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn bench_subcommand_writes_csv_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({
        "generator": {
            "rows": 15, "cols": 10,
            "profile": { "kind": "linear", "kappa": 2.0 },
            "seed": 11
        },
        "solver": { "id": "kaczmarz", "epsilon": 0.2, "iterations": 80 },
        "trials": 4,
        "master_seed": 21
    });
    std::fs::write(
        dir.path().join("spec.json"),
        serde_json::to_vec_pretty(&spec).unwrap(),
    )
    .unwrap();
    let out = sqsolve(
        &[
            "bench",
            "--spec",
            "spec.json",
            "--out",
            "report.csv",
            "--format",
            "csv",
            "--jobs",
            "2",
        ],
        &[],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 5);
    // Summary goes to stderr as JSON.
    let summary: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(summary["trials"], 4);
}

#[test]
fn failures_emit_machine_readable_json_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqsolve(
        &[
            "solve",
            "--matrix",
            "missing.mtx",
            "--rhs",
            "missing.txt",
            "--solver",
            "kaczmarz",
        ],
        &[],
        dir.path(),
    );
    assert!(!out.status.success());
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("missing.mtx"));
}

#[test]
fn rejects_unknown_solver_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqsolve(
        &["solve", "--matrix", "x", "--rhs", "y", "--solver", "cg"],
        &[],
        dir.path(),
    );
    assert!(!out.status.success());
}
