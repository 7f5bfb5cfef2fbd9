use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn hprqp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hprqp"))
        .args(args)
        .env_remove("HPRQP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn result_json(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing in `{line}`"))
        .trim_end_matches('s')
        .parse()
        .unwrap()
}

fn write_recipe(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("recipe.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn solves_bundled_qps_to_tolerance() {
    let out = tempfile::tempdir().unwrap();
    let input = data("two_var.qps");
    let o = hprqp(&[
        "solve",
        input.to_str().unwrap(),
        "--tol",
        "1e-8",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let line = String::from_utf8(o.stdout).unwrap();
    for key in ["eta_gap", "eta_p", "eta_d"] {
        assert!(field(&line, key) <= 1e-8, "{line}");
    }
    assert!((field(&line, "obj") + 3.0).abs() < 1e-6);
    let doc = result_json(out.path());
    assert_eq!(doc["status"], "Optimal");
    assert_eq!(doc["schema_version"], 1);
    let trace = std::fs::read_to_string(out.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("k,r,t,sigma,R_tilde,eta_gap,eta_p,eta_d,seconds\n"));
}

#[test]
fn every_variant_solves_the_bundled_qps() {
    for v in ["dual", "primal1", "primal2"] {
        let out = tempfile::tempdir().unwrap();
        let input = data("two_var.qps");
        let o = hprqp(&[
            "solve",
            input.to_str().unwrap(),
            "--variant",
            v,
            "--out",
            out.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{v}");
        assert_eq!(result_json(out.path())["variant"], v);
    }
}

#[test]
fn time_limit_gives_exit_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let recipe = write_recipe(
        tmp.path(),
        r#"{"instances": [{"family": "random", "n": 300, "m": 3000, "density": 0.05}]}"#,
    );
    let gen_dir = tmp.path().join("suite");
    let o = hprqp(&[
        "gen",
        recipe.to_str().unwrap(),
        "--out",
        gen_dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let bundle = gen_dir.join("random_n300_m3000_s0");
    let out = tmp.path().join("res");
    let o = hprqp(&[
        "solve",
        bundle.to_str().unwrap(),
        "--time-limit",
        "0.001",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(result_json(&out)["status"], "TimeLimit");
}

#[test]
fn malformed_input_gives_exit_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.qps");
    std::fs::write(
        &bad,
        "NAME x\nROWS\n N obj\nCOLUMNS\n x obj 1 nope 2\nENDATA\n",
    )
    .unwrap();
    let o = hprqp(&[
        "solve",
        bad.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn invalid_flags_are_rejected() {
    let input = data("two_var.qps");
    let o = hprqp(&["solve", input.to_str().unwrap(), "--tol", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = hprqp(&["solve", input.to_str().unwrap(), "--sigma0", "zero"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn out_dir_defaults_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let input = data("two_var.qps");
    let o = Command::new(env!("CARGO_BIN_EXE_hprqp"))
        .args(["solve", input.to_str().unwrap()])
        .env("HPRQP_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("result.json").exists());
}

#[test]
fn repeated_solves_give_identical_json_apart_from_timings() {
    let strip = |mut v: Value| {
        let obj = v.as_object_mut().unwrap();
        obj.remove("setup_seconds");
        obj.remove("solve_seconds");
        v
    };
    let runs: Vec<Value> = (0..2)
        .map(|_| {
            let out = tempfile::tempdir().unwrap();
            let input = data("two_var.qps");
            hprqp(&[
                "solve",
                input.to_str().unwrap(),
                "--seed",
                "3",
                "--write-x",
                "--out",
                out.path().to_str().unwrap(),
            ]);
            strip(result_json(out.path()))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn bench_reports_every_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let recipe = write_recipe(
        tmp.path(),
        r#"{"instances": [
            {"family": "random", "n": 5, "m": 20, "density": 0.5},
            {"family": "lasso", "p": 4, "q": 6, "density": 0.5, "lambda_ratio": 0.2},
            {"family": "qap", "d": 3}
        ]}"#,
    );
    let suite = tmp.path().join("suite");
    assert_eq!(
        hprqp(&[
            "gen",
            recipe.to_str().unwrap(),
            "--out",
            suite.to_str().unwrap()
        ])
        .status
        .code(),
        Some(0)
    );
    let out = tmp.path().join("bench");
    let o = hprqp(&[
        "bench",
        suite.to_str().unwrap(),
        "--tols",
        "1e-4,1e-6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let records = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 3 * 2);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2);
    assert!(out.join("profile_tol1e-4.csv").exists() && out.join("profile_tol1e-6.csv").exists());

    // report re-aggregates the same records
    let rep = tmp.path().join("report");
    let o = hprqp(&[
        "report",
        out.join("records.csv").to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(rep.join("summary.csv")).unwrap(),
        summary
    );
}

#[test]
fn bench_records_failures_as_unsolved() {
    let tmp = tempfile::tempdir().unwrap();
    let suite = tmp.path().join("suite");
    std::fs::create_dir_all(&suite).unwrap();
    std::fs::copy(data("two_var.qps"), suite.join("good.qps")).unwrap();
    std::fs::write(suite.join("broken.qps"), "NAME x\nENDATA\n").unwrap();
    let out = tmp.path().join("bench");
    let o = hprqp(&[
        "bench",
        suite.to_str().unwrap(),
        "--time-limit",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[2..4], ["2", "1"]);
    let sgm: f64 = row[4].parse().unwrap();
    assert!(
        sgm > 10.0,
        "the failed run must be charged the time limit, got {sgm}"
    );
}

#[test]
fn variant_sweep_orders_iterations() {
    let tmp = tempfile::tempdir().unwrap();
    let recipe = write_recipe(
        tmp.path(),
        r#"{"instances": [{"family": "random", "n": 20, "m": 200, "density": 0.2, "count": 10}]}"#,
    );
    let out = tmp.path().join("bench");
    let o = hprqp(&[
        "bench",
        recipe.to_str().unwrap(),
        "--variants",
        "dual,primal1,primal2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let iters: std::collections::BTreeMap<String, f64> = summary
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[5].parse().unwrap())
        })
        .collect();
    assert_eq!(iters.len(), 3);
    assert!(
        iters["dual"] <= iters["primal1"] && iters["dual"] <= iters["primal2"],
        "{iters:?}"
    );
}

#[test]
fn unknown_subcommand_exits_with_one() {
    assert_eq!(hprqp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hprqp(&["--help"]).status.code(), Some(0));
}
