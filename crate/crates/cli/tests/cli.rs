use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tvmin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvmin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

/// Writes the toy instance and returns its prefix.
fn toy(dir: &TempDir) -> String {
    let prefix = path(dir.path(), "toy");
    let out = tvmin(&["gen", "toy", "--out-prefix", &prefix]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    prefix
}

#[test]
fn solve_then_certify_toy_instance() {
    let dir = TempDir::new().unwrap();
    let p = toy(&dir);
    let (graph, labels) = (format!("{p}.graph"), format!("{p}.labels"));
    let (est, dual, flow) = (
        path(dir.path(), "x.csv"),
        path(dir.path(), "y.csv"),
        path(dir.path(), "f.csv"),
    );
    let out = tvmin(&[
        "solve", "--graph", &graph, "--labels", &labels, "--out", &est, "--dual", &dual,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let estimate = fs::read_to_string(&est).unwrap();
    assert!(estimate.starts_with("node,estimate"));
    assert_eq!(estimate.lines().count(), 9);

    let out = tvmin(&[
        "cert",
        "--graph",
        &graph,
        "--labels",
        &labels,
        "--estimate",
        &est,
        "--dual",
        &dual,
        "--flow-out",
        &flow,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("gap:"));
    assert!(stdout.contains("dual objective:"));
    assert!(fs::read_to_string(&flow)
        .unwrap()
        .starts_with("head,tail,flow,capacity,saturated"));
}

#[test]
fn certificate_rejects_a_poor_dual() {
    let dir = TempDir::new().unwrap();
    let p = toy(&dir);
    let (graph, labels) = (format!("{p}.graph"), format!("{p}.labels"));
    let dual = path(dir.path(), "y.csv");
    let mut text = String::from("head,tail,dual\n");
    for line in fs::read_to_string(&graph)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
    {
        let f: Vec<&str> = line.split_whitespace().collect();
        text.push_str(&format!("{},{},0\n", f[0], f[1]));
    }
    fs::write(&dual, text).unwrap();
    let out = tvmin(&[
        "cert",
        "--graph",
        &graph,
        "--labels",
        &labels,
        "--estimate",
        &format!("{p}.signal.csv"),
        "--dual",
        &dual,
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_reports_each_cluster() {
    let dir = TempDir::new().unwrap();
    let p = toy(&dir);
    let report = path(dir.path(), "r.csv");
    let out = tvmin(&[
        "verify",
        "--graph",
        &format!("{p}.graph"),
        "--labels",
        &format!("{p}.labels"),
        "--partition",
        &format!("{p}.partition"),
        "--exact",
        "--report",
        &report,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches(" pass").count(), 3, "{stdout}");
    assert!(fs::read_to_string(&report).unwrap().lines().count() >= 3);
}

#[test]
fn verify_fails_on_heavy_boundary() {
    let dir = TempDir::new().unwrap();
    let p = toy(&dir);
    let graph = format!("{p}.graph");
    let heavy = fs::read_to_string(&graph)
        .unwrap()
        .replace("3 4 0.5", "3 4 10");
    assert_ne!(heavy, fs::read_to_string(&graph).unwrap());
    fs::write(&graph, heavy).unwrap();
    let out = tvmin(&[
        "verify",
        "--graph",
        &graph,
        "--labels",
        &format!("{p}.labels"),
        "--partition",
        &format!("{p}.partition"),
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not resolved"));
}

#[test]
fn baselines_run_from_the_command_line() {
    let dir = TempDir::new().unwrap();
    let p = toy(&dir);
    for algo in ["lp", "nlasso"] {
        let out = tvmin(&[
            "solve",
            "--graph",
            &format!("{p}.graph"),
            "--labels",
            &format!("{p}.labels"),
            "--algorithm",
            algo,
        ]);
        assert_eq!(
            code(&out),
            0,
            "{algo}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stdout).starts_with("node,estimate"));
    }
    let out = tvmin(&[
        "solve",
        "--graph",
        &format!("{p}.graph"),
        "--labels",
        &format!("{p}.labels"),
        "--algorithm",
        "lp",
        "--dual",
        &path(dir.path(), "y.csv"),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn generators_are_seeded() {
    let dir = TempDir::new().unwrap();
    let read = |prefix: &str| fs::read_to_string(format!("{prefix}.graph")).unwrap();
    let (a, b, c) = (
        path(dir.path(), "a"),
        path(dir.path(), "b"),
        path(dir.path(), "c"),
    );
    for (prefix, seed) in [(&a, "4"), (&b, "4"), (&c, "5")] {
        let out = tvmin(&["gen", "sbm", "--seed", seed, "--out-prefix", prefix]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(Path::new(&format!("{a}.partition")).exists());
}

#[test]
fn experiment_from_config_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let config = path(dir.path(), "exp.json");
    fs::write(
        &config,
        r#"{"seed": 9, "trials": 3, "generator": {"kind": "sbm", "ratios": [1.0, 12.0]}}"#,
    )
    .unwrap();
    let (a, b) = (path(dir.path(), "a.csv"), path(dir.path(), "b.csv"));
    for out_path in [&a, &b] {
        let out = tvmin(&["exp", "sbm", "--config", &config, "--out", out_path]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("# seed=9"));
    assert!(text.contains("ratio,nmse,margin"));

    let out = tvmin(&["exp", "two-cluster", "--config", &config]);
    assert_eq!(code(&out), 1);
    fs::write(
        &config,
        r#"{"seed": 1, "trials": 1, "generator": {"kind": "sbm"}, "bogus": 1}"#,
    )
    .unwrap();
    let out = tvmin(&["exp", "sbm", "--config", &config]);
    assert_eq!(code(&out), 2);
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    assert_eq!(code(&tvmin(&["--help"])), 0);
    assert_eq!(code(&tvmin(&["solve"])), 1);
    assert_eq!(code(&tvmin(&["exp", "sbm"])), 1);
    let out = tvmin(&[
        "solve",
        "--graph",
        "/nonexistent/g.graph",
        "--labels",
        "/nonexistent/l",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/g.graph"));

    let dir = TempDir::new().unwrap();
    let graph = path(dir.path(), "b.graph");
    let labels = path(dir.path(), "l.labels");
    fs::write(&graph, "0 1 1.0\n1 1 2.0\n").unwrap();
    fs::write(&labels, "0 1.0\n").unwrap();
    let out = tvmin(&["solve", "--graph", &graph, "--labels", &labels]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("b.graph:2:"));
}
