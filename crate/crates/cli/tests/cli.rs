use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.toml"))
}

fn walkbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walkbound"))
        .args(args)
        .env_remove("WALKBOUND_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn growth_on_free_by_free_is_polynomial_of_degree_one() {
    let cfg = fixture("free-by-free");
    let o = walkbound(&["growth", "--config", path_str(&cfg), "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let reports: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert_eq!(r["kind"], "Polynomial");
        assert_eq!(r["degree"], 1);
    }
}

#[test]
fn malformed_weights_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let text =
        std::fs::read_to_string(fixture("srw-f2"))
            .unwrap()
            .replacen("weight = 0.25", "weight = 0.35", 1);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("hitting.csv");
    let o = walkbound(&["hitting", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    assert_eq!(
        std::fs::read_dir(dir.path()).unwrap().count(),
        1,
        "stray files left behind"
    );
}

#[test]
fn missing_config_is_a_config_error() {
    assert_eq!(code(&walkbound(&["moments"])), 2);
    assert_eq!(code(&walkbound(&["moments", "--config", "/nonexistent.toml"])), 2);
}

#[test]
fn walk_is_reproducible_and_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("linear");
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = walkbound(&[
            "walk",
            "--config",
            path_str(&cfg),
            "--seed",
            "17",
            "--n-paths",
            "150",
            "--n-steps",
            "40",
            "--workers",
            workers,
            "--out",
            path_str(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("path_id,step,w,p,gauge_length\n"));
    assert_eq!(text.lines().count(), 1 + 150 * 41);
}

#[test]
fn seed_environment_variable_matches_the_flag() {
    let cfg = fixture("srw-f2");
    let args = [
        "walk",
        "--config",
        path_str(&cfg),
        "--n-paths",
        "20",
        "--n-steps",
        "10",
    ];
    let flag = walkbound(&[&args[..], &["--seed", "99"]].concat());
    let env = Command::new(env!("CARGO_BIN_EXE_walkbound"))
        .args(args)
        .env("WALKBOUND_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(code(&flag), 0);
    assert_eq!(flag.stdout, env.stdout);
    assert_ne!(
        flag.stdout,
        walkbound(&[&args[..], &["--seed", "98"]].concat()).stdout
    );
}

#[test]
fn normalized_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["srw-f2", "mixed", "free-by-free", "free-by-z2"] {
        let first = dir.path().join(format!("{name}.1.toml"));
        let second = dir.path().join(format!("{name}.2.toml"));
        let o = walkbound(&[
            "config",
            "--config",
            path_str(&fixture(name)),
            "--out",
            path_str(&first),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let o = walkbound(&["config", "--config", path_str(&first), "--out", path_str(&second)]);
        assert_eq!(code(&o), 0);
        assert_eq!(
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn failure_classes_map_to_exit_codes() {
    // Paths too short to resolve depth-2 cylinders: convergence failure.
    let o = walkbound(&[
        "hitting",
        "--config",
        path_str(&fixture("srw-f2")),
        "--n-steps",
        "1",
        "--n-paths",
        "50",
    ]);
    assert_eq!(code(&o), 3);
    // A one-step budget leaves half the paths without a return.
    let o = walkbound(&[
        "first-return",
        "--config",
        path_str(&fixture("mixed")),
        "--samples",
        "200",
    ]);
    assert_eq!(code(&o), 0);
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("mixed"))
        .unwrap()
        .replace("samples = 10000", "samples = 200\nstep_budget = 1");
    let cfg = dir.path().join("budget.toml");
    std::fs::write(&cfg, text).unwrap();
    assert_eq!(code(&walkbound(&["first-return", "--config", path_str(&cfg)])), 4);
    // No guard zone for the truncated-prefix action.
    let o = walkbound(&[
        "stationarity",
        "--config",
        path_str(&fixture("linear")),
        "--n-paths",
        "500",
        "--samples",
        "500",
        "--margin",
        "0",
    ]);
    assert_eq!(code(&o), 5);
}

#[test]
fn tree_commands() {
    let cfg = fixture("free-by-free");
    let o = walkbound(&["tree-strips", "--config", path_str(&cfg), "--horizon", "30"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let expected: String = std::iter::once("k,count".to_string())
        .chain((1..=12).map(|k| format!("{k},{}", 2 * k + 1)))
        .map(|l| l + "\n")
        .collect();
    assert_eq!(text, expected);
    let o = walkbound(&["tree-liminf", "--config", path_str(&cfg), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let point: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        point["Ray"]["stable_path"].as_array().unwrap().last().unwrap(),
        "bbbbbbbbbbbbb"
    );
}

#[test]
fn summaries_carry_the_documented_fields() {
    let o = walkbound(&[
        "walk",
        "--config",
        path_str(&fixture("srw-f2")),
        "--format",
        "json",
        "--n-paths",
        "100",
        "--n-steps",
        "100",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["drift", "drift_stderr", "entropy", "log_moment", "first_moment"] {
        assert!(v[key].is_number(), "{key}");
    }
    let o = walkbound(&[
        "first-return",
        "--config",
        path_str(&fixture("mixed")),
        "--format",
        "json",
        "--samples",
        "500",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["mean_return_time"].is_number());
    let o = walkbound(&[
        "hitting",
        "--config",
        path_str(&fixture("srw-f2")),
        "--n-paths",
        "400",
        "--n-steps",
        "200",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("cylinder,frequency\n"));
    assert_eq!(text.lines().count(), 13);
}
