use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn slitstone(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slitstone")).args(args).current_dir(dir).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    std::fs::write(dir.join(name), json).unwrap();
    name.to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const COARSE: &str = r#"{"k": 2, "a": [0.3, -0.2, 0.1], "h": 0.25, "rounds": 1}"#;

#[test]
fn solve_expand_classify_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", COARSE);
    let o = slitstone(&["solve", "--config", &cfg, "--out", "run"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&dir.path().join("run/solve.json"));
    for key in ["command", "config_hash", "config", "converged", "iterations", "residual", "omega", "M_emp", "contact", "b_history", "solution_file"] {
        assert!(s.get(key).is_some(), "solve.json lacks {key}");
    }
    assert_eq!(s["converged"], true);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);

    let sol = "run/solution.sol";
    let o = slitstone(&["expand", "--solution", sol, "--out", "run"], dir.path());
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("run/expansion.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "j,b,deviation"));
    assert_eq!(csv.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 2);

    let o = slitstone(&["classify", "--solution", sol, "--out", "run"], dir.path());
    assert_eq!(code(&o), 0);
    let c = read_json(&dir.path().join("run/classification.json"));
    assert_eq!(c["half_space"], true);
    assert_eq!(c["alpha"].as_array().unwrap().len(), 2);
}

#[test]
fn floats_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let o = slitstone(&["admissible", "--alpha", "0.1,0.2"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("1.0000000000000001e-1"), "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["alpha"][1].as_f64().unwrap(), 0.2);
}

#[test]
fn admissible_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let yes: Value = serde_json::from_slice(&slitstone(&["admissible", "--alpha", "0.5,0.2"], dir.path()).stdout).unwrap();
    assert_eq!(yes["admissible"], true);
    assert_eq!(yes["k"], 2);
    // Trace r³ − 3r² + 0.2r is negative at r = 1.
    let no: Value = serde_json::from_slice(&slitstone(&["admissible", "--alpha", "-3,0.2"], dir.path()).stdout).unwrap();
    assert_eq!(no["admissible"], false);
    assert_eq!(code(&slitstone(&["admissible", "--alpha", "0.5"], dir.path())), 3);
    assert_eq!(code(&slitstone(&["admissible", "--alpha", "0.5,x"], dir.path())), 3);
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("range.json", r#"{"k": 2, "a": [1.5, 0, 0]}"#, "`a`"),
        ("length.json", r#"{"k": 2, "a": [0, 0]}"#, "`a`"),
        ("unknown.json", r#"{"k": 2, "a": [0, 0, 0], "bogus": 1}"#, "bogus"),
        ("mesh.json", r#"{"k": 2, "a": [0, 0, 0], "h": 0.3}"#, "`h`"),
        ("omega.json", r#"{"k": 2, "a": [0, 0, 0], "omega": 2.5}"#, "`omega`"),
        ("mode.json", r#"{"k": 2, "a": [0, 0, 0], "boundary_mode": "dirichlet"}"#, "boundary_mode"),
    ];
    for (name, json, field) in cases {
        let cfg = write_config(dir.path(), name, json);
        let o = slitstone(&["solve", "--config", &cfg], dir.path());
        assert_eq!(code(&o), 3, "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{name}: {err}");
    }
    assert_eq!(code(&slitstone(&["solve", "--config", "missing.json"], dir.path())), 3);
}

#[test]
fn non_convergence_exits_2_and_keeps_best_iterate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"k": 2, "a": [0.3, -0.2, 0.1], "h": 0.25, "max_iter": 3}"#);
    let o = slitstone(&["solve", "--config", &cfg, "--out", "run"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(dir.path().join("run/solution.sol").exists());
    assert_eq!(read_json(&dir.path().join("run/solve.json"))["converged"], false);
}

#[test]
fn expansion_failures_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", COARSE);
    assert_eq!(code(&slitstone(&["solve", "--config", &cfg, "--out", "run"], dir.path())), 0);
    let sol = "run/solution.sol";
    let o = slitstone(&["expand", "--solution", sol, "--radii", "0.1"], dir.path());
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("contact closure"));
    // High-order coefficients on a coarse mesh do not agree across radii.
    assert_eq!(code(&slitstone(&["expand", "--solution", sol, "--n", "6"], dir.path())), 0);
    assert_eq!(code(&slitstone(&["expand", "--solution", sol, "--n", "6", "--strict"], dir.path())), 4);
    assert_eq!(code(&slitstone(&["expand", "--solution", sol, "--strict"], dir.path())), 0);
}

#[test]
fn barrier_reports_search_and_fixed_tau() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", COARSE);
    let o = slitstone(&["barrier", "--config", &cfg], dir.path());
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let tau = v["barrier"]["tau"].as_f64().unwrap();
    assert!(tau >= 1.0 && tau.log2().fract() == 0.0, "tau = {tau}");
    let o = slitstone(&["barrier", "--config", &cfg, "--tau", "0.001"], dir.path());
    assert_eq!(code(&o), 6, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn pair_verdict_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write_config(
        dir.path(),
        "ok.json",
        r#"{"k": 2, "boundary_mode": "exact", "alpha": [0.5, 0.2], "tau": 0.5, "h": 0.125}"#,
    );
    let o = slitstone(&["pair", "--config", &ok, "--out", "run"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("run/pair.json"));
    for key in ["b_plus", "b_minus", "antisymmetry_defect", "u", "v", "symmetry_deviation", "alpha_mirror_error", "endpoint_sum", "misfit", "pass"] {
        assert!(v.get(key).is_some(), "pair.json lacks {key}");
    }
    assert!(v["u"]["pair"]["defect"].is_number());
    let strict = write_config(
        dir.path(),
        "strict.json",
        r#"{"k": 2, "a": [0.3, -0.2, 0.1], "h": 0.25, "pair_tol": 0, "alpha_tol": 0, "defect_gain": 0}"#,
    );
    assert_eq!(code(&slitstone(&["pair", "--config", &strict], dir.path())), 5);
}

#[test]
fn same_config_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", COARSE);
    for out in ["a", "b"] {
        assert_eq!(code(&slitstone(&["solve", "--config", &cfg, "--out", out], dir.path())), 0);
    }
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/solution.sol"), read("b/solution.sol"));
}
