use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_traverse-lab"))
}

#[test]
fn poset_enumeration() {
    let out = bin()
        .args(["poset", "--max-reduced-norm", "1", "--max-support", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let words: Vec<&str> = text.lines().collect();
    assert_eq!(words, vec!["2", "11", "121"]);
}

#[test]
fn run_disk_builtin_writes_artifacts() {
    let dir = std::env::temp_dir().join("traverse-lab-test-disk");
    let _ = std::fs::remove_dir_all(&dir);
    let out = bin()
        .args(["run", "disk", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    for artifact in [
        "report.json",
        "table.csv",
        "table.json",
        "graph.dot",
        "graph.json",
        "gv.json",
        "gv.svg",
        "strata.svg",
    ] {
        assert!(
            dir.join("disk").join(artifact).exists(),
            "missing {artifact}"
        );
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("disk/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["scenario"], "disk");
    assert!(report["claims"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"].as_bool().unwrap()));
    // every claim cites its producing module and the report carries the hash
    assert!(report["claims"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["module"].as_str().is_some()));
    assert_eq!(report["scenario_hash"].as_str().unwrap().len(), 16);
}

#[test]
fn config_error_exits_2() {
    let out = bin()
        .args(["run", "/nonexistent/scenario.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // malformed scenario: flow without a field
    let dir = std::env::temp_dir().join("traverse-lab-test-bad");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(
        &bad,
        "name = \"bad\"\nkind = \"flow\"\n[domain]\nw = \"1 - x^2 - y^2\"\nbbox = [-1.5, -1.5, 1.5, 1.5]\n",
    )
    .unwrap();
    let out = bin().args(["run"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // syntax error in an expression
    std::fs::write(
        &bad,
        "name = \"bad\"\nkind = \"flow\"\n[domain]\nw = \"1 - x^\"\nbbox = [-1.5, -1.5, 1.5, 1.5]\n[field]\nvx = \"1\"\nvy = \"0\"\n",
    )
    .unwrap();
    let out = bin().args(["run"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn local_model_fiber_matches_known_example() {
    let out = bin()
        .args([
            "local-model",
            "--omega",
            "121",
            "--roots=-1,0,1",
            "--x=-0.04",
            "--epsilon",
            "0.05",
            "--json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let comps = v["components"].as_array().unwrap();
    assert_eq!(comps.len(), 2);
    assert!((comps[0]["hi"].as_f64().unwrap() + 0.2).abs() < 1e-6);
}

#[test]
fn out_env_var_overrides_flag() {
    let dir = std::env::temp_dir().join("traverse-lab-test-env");
    let _ = std::fs::remove_dir_all(&dir);
    let out = bin()
        .args(["run", "poncelet", "--out", "/definitely/not/used"])
        .env("TRAVERSE_LAB_OUT", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("poncelet/report.json").exists());
    assert!(!Path::new("/definitely/not/used").exists());
}

#[test]
fn reports_are_byte_stable() {
    let run = |dir: &Path| {
        let out = bin().args(["run", "poncelet", "--out"]).arg(dir).output().unwrap();
        assert!(out.status.success());
        std::fs::read(dir.join("poncelet/report.json")).unwrap()
    };
    let d1 = std::env::temp_dir().join("traverse-lab-test-stable-1");
    let d2 = std::env::temp_dir().join("traverse-lab-test-stable-2");
    let _ = std::fs::remove_dir_all(&d1);
    let _ = std::fs::remove_dir_all(&d2);
    assert_eq!(run(&d1), run(&d2));
}

#[test]
fn billiard_poncelet_subcommand() {
    let out = bin()
        .args([
            "billiard", "poncelet", "--r1", "1", "--r2", "0.5", "--k", "3", "--json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let residuals: Vec<f64> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(residuals.iter().all(|r| *r < 1e-6));
}
