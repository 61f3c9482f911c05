use std::path::Path;
use std::process::{Command, Output};

use racsim::harness::{self, AgentSpec, BoundRequest, Scenario};

fn racsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_racsim")).args(args).output().unwrap()
}

fn small_scenario(p: f64, seed: u64) -> Scenario {
    let mut s = harness::desk_mmtc(AgentSpec::Fixed { p: vec![p, p] }, 8, seed);
    s.network.n_subcarriers = 2;
    s
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn error_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn run_writes_deterministic_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.json");
    write_json(&cfg, &small_scenario(0.5, 4));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let res = racsim(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let csv_a = std::fs::read(a.join("series.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("series.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    assert_eq!(text.lines().next().unwrap(), harness::csv_header(2));
    assert_eq!(text.lines().count(), 9);
    let series = harness::load_series(&a.join("series.json")).unwrap();
    assert_eq!(series.records.len(), 8);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["slots"], 8);
}

#[test]
fn sweep_reports_a_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.json");
    write_json(&cfg, &small_scenario(0.5, 1));
    let res = racsim(&["sweep", "--config", cfg.to_str().unwrap(), "--grid", "0.5,1.0"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 4);
}

#[test]
fn bound_reports_paper_scale_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bound.json");
    let req: BoundRequest = serde_json::from_str(r#"{"n_users": 256, "n_antennas": 128, "phi": 2.5, "sparsity": [4]}"#).unwrap();
    write_json(&cfg, &req);
    let res = racsim(&["bound", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert!((v["epsilon_n"].as_f64().unwrap() - 0.46541).abs() < 1e-4);
}

#[test]
fn compare_orders_two_groups() {
    let dir = tempfile::tempdir().unwrap();
    for (name, p) in [("high", 0.6), ("low", 0.1)] {
        let group = dir.path().join(name);
        std::fs::create_dir_all(&group).unwrap();
        for seed in 0..3 {
            let series = harness::run(&small_scenario(p, seed)).unwrap();
            harness::emit(&series, harness::Format::Json, &group.join(format!("seed{seed}.json"))).unwrap();
        }
    }
    let res = racsim(&[
        "compare",
        dir.path().join("high").to_str().unwrap(),
        dir.path().join("low").to_str().unwrap(),
        "--json",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["groups"].as_array().unwrap().len(), 2);
}

#[test]
fn failures_exit_nonzero_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let res = racsim(&["run", "--config", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(error_json(&res)["error"], "io");

    let bad = dir.path().join("bad.json");
    let mut s = small_scenario(0.5, 0);
    s.network.n_users = 0;
    write_json(&bad, &s);
    let res = racsim(&["run", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(error_json(&res)["error"], "invalid_config");

    let res = racsim(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(error_json(&res)["error"], "usage");

    assert!(racsim(&["--help"]).status.success());
}

#[test]
fn shipped_configs_match_the_presets() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let s = Scenario::from_json_file(&root.join("desk-mmtc-q.json")).unwrap();
    let mut preset = harness::desk_mmtc(AgentSpec::Rl(harness::desk_rl()), 4000, 1);
    preset.name = s.name.clone();
    preset.recovery.noise_floor = s.recovery.noise_floor;
    assert_eq!(s, preset);
    let text = std::fs::read_to_string(root.join("bound.json")).unwrap();
    let req: BoundRequest = serde_json::from_str(&text).unwrap();
    let report = harness::bound_report(&req).unwrap();
    assert!(report.optimum.is_some() && report.sparsity.is_some());
    assert_eq!(report.theorem1.len(), 4);
}
