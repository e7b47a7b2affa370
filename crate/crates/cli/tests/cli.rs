use std::path::Path;
use std::process::Command;

use morse_cli::config::{parse_batch, Operation, ScenarioConfig};
use morse_cli::runner::{run_scenario, RunOptions};
use serde_json::{json, Value};

fn run(cfg: Value) -> morse_cli::RunReport {
    let cfg = ScenarioConfig::from_value(cfg).unwrap();
    run_scenario(&cfg, Path::new("."), &RunOptions { normalize: true }).unwrap()
}

#[test]
fn minimal_config_fills_defaults() {
    let cfg = ScenarioConfig::from_value(json!({
        "id": "line", "graph": {"generator": "lattice", "dimension": 1, "radius": 5}, "operations": ["morse"]
    }))
    .unwrap();
    assert_eq!(cfg.operations, [Operation::Morse]);
    assert_eq!(cfg.tolerances, Default::default());
    let r = run_scenario(&cfg, Path::new("."), &RunOptions::default()).unwrap();
    assert_eq!(r.operations[0].result.as_ref().unwrap()["n_minus"], 0);
}

#[test]
fn unknown_operation_names_the_field() {
    let err = ScenarioConfig::from_value(json!({
        "id": "x", "graph": {"generator": "half_line", "length": 3}, "operations": ["morse", "spectra"]
    }))
    .unwrap_err()
    .to_string();
    assert!(err.contains("operations[1]"), "{err}");
    assert!(err.contains("spectra"), "{err}");
}

#[test]
fn radii_must_be_nested() {
    let err = ScenarioConfig::from_value(json!({
        "id": "x", "graph": {"generator": "half_line", "length": 10},
        "exhaustion": {"center": "0", "radii": [4, 2]}, "operations": ["pipeline"]
    }))
    .unwrap_err()
    .to_string();
    assert!(err.contains("exhaustion.radii") && err.contains("nested"), "{err}");
}

#[test]
fn other_invariants_are_checked() {
    let base = json!({"id": "x", "graph": {"generator": "random", "vertices": 10, "extra_edges": 3}, "operations": ["morse"]});
    assert!(ScenarioConfig::from_value(base.clone()).unwrap_err().to_string().contains("seed"));
    let mut empty = base.clone();
    empty["seed"] = json!(1);
    empty["operations"] = json!([]);
    assert!(ScenarioConfig::from_value(empty).unwrap_err().to_string().contains("operations"));
    let bad_vertex = ScenarioConfig::from_value(json!({
        "id": "x", "graph": {"generator": "half_line", "length": 3},
        "potential": {"family": "values", "values": {"7": -1.0}}, "operations": ["morse"]
    }))
    .unwrap();
    assert!(bad_vertex.validate(Path::new(".")).is_err());
    let bad_generator = ScenarioConfig::from_value(json!({"id": "x", "graph": {"generator": "torus"}, "operations": ["morse"]}));
    assert!(bad_generator.unwrap_err().to_string().contains("graph"));
    let mut t = morse_cli::Tolerances::default();
    assert!(t.set("bs_tol=1e-6").is_ok() && t.bs_tol == 1e-6);
    assert!(t.set("nonsense=1").is_err());
}

#[test]
fn morse_on_the_two_vertex_well() {
    let r = run(json!({
        "id": "p2_well", "graph": {"generator": "half_line", "length": 1},
        "potential": {"family": "uniform", "value": -2.0}, "operations": ["morse"], "expect": {"n_minus": 1}
    }));
    assert!(r.all_verdicts);
    assert_eq!(r.operations[0].result.as_ref().unwrap()["n_minus"], 1);
}

#[test]
fn pipeline_on_the_half_line_well() {
    let r = run(json!({
        "id": "half_line_well", "graph": {"generator": "half_line", "length": 60},
        "potential": {"family": "constant_well", "center": "0", "radius": 4, "depth": 8.0},
        "exhaustion": {"center": "0", "radii": (1..60).collect::<Vec<_>>()},
        "operations": ["pipeline"], "doubling": true
    }));
    let res = r.operations[0].result.as_ref().unwrap();
    assert!(r.all_verdicts, "{res:#}");
    assert_eq!(res["morse_index"], 5);
    assert_eq!(res["doubling"]["morse_delta"], 0);
    assert_eq!(res["nonneg_shift"]["nonnegative"], true);
}

#[test]
fn parabolicity_separates_line_and_space() {
    let line = run(json!({
        "id": "z1", "graph": {"generator": "lattice", "dimension": 1, "radius": 201},
        "exhaustion": {"center": "0", "radii": [25, 50, 100, 150, 200]}, "operations": ["parabolicity"]
    }));
    let space = run(json!({
        "id": "z3", "graph": {"generator": "lattice", "dimension": 3, "radius": 21, "vertex_cap": 90000},
        "exhaustion": {"center": "0,0,0", "radii": [6, 8, 10, 12, 14, 16, 18, 20]}, "operations": ["parabolicity"]
    }));
    let verdict = |r: &morse_cli::RunReport| r.operations[0].result.as_ref().unwrap()["verdict"]["verdict"].clone();
    assert_eq!(verdict(&line), "parabolic_suspected");
    assert_eq!(verdict(&space), "nonparabolic");
}

#[test]
fn errors_stay_inside_the_report() {
    let r = run(json!({
        "id": "no_exhaustion", "graph": {"generator": "half_line", "length": 4}, "operations": ["green", "morse"]
    }));
    assert!(!r.operations[0].ok && r.operations[0].error.as_ref().unwrap().contains("exhaustion"));
    assert!(r.operations[1].ok);
    assert!(!r.all_verdicts);
}

#[test]
fn echo_reproduces_the_report() {
    let cfg = json!({
        "id": "random_bracket", "graph": {"generator": "random", "vertices": 30, "extra_edges": 12, "mu_range": [0.5, 2.0]},
        "potential": {"family": "values", "values": {"v0": -3.0, "v1": -1.5}},
        "operations": ["morse", "bs", "bracket", "kernel"], "split_set": ["v0", "v1", "v2"],
        "bracket_lambdas": [-0.5, 0.0, 0.3], "seed": 11, "tune_zero_mode": true
    });
    let first = run(cfg);
    let echo = serde_json::to_value(&first.config).unwrap();
    let second = run(echo);
    assert_eq!(first.to_json(), second.to_json());
}

#[test]
fn batch_documents() {
    let one = r#"{"id": "a", "graph": {"generator": "half_line", "length": 2}, "operations": ["morse"]}"#;
    assert_eq!(parse_batch(one).unwrap().len(), 1);
    assert_eq!(parse_batch(&format!("[{one}, {one}]")).unwrap().len(), 2);
    assert_eq!(parse_batch(&format!("{{\"scenarios\": [{one}]}}")).unwrap().len(), 1);
    let err = parse_batch(r#"[{"id": "a", "graph": {"generator": "half_line", "length": 2}, "operations": ["morse"], "typo": 1}]"#);
    assert!(format!("{:#}", err.unwrap_err()).contains("typo"));
}

#[test]
fn binary_exit_codes_and_outputs() {
    let dir = std::env::temp_dir().join(format!("morse-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.json");
    std::fs::write(
        &good,
        r#"{"id": "well", "graph": {"generator": "half_line", "length": 1},
            "potential": {"family": "uniform", "value": -2.0}, "operations": ["bs"]}"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_morse");
    let out = dir.join("report.json");
    let csv = dir.join("csv");
    let status = Command::new(bin)
        .args(["morse", "--config", good.to_str().unwrap(), "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap()])
        .args(["--tol", "tol_zero=1e-9", "--normalize"])
        .status()
        .unwrap();
    assert!(status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["operations"][0]["op"], "morse");
    assert_eq!(report["tolerances"]["tol_zero"], 1e-9);
    assert_eq!(report["operations"][0]["wall_time_s"], 0.0);
    assert!(csv.join("well_00_morse.csv").exists());

    // An expectation that does not hold makes the run fail.
    let failing = dir.join("failing.json");
    std::fs::write(
        &failing,
        r#"{"id": "well", "graph": {"generator": "half_line", "length": 1},
            "potential": {"family": "uniform", "value": -2.0}, "operations": ["morse"], "expect": {"n_minus": 2}}"#,
    )
    .unwrap();
    let status = Command::new(bin).args(["run", "--config", failing.to_str().unwrap()]).output().unwrap();
    assert_eq!(status.status.code(), Some(1));

    let status = Command::new(bin).args(["morse", "--config", good.to_str().unwrap(), "--tol", "bogus=1"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&status.stderr).contains("bogus"));
    std::fs::remove_dir_all(&dir).ok();
}
