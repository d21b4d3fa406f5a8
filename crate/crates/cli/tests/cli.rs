//! End-to-end checks of the batch front end: exit-code contract, strict
//! config schema, deterministic outputs, and the JSON/CSV formats.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

use serde_json::{json, Value};

static CASE: AtomicU64 = AtomicU64::new(0);

fn workdir(tag: &str) -> PathBuf {
    let id = CASE.fetch_add(1, Ordering::SeqCst);
    let dir = std::env::temp_dir().join(format!(
        "resolvent-cli-test-{}-{tag}-{id}",
        std::process::id()
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resolvent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, value: &Value) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn two_cell_config() -> Value {
    json!({
        "geometry": [2],
        "microstructure": {"type": "laminate", "axis": 0, "f1": 0.5},
        "z1": [1.0, 0.0],
        "z2": [2.0, 0.0],
        "scheme": "eyre_milton",
        "tolerance": 1e-11,
        "max_iter": 500,
        "seed": 3,
        "source": {"type": "uniform", "axis": 0}
    })
}

#[test]
fn solve_two_cell_laminate_report() {
    let dir = workdir("solve");
    let config = write_config(&dir, &two_cell_config());
    let out_path = dir.join("report.json");
    let residuals_path = dir.join("residuals.csv");
    let output = run(&[
        "solve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--residuals",
        residuals_path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["command"], "solve");
    assert_eq!(report["converged"], true);
    let source_norm = report["source_norm"].as_f64().unwrap();
    let solution_norm = report["solution_norm"].as_f64().unwrap();
    // the 2-cell solve is the (2/3) s oracle value
    assert!((solution_norm - 2.0 / 3.0 * source_norm).abs() < 1e-9);

    let csv = fs::read_to_string(&residuals_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iter,residual,contraction_estimate"));
    assert!(lines.next().unwrap().starts_with("0,"));
}

#[test]
fn homogeneous_config_converges_immediately() {
    let dir = workdir("homogeneous");
    let mut config = two_cell_config();
    let obj = config.as_object_mut().unwrap();
    obj.insert("z1".into(), json!([2.0, 0.0]));
    let config_path = write_config(&dir, &config);
    let out_path = dir.join("report.json");
    let output = run(&[
        "solve",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    let iterations = report["iterations"].as_u64().unwrap();
    assert!(iterations <= 1, "homogeneous solve took {iterations} iterations");
}

#[test]
fn malformed_config_exits_one_without_outputs() {
    let dir = workdir("malformed");
    let mut config = two_cell_config();
    config.as_object_mut().unwrap().remove("z2");
    let config_path = write_config(&dir, &config);
    let out_path = dir.join("report.json");
    let residuals_path = dir.join("residuals.csv");
    let output = run(&[
        "solve",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--residuals",
        residuals_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(!out_path.exists(), "no outputs on validation failure");
    assert!(!residuals_path.exists());
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = workdir("unknown-key");
    let mut config = two_cell_config();
    config
        .as_object_mut()
        .unwrap()
        .insert("tollerance".into(), json!(1e-8));
    let config_path = write_config(&dir, &config);
    let output = run(&["solve", "--config", config_path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("tollerance"), "stderr: {stderr}");
}

#[test]
fn non_convergence_exits_two() {
    let dir = workdir("nonconv");
    let mut config = two_cell_config();
    let obj = config.as_object_mut().unwrap();
    obj.insert("geometry".into(), json!([8, 8]));
    obj.insert(
        "microstructure".into(),
        json!({"type": "random", "f1": 0.5, "seed": 5}),
    );
    obj.insert("z1".into(), json!([3.0, 0.0]));
    obj.insert("z2".into(), json!([1.0, 0.0]));
    obj.insert("scheme".into(), json!("neumann"));
    obj.insert("max_iter".into(), json!(30));
    obj.insert("source".into(), json!({"type": "random"}));
    let config_path = write_config(&dir, &config);
    let out_path = dir.join("report.json");
    let output = run(&[
        "solve",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    // the report is still written for diagnostic use
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["converged"], false);
}

#[test]
fn solve_outputs_are_byte_deterministic() {
    let dir = workdir("determinism");
    let mut config = two_cell_config();
    let obj = config.as_object_mut().unwrap();
    obj.insert("geometry".into(), json!([8, 8]));
    obj.insert(
        "microstructure".into(),
        json!({"type": "random", "f1": 0.5, "seed": 11}),
    );
    obj.insert("source".into(), json!({"type": "random"}));
    let config_path = write_config(&dir, &config);
    let mut blobs = Vec::new();
    for run_index in 0..2 {
        let out_path = dir.join(format!("report-{run_index}.json"));
        let residuals_path = dir.join(format!("residuals-{run_index}.csv"));
        let output = run(&[
            "solve",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
            "--residuals",
            residuals_path.to_str().unwrap(),
        ]);
        assert!(output.status.success());
        blobs.push((
            fs::read(&out_path).unwrap(),
            fs::read(&residuals_path).unwrap(),
        ));
    }
    assert_eq!(blobs[0].0, blobs[1].0, "JSON reports differ");
    assert_eq!(blobs[0].1, blobs[1].1, "residual CSVs differ");
}

#[test]
fn rates_atlas_sizing_and_spot_value() {
    let dir = workdir("rates");
    let out_path = dir.join("atlas.csv");
    let output = run(&[
        "rates",
        "--alpha",
        "0.5",
        "--beta",
        "2",
        "--window",
        "-4,4,-4,4",
        "--resolution",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let csv = fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().count(), 5, "4 rows plus header");

    // a grid that contains t = 1 exactly: |v| vanishes there
    let output = run(&[
        "rates",
        "--alpha",
        "0.5",
        "--beta",
        "2",
        "--window",
        "-4,4,-4,4",
        "--resolution",
        "9",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let csv = fs::read_to_string(&out_path).unwrap();
    let row = csv
        .lines()
        .find(|l| l.starts_with("1.0000000000000000e0,0.0000000000000000e0,"))
        .expect("t = 1 row present");
    let abs_v: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(abs_v < 1e-6, "|v|(1) = {abs_v}");

    // the other plotted configuration runs and keeps |v|(1) = 0
    let output = run(&[
        "rates",
        "--alpha",
        "0.35",
        "--beta",
        "0.8",
        "--window",
        "-2,2,-2,2",
        "--resolution",
        "9",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let csv = fs::read_to_string(&out_path).unwrap();
    let row = csv
        .lines()
        .find(|l| l.starts_with("1.0000000000000000e0,0.0000000000000000e0,"))
        .expect("t = 1 row present");
    let abs_v: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(abs_v < 1e-6);
}

#[test]
fn bounds_on_full_phase_medium() {
    let dir = workdir("bounds");
    let mut config = two_cell_config();
    let obj = config.as_object_mut().unwrap();
    obj.insert("geometry".into(), json!([8, 8]));
    obj.insert(
        "microstructure".into(),
        json!({"type": "laminate", "axis": 0, "f1": 1.0}),
    );
    obj.insert(
        "bounds".into(),
        json!({"mode": "power", "power_iterations": 300}),
    );
    obj.insert("source".into(), json!({"type": "random"}));
    let config_path = write_config(&dir, &config);
    let out_path = dir.join("bounds.json");
    let output = run(&[
        "bounds",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let a_plus = report["a_plus"].as_f64().unwrap();
    assert!((a_plus - 1.0).abs() < 1e-6, "a+ = {a_plus}");
}

#[test]
fn oracle_deviation_small_on_random_medium() {
    let dir = workdir("oracle");
    let mut config = two_cell_config();
    let obj = config.as_object_mut().unwrap();
    obj.insert("geometry".into(), json!([8, 8]));
    obj.insert(
        "microstructure".into(),
        json!({"type": "random", "f1": 0.5, "seed": 21}),
    );
    obj.insert("source".into(), json!({"type": "random"}));
    let config_path = write_config(&dir, &config);
    let out_path = dir.join("oracle.json");
    let output = run(&[
        "oracle",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let deviation = report["max_rel_deviation"].as_f64().unwrap();
    assert!(deviation <= 1e-8, "deviation {deviation}");
}

#[test]
fn oracle_guard_rejects_large_grids() {
    let dir = workdir("oracle-guard");
    let mut config = two_cell_config();
    let obj = config.as_object_mut().unwrap();
    obj.insert("geometry".into(), json!([64, 64]));
    obj.insert(
        "microstructure".into(),
        json!({"type": "random", "f1": 0.5, "seed": 1}),
    );
    obj.insert("source".into(), json!({"type": "random"}));
    let config_path = write_config(&dir, &config);
    let output = run(&["oracle", "--config", config_path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("guard"), "stderr: {stderr}");
}

#[test]
fn funcalc_square_matches_direct_application() {
    let dir = workdir("funcalc");
    let mut config = two_cell_config();
    let obj = config.as_object_mut().unwrap();
    obj.insert("geometry".into(), json!([8, 8]));
    obj.insert(
        "microstructure".into(),
        json!({"type": "random", "f1": 0.5, "seed": 33}),
    );
    obj.insert("source".into(), json!({"type": "random"}));
    let config_path = write_config(&dir, &config);
    let out_path = dir.join("funcalc.json");
    let output = run(&[
        "funcalc",
        "--config",
        config_path.to_str().unwrap(),
        "--function",
        "poly:0,0,1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["nodes"], 64);
    let deviation = report["direct_check_deviation"].as_f64().unwrap();
    assert!(deviation <= 1e-6, "deviation {deviation}");
}

#[test]
fn file_microstructure_and_source_are_read_back() {
    use num_complex::Complex64;
    use resolvent_core::field::{Field, GridGeometry};
    use resolvent_core::media::TwoPhaseMedium;

    let dir = workdir("file-io");
    let g = GridGeometry::new(&[4, 4]).unwrap();
    let medium = TwoPhaseMedium::random(
        g.clone(),
        0.5,
        9,
        Complex64::new(1.0, 0.0),
        Complex64::new(2.0, 0.0),
    )
    .unwrap();
    let indicator_path = dir.join("indicator.txt");
    let mut blob = Vec::new();
    medium.write_indicator(&mut blob).unwrap();
    fs::write(&indicator_path, blob).unwrap();

    let field = Field::random(g, 2, 10);
    let field_path = dir.join("source.txt");
    let mut blob = Vec::new();
    field.write_text(&mut blob).unwrap();
    fs::write(&field_path, blob).unwrap();

    let mut config = two_cell_config();
    let obj = config.as_object_mut().unwrap();
    obj.insert("geometry".into(), json!([4, 4]));
    obj.insert(
        "microstructure".into(),
        json!({"type": "file", "path": indicator_path.to_str().unwrap()}),
    );
    obj.insert(
        "source".into(),
        json!({"type": "file", "path": field_path.to_str().unwrap()}),
    );
    let config_path = write_config(&dir, &config);
    let out_path = dir.join("report.json");
    let output = run(&[
        "solve",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = workdir("seed-override");
    let mut config = two_cell_config();
    let obj = config.as_object_mut().unwrap();
    obj.insert("geometry".into(), json!([8, 8]));
    obj.insert(
        "microstructure".into(),
        json!({"type": "random", "f1": 0.5}),
    );
    obj.insert("source".into(), json!({"type": "random"}));
    let config_path = write_config(&dir, &config);
    let out_a = dir.join("a.json");
    let out_b = dir.join("b.json");
    for (path, seed) in [(&out_a, "3"), (&out_b, "4")] {
        let output = run(&[
            "solve",
            "--config",
            config_path.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(output.status.success());
    }
    let a: Value = serde_json::from_str(&fs::read_to_string(&out_a).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&fs::read_to_string(&out_b).unwrap()).unwrap();
    assert_ne!(a["source_norm"], b["source_norm"]);
}
