use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boiler-fdd"))
}

fn spec(id: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../specs/{id}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["simulate"]).status.code(), Some(2));
}

#[test]
fn simulate_prints_steady_state() {
    let s = spec("vitorond-560");
    let v = stdout_json(&run(&["simulate", "--spec", arg(&s)]));
    let q = v["q_out"].as_f64().unwrap();
    assert!((q - 560e3).abs() / 560e3 < 2e-3, "{q}");

    let fouled = stdout_json(&run(&["simulate", "--spec", arg(&s), "--fault", "fouling:0.26"]));
    assert!(fouled["q_out"].as_f64().unwrap() < q);
}

#[test]
fn domain_errors_exit_with_one() {
    let s = spec("vitorond-560");
    let out = run(&["simulate", "--spec", arg(&s), "--firing", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = run(&["simulate", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_train_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(
        &grid,
        r#"{"firing":[0.5,1.0],"flow_fraction":[0.8,1.2],"t_outdoor":[263.0,283.0],"t_return":[323.0,343.0],"rh":0.65}"#,
    )
    .unwrap();
    let data = dir.path().join("data.csv");
    let s = spec("vitorond-560");
    let out = run(&["sweep", "--spec", arg(&s), "--grid", arg(&grid), "--out", arg(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().count(), 1 + 16 * 31);
    assert!(dir.path().join("data.csv.manifest.json").exists());

    // Same inputs, same bytes.
    let again = dir.path().join("again.csv");
    assert!(run(&["sweep", "--spec", arg(&s), "--grid", arg(&grid), "--out", arg(&again)]).status.success());
    assert_eq!(text, fs::read_to_string(&again).unwrap());

    let hyper = dir.path().join("dt.json");
    fs::write(
        &hyper,
        r#"{"algorithm":"dt","max_depth":[null],"min_samples_leaf":[1],"min_samples_split":[2],"criterion":["gini"],"splitter":["best"]}"#,
    )
    .unwrap();
    let model_dir = dir.path().join("model");
    let out = run(&[
        "train", "--data", arg(&data), "--alg", "dt", "--scheme", "4", "--grid", arg(&hyper), "--folds", "3", "--out",
        arg(&model_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["model.json", "report.json", "grid_scores.json", "confusion.csv", "manifest.json"] {
        assert!(model_dir.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(model_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 0);

    let eval_dir = dir.path().join("eval");
    let out = run(&[
        "evaluate", "--model", arg(&model_dir.join("model.json")), "--data", arg(&data), "--out", arg(&eval_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(eval_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["accuracy"].as_f64().unwrap() > 0.5);
}

#[test]
fn grid_for_the_wrong_algorithm_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let grid = dir.path().join("grid.json");
    fs::write(&grid, r#"{"firing":[1.0],"flow_fraction":[1.0],"t_outdoor":[283.0],"t_return":[333.0],"rh":0.65}"#).unwrap();
    let s = spec("vitorond-320");
    assert!(run(&["sweep", "--spec", arg(&s), "--grid", arg(&grid), "--out", arg(&data)]).status.success());
    let hyper = dir.path().join("knn.json");
    fs::write(&hyper, r#"{"algorithm":"knn","k":[1]}"#).unwrap();
    let out = run(&["train", "--data", arg(&data), "--alg", "dt", "--grid", arg(&hyper), "--out", arg(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration"));
}

#[test]
fn filter_and_ingest_bas_exports() {
    let dir = tempfile::tempdir().unwrap();
    let names = ["HW_RET", "HW_SUP", "HW_FLOW", "P1_VFD", "OAT", "GAS_T", "FLUE_T"];
    let features = ["t_return", "t_supply", "water_flow", "pump_speed", "t_outdoor", "t_fuel", "t_flue"];
    let mut wide = format!("timestamp,{}\n", names.join(","));
    for i in 0..12 {
        let spike = if i == 6 { 500.0 } else { 0.0 };
        wide += &format!(
            "2021-02-01T08:{:02}:00,{},{},{},{},{},{},{}\n",
            5 * i,
            333.0,
            343.0 + spike,
            10.0,
            0.8,
            270.0,
            288.0,
            450.0
        );
    }
    let wide_path = dir.path().join("export.csv");
    fs::write(&wide_path, wide).unwrap();
    let map: serde_json::Map<String, serde_json::Value> =
        names.iter().zip(features).map(|(n, f)| (n.to_string(), f.into())).collect();
    let map_path = dir.path().join("points.json");
    fs::write(&map_path, serde_json::to_string(&map).unwrap()).unwrap();

    let rows = dir.path().join("rows.csv");
    let out = run(&[
        "ingest", "--wide", arg(&wide_path), "--map", arg(&map_path), "--interval", "600", "--boiler-id", "plant-a",
        "--out", arg(&rows),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&rows).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "boiler_id,t_return,t_supply,water_flow,pump_speed,t_outdoor,t_fuel,t_flue");
    // 55 minutes at 10-minute steps.
    assert_eq!(lines.len(), 1 + 6);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(2) == Some("343")));

    let series = dir.path().join("HW_SUP.csv");
    let mut s = String::from("timestamp,value\n");
    for i in 0..9 {
        s += &format!("2021-02-01T08:{:02}:00,{}\n", 5 * i, if i == 4 { 900.0 } else { 343.0 });
    }
    fs::write(&series, s).unwrap();
    let filtered = dir.path().join("HW_SUP.filtered.csv");
    assert!(run(&["filter", "--input", arg(&series), "--out", arg(&filtered)]).status.success());
    let text = fs::read_to_string(&filtered).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(!text.contains("900"));

    let out = run(&["filter", "--input", arg(&series), "--window", "4", "--out", arg(&filtered)]);
    assert_eq!(out.status.code(), Some(1));
}
