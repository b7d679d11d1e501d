use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dcform"))
}

fn repo(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(p)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn reference() -> Value {
    serde_json::from_str(&std::fs::read_to_string(repo("scenarios/reference.json")).unwrap()).unwrap()
}

fn write_scenario(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn labels(csv: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega_rad_s,mag_abs,mag_db,phase_deg,label"));
    lines.map(|l| l.rsplit(',').next().unwrap().to_string()).collect()
}

fn custom(z_num: f64) -> Value {
    let mut v = reference();
    v["controller"] = serde_json::json!({"kind": "custom", "k_d": 1.0, "z_out": {"num": [z_num], "den": [1.0]}});
    v
}

#[test]
fn desired_profile_is_grid_forming_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["sweep", "--scenario", repo("scenarios/desired.json").to_str().unwrap(), "--out", out, "--indices", "oii"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let l = labels(&dir.path().join("desired_oii.csv"));
    assert_eq!(l.len(), 400);
    assert!(l.iter().all(|s| s == "grid_forming"));
}

#[test]
fn open_capacitor_branch_is_current_following() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v["controller"] = serde_json::json!({"kind": "desired", "k_d": 1.0});
    v["converter"]["c_dc"] = 0.0.into();
    let sc = write_scenario(dir.path(), "ydc0.json", &v);
    let o = run(&["sweep", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--indices", "cfi"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(labels(&dir.path().join("desired_cfi.csv")).iter().all(|s| s == "current_following"));
}

#[test]
fn batch_sweep_writes_every_file_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "sweep",
        "--scenario",
        repo("scenarios/reference.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--controllers",
        "all",
    ]);
    assert_eq!(code(&o), 0);
    for k in ["iv_droop", "vi_droop_if", "vi_droop_io", "vi_droop_zd", "vdcm"] {
        for i in ["oii", "cfi", "vfi"] {
            assert_eq!(labels(&dir.path().join(format!("{k}_{i}.csv"))).len(), 400);
        }
    }
    // Same inputs, same bytes.
    let first = std::fs::read(dir.path().join("vdcm_oii.csv")).unwrap();
    run(&["sweep", "--scenario", repo("scenarios/reference.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--controllers", "vdcm"]);
    assert_eq!(first, std::fs::read(dir.path().join("vdcm_oii.csv")).unwrap());
}

#[test]
fn classify_resistors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let sc = write_scenario(dir.path(), "r1.json", &custom(1.0));
    let o = run(&["classify", "--scenario", sc.to_str().unwrap(), "--out", out, "--indices", "oii"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("OII: grid_forming on [1, 62831.8531] rad/s"), "{text}");
    assert!(text.contains("passivity condition (i): pass"), "{text}");
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("custom_classify.json")).unwrap()).unwrap();
    assert_eq!(json["passivity"]["source"]["pass"], true);

    let sc = write_scenario(dir.path(), "r2.json", &custom(2.0));
    let o = run(&["classify", "--scenario", sc.to_str().unwrap(), "--out", out, "--indices", "oii"]);
    assert!(stdout(&o).contains("OII: disturbance_amplifying on [1, 62831.8531] rad/s"));
}

#[test]
fn classify_reference_shows_resonance_band() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["classify", "--scenario", repo("scenarios/reference.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let oii = text.lines().find(|l| l.trim_start().starts_with("OII:")).unwrap();
    assert!(oii.contains("disturbance_amplifying") && oii.contains("grid_forming"), "{oii}");
    assert!(text.contains("passivity condition (ii): pass"));
}

#[test]
fn simulate_without_event_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = reference();
    v["sim"]["events"] = serde_json::json!([]);
    v["sim"]["t_end"] = 0.02.into();
    let sc = write_scenario(dir.path(), "flat.json", &v);
    let o = run(&["simulate", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(
        metrics,
        "controller,undershoot_V,overshoot_V,settling_time_s,steady_state_deviation_V\nvi_droop_io,0,0,0,0\n"
    );
    let trace = std::fs::read_to_string(dir.path().join("vi_droop_io_trace.csv")).unwrap();
    let mut rows = trace.lines();
    assert_eq!(rows.next(), Some("time_s,v_dc_V,i_f_A,i_o_A,i_c_A,v_g1_V,v_g2_V"));
    assert!(rows.all(|r| r.split(',').nth(1) == Some("700")));
}

#[test]
fn simulate_desired_source_droops() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--scenario", repo("scenarios/desired.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let row: Vec<f64> = metrics.lines().nth(1).unwrap().split(',').skip(1).map(|x| x.parse().unwrap()).collect();
    let trace = std::fs::read_to_string(dir.path().join("desired_trace.csv")).unwrap();
    let io: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    let di = io.last().unwrap() - io[0];
    assert!((row[0] / di - 1.0).abs() < 0.02, "undershoot {} vs K_d dI {di}", row[0]);
}

#[test]
fn verify_reference_and_faults() {
    let dir = tempfile::tempdir().unwrap();
    let sc = repo("scenarios/reference.json");
    let base = ["verify", "--scenario", sc.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--controllers", "vi_droop_zd"];
    let o = run(&base);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(!stdout(&o).contains("fail"));

    let mut args = base.to_vec();
    args.extend(["--tol", "1e-12"]);
    let o = run(&args);
    assert_eq!(code(&o), 4);
    let row = stdout(&o).lines().find(|l| l.contains("injection_magnitude")).unwrap().to_string();
    assert!(row.ends_with("fail") || row.trim_end().ends_with("fail"), "{row}");

    let mut args = base.to_vec();
    args.extend(["--debug-scale-zout", "2"]);
    let o = run(&args);
    assert_eq!(code(&o), 4);
    let row = stdout(&o).lines().find(|l| l.contains("oii_cfi_identity")).unwrap().to_string();
    assert!(row.trim_end().ends_with("fail"), "{row}");
}

#[test]
fn plot_outputs_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    run(&["sweep", "--scenario", repo("scenarios/reference.json").to_str().unwrap(), "--out", out, "--controllers", "all", "--indices", "oii"]);
    let one = dir.path().join("vdcm_oii.csv");
    let plots = dir.path().join("plots");
    let o = run(&["plot", one.to_str().unwrap(), "--out", plots.to_str().unwrap(), "--omega-bi", "8796"]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_dir(&plots).unwrap().count(), 1);
    assert!(std::fs::read_to_string(plots.join("vdcm_oii.svg")).unwrap().starts_with("<svg"));

    let all: Vec<String> = ["iv_droop", "vi_droop_if", "vi_droop_io", "vi_droop_zd", "vdcm"]
        .iter()
        .map(|k| dir.path().join(format!("{k}_oii.csv")).to_string_lossy().into_owned())
        .collect();
    let mut args = vec!["plot", "--out", plots.to_str().unwrap()];
    args.extend(all.iter().map(String::as_str));
    assert_eq!(code(&run(&args)), 0);
    assert!(plots.join("comparison_index.svg").exists());

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&run(&["plot", empty.to_str().unwrap(), "--out", out])), 2);
}

#[test]
fn input_and_model_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let mut v = reference();
    v["controller"]["gain"] = 1.0.into();
    let sc = write_scenario(dir.path(), "unknown.json", &v);
    assert_eq!(code(&run(&["sweep", "--scenario", sc.to_str().unwrap(), "--out", out])), 2);

    let mut v = reference();
    v["converter"]["v_in"] = 900.0.into();
    let sc = write_scenario(dir.path(), "buck.json", &v);
    assert_eq!(code(&run(&["sweep", "--scenario", sc.to_str().unwrap(), "--out", out])), 3);

    let sc = repo("scenarios/reference.json");
    assert_eq!(code(&run(&["sweep", "--scenario", sc.to_str().unwrap(), "--out", out, "--controllers", "droop"])), 2);
    assert_eq!(code(&run(&["sweep", "--scenario", "/does/not/exist.json"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);

    let o = bin()
        .args(["sweep", "--scenario", sc.to_str().unwrap(), "--out", out])
        .env("DCFORM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = bin()
        .args(["sweep", "--scenario", sc.to_str().unwrap(), "--out", out])
        .env("DCFORM_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
}
