use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_varlebesgue"))
}

#[test]
fn verify_writes_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["verify", "one-third", "--seed", "0", "--threads", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("one-third.csv")).unwrap();
    assert!(csv.starts_with("case,family,dim,half_width,cell_exponent,metric,value\n"));
    let json = std::fs::read_to_string(dir.path().join("one-third.json")).unwrap();
    let report: varlebesgue::experiments::Report = serde_json::from_str(&json).unwrap();
    assert!(report.pass);
    assert!(String::from_utf8_lossy(&out.stdout).contains("one-third (seed 0): PASS"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut cfg = varlebesgue::experiments::ScenarioConfig::default_for(varlebesgue::experiments::Scenario::CzdVerify);
    cfg.czd.base = Some(2.0);
    std::fs::write(&path, cfg.to_json()).unwrap();
    let out = bin().args(["verify", "czd-verify", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("czd.base"));

    let out = bin().args(["verify", "no-such-scenario"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_checks_exit_one() {
    let out = bin()
        .args(["sio", "--kernel", "singular", "--cell-exponent", "4", "--samples", "2000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["bounds_pass"], false);
}

#[test]
fn tool_subcommands_run() {
    let out = bin().args(["norm", "--p", "piecewise:1.5,3"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["norm"].as_f64().unwrap() > 0.0);

    let out = bin()
        .args(["apconst", "--w", "const:1", "--w2", "const:1", "--p2", "const:3", "--cell-exponent", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["vec_ap_constant"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let out = bin().args(["maxop", "--bilinear", "--all-intervals", "--cell-exponent", "3"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 33);

    let out = bin().args(["czd", "--json", "--case", "1"]).output().unwrap();
    assert!(out.status.success());
    let _: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
}
