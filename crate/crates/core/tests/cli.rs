mod common;

use std::process::Command;

use common::config_path;

fn gammalab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gammalab"))
}

#[test]
fn lists_six_experiments() {
    let out = gammalab().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("E5") && text.contains("h_convergence"));
}

#[test]
fn validate_reports_schedule() {
    let out = gammalab()
        .args(["validate", "--config"])
        .arg(config_path("e3_mollification.json"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("E3 mollification_rate: ok"));
    assert!(text.contains("sigma(h)"));
}

#[test]
fn validate_fails_on_unresolvable_h() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"experiment":"E3","family":{"name":"degenerate_2d"},
            "grid":{"lo":[0,0],"hi":[1,1],"res":[16,16]},"h_values":[1,100000]}"#,
    )
    .unwrap();
    let out = gammalab().args(["validate", "--config"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("error"));
}

#[test]
fn run_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e1.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"rayleigh_convergence","family":{"name":"degenerate_2d"},
            "grid":{"lo":[0,0],"hi":[1,1],"res":[16,16]},"h_values":[1,2,4]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    std::fs::create_dir(&out_dir).unwrap();
    let out = gammalab()
        .args(["run", "--experiment", "E1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("E1_rayleigh_convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("h,value,reference,abs_error,rel_error"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn run_rejects_mismatched_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let out = gammalab()
        .args(["run", "--experiment", "E2", "--config"])
        .arg(config_path("e1_rayleigh.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = gammalab()
        .args(["run", "--experiment", "E1", "--format", "xml", "--config"])
        .arg(config_path("e1_rayleigh.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}
