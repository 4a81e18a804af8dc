use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lightlike"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const SQUARE: &str = r#"{"polygon": [[0,0],[3.141592653589793,0],[3.141592653589793,3.141592653589793],[0,3.141592653589793]],
    "sampling": {"resolution": 10, "chart_resolution": 10}}"#;

#[test]
fn classify_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq.json", SQUARE);
    let out = bin().args(["classify", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valency"], 4);
    assert_eq!(v["in_class"], true);
}

#[test]
fn check_js_exit_code_on_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rect.json", r#"{"polygon": [[0,0],[2,0],[2,1],[0,1]]}"#);
    let out = bin().args(["check-js", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(11));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passes"], false);
}

#[test]
fn solve_reports_jumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq.json", SQUARE);
    let out = bin().args(["solve", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["converged"], true);
    assert_eq!(v["jumps"].as_array().unwrap().len(), 4);
}

#[test]
fn build_triply_and_check_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq.json", SQUARE);
    let out = bin()
        .args([
            "build", "--mode", "triply", "--radius", "10", "--sheets", "3", "--name", "scherk", "--config",
        ])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "scherk.obj",
        "scherk.json",
        "scherk_periodic.obj",
        "scherk_periodic.json",
        "scherk_report.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("scherk_report.json")).unwrap()).unwrap();
    assert_eq!(report["lattice"]["generators"].as_array().unwrap().len(), 3);
    let out = bin()
        .arg("check-mesh")
        .arg(dir.path().join("scherk_periodic.obj"))
        .args(["--surface", "S3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .arg("check-mesh")
        .arg(dir.path().join("scherk_periodic.obj"))
        .args(["--surface", "H"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(17));
}

#[test]
fn periodic_mode_without_radius_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq.json", SQUARE);
    let out = bin()
        .args(["verify", "--mode", "doubly", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius"));
}

#[test]
fn verify_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq.json", SQUARE);
    let out = bin().args(["verify", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(v["tolerances"]["tol_newton"].is_number());
}

#[test]
fn triangle_rejected_with_stage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "tri.json", r#"{"polygon": [[0,0],[1,0],[0,1]]}"#);
    let out = bin()
        .args(["build", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(11));
    assert!(!dir.path().join("surface.obj").exists());
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for e in std::fs::read_dir(root).unwrap() {
        let p = e.unwrap().path();
        lightlike::pipeline::PipelineConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn export_writes_meshes_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq.json", SQUARE);
    let out = bin()
        .args(["export", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("surface.obj").exists());
    assert!(dir.path().join("surface.json").exists());
    assert!(!dir.path().join("surface_report.json").exists());
}
