use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drive-sim"))
}

#[test]
fn run_writes_trace_metrics_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "outer_mode = \"ofo\"\n[scenario]\nkind = \"steady\"\nduration = 0.1\n").unwrap();
    let out = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--plot"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("steady_ofo.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 401);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("steady_ofo.metrics.json")).unwrap()).unwrap();
    assert_eq!(json["metrics"]["rows"], 401);
    assert!(json["metrics"]["convergence"].is_object());
    assert!(dir.path().join("steady_ofo.svg").exists());
}

#[test]
fn invalid_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[ofo]\nt_s = 0.0013\n").unwrap();
    let out = bin().args(["run", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("multiple"));
}

#[test]
fn missing_subcommand_is_an_error() {
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
}

#[test]
fn pqmap_writes_band() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["pqmap", "--out", dir.path().to_str().unwrap(), "--points", "11"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("capacitive reach"));
    let path = stdout.lines().find_map(|l| l.strip_prefix("pqmap")).unwrap().trim().to_owned();
    assert_eq!(std::fs::read_to_string(path).unwrap().lines().count(), 12);
}

#[test]
fn print_schema_succeeds() {
    let out = bin().arg("--print-schema").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("[ofo]"));
}
