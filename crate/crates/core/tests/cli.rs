use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mm-pmbm"))
}

fn shipped() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference_scenario.toml")
}

#[test]
fn validate_shipped_config() {
    let out = bin()
        .args(["--mode", "validate-config", "--config"])
        .arg(shipped())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn nonexistent_config_exits_2() {
    let out = bin().args(["--config", "/no/such/file.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.toml"));
}

#[test]
fn invalid_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(shipped()).unwrap().replace("clutter_rate = 10.0", "clutter_rate = -1.0");
    std::fs::write(&path, text).unwrap();
    let out = bin().arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario.clutter_rate"));
}

#[test]
fn sweep_pd_table_has_eight_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--mode", "sweep-pd", "--runs", "1", "--seed", "5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let header = stdout.lines().find(|l| l.starts_with("p_D")).unwrap();
    assert_eq!(header.split_whitespace().count(), 1 + 8);
    for name in ["traces.csv", "aggregate.txt", "summary.json", "ospa.svg", "cardinality.svg"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let csv = std::fs::read_to_string(dir.path().join("traces.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8 * 60);
}
