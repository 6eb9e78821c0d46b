use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vicsek(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vicsek"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn csv_artifacts_carry_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = vicsek(&["measure"], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let table = fs::read_to_string(out.join("scale_table.csv")).unwrap();
    let first = table.lines().next().unwrap();
    assert!(first.starts_with("# config_sha256="));
    assert_eq!(first.len(), "# config_sha256=".len() + 64);
    let constants: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("constants.json")).unwrap()).unwrap();
    assert_eq!(constants["config_sha256"].as_str().unwrap(), &first["# config_sha256=".len()..]);
}

#[test]
fn unknown_config_field_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"ratios": {"constant": 3}, "vertex_levl": 6}"#);
    let run = vicsek(&["energy", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("vertex_levl"));
}

#[test]
fn vertex_level_too_close_to_depth_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"depth": 4, "vertex_level": 5}"#);
    let run = vicsek(&["besov", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("vertex_level"));
}

#[test]
fn budget_is_checked_before_building() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"ratios": {"constant": 9}, "depth": 4, "vertex_level": 9, "budget": 100000}"#);
    let run = vicsek(&["besov", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn hausdorff_command_on_the_example_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"ratios": {"example_sequence": [3, 5]},
            "hausdorff": {"a": 3, "b": 5, "theta": 1.0, "prefix_length": 10000,
                          "liminf": "plus_infinity", "limsup": "plus_infinity"}}"#,
    );
    let out = dir.path().join("out");
    let run = vicsek(&["hausdorff", "--config", &cfg], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("hausdorff.json")).unwrap()).unwrap();
    let alpha = summary["data"]["alpha"].as_f64().unwrap();
    assert!((alpha - 45f64.ln() / 15f64.ln()).abs() < 1e-12);
    assert_eq!(summary["data"]["measure"], "infinite");
    assert!(summary["data"]["first_eta_violation"].is_null());
}

#[test]
fn hausdorff_without_its_section_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let run = vicsek(&["hausdorff"], &dir.path().join("out"));
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn float_mode_energy_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"p": 1.5, "depth": 3, "vertex_level": 5, "suite_size": 4}"#);
    let out = dir.path().join("out");
    let run = vicsek(&["energy", "--config", &cfg, "--mode", "float"], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("energy_report.json")).unwrap()).unwrap();
    assert_eq!(report["data"]["exact"], false);
}

#[test]
fn missing_subcommand_exits_with_two() {
    let run = Command::new(env!("CARGO_BIN_EXE_vicsek")).output().unwrap();
    assert_eq!(run.status.code(), Some(2));
}
