use std::path::Path;
use std::process::Command;

use ricci_jet::cli::suite::{CANNED_FAIL, CANNED_MALFORMED, CANNED_PASS};
use ricci_jet::cli::main_with;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["ricci-jet"];
    full.extend_from_slice(args);
    let code = main_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text, want) in [("p.toml", CANNED_PASS, 0), ("f.toml", CANNED_FAIL, 1), ("m.toml", CANNED_MALFORMED, 2)] {
        let path = write(dir.path(), name, text);
        let status = Command::new(env!("CARGO_BIN_EXE_ricci-jet"))
            .args(["--config", &path])
            .output()
            .unwrap()
            .status;
        assert_eq!(status.code(), Some(want), "{name}");
    }
}

#[test]
fn machine_output_and_out_file_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", CANNED_PASS);
    let out_path = dir.path().join("report.json");
    let (code, stdout, _) = call(&["--config", &cfg, "--format", "machine", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let file = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(stdout, file);
    let v: serde_json::Value = serde_json::from_str(&file).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["engine"]["conventions"]["kappa"], -0.5);
    assert_eq!(v["checks"][0]["name"], "bianchi");
    assert_eq!(v["checks"][0]["points_evaluated"], 40);
}

#[test]
fn human_output_names_the_worst_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "f.toml", CANNED_FAIL);
    let (code, stdout, _) = call(&["--config", &cfg]);
    assert_eq!(code, 1);
    assert!(stdout.contains("soliton_residual"));
    assert!(stdout.contains("worst at ("));
    assert!(stdout.contains("overall: FAIL"));
}

#[test]
fn malformed_config_reports_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.toml", CANNED_MALFORMED);
    let (code, _, err) = call(&["--config", &cfg]);
    assert_eq!(code, 2);
    assert!(err.contains("checks[1]"), "{err}");
    let cfg = write(dir.path(), "s.toml", "format_version = [");
    assert_eq!(call(&["--config", &cfg]).0, 2);
    assert_eq!(call(&["--config", "/nonexistent/x.toml"]).0, 2);
    assert_eq!(call(&["--bogus-flag"]).0, 2);
}

#[test]
fn tolerance_override_can_flip_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "f.toml", CANNED_FAIL);
    assert_eq!(call(&["--config", &cfg, "--tolerance", "soliton_residual=10"]).0, 0);
    assert_eq!(call(&["--config", &cfg, "--tolerance", "soliton_residual=oops"]).0, 2);
}

#[test]
fn seed_override_changes_points_not_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", CANNED_PASS);
    let a = call(&["--config", &cfg, "--format", "machine", "--seed", "1"]);
    let b = call(&["--config", &cfg, "--format", "machine", "--seed", "2"]);
    let c = call(&["--config", &cfg, "--format", "machine", "--seed", "1"]);
    assert_eq!(a, c);
    assert_ne!(a.1, b.1);
    assert_eq!(a.0, b.0);
}

#[test]
fn suite_subcommand_filters_rows() {
    let (code, stdout, _) = call(&["suite", "--filter", "cotton", "--format", "machine"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let ids: Vec<&str> = v["rows"].as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["cotton.kappa", "cotton.proportionality"]);
    let (code, _, _) = call(&["suite", "--filter", "walker.riemann"]);
    assert_eq!(code, 1);
}

#[test]
fn checks_listing_and_help() {
    let (code, stdout, _) = call(&["checks"]);
    assert_eq!(code, 0);
    assert!(stdout.lines().any(|l| l.starts_with("walker_system")));
    assert!(stdout.contains("diagnostic"));
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn shipped_configs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (name, want) in [
        ("quadratic_neutral.toml", 0),
        ("walker_generic.toml", 0),
        ("walker_nonsteady.toml", 1),
        ("sss.toml", 0),
        ("warped_sphere.toml", 0),
    ] {
        let path = dir.join(name);
        let (code, stdout, err) = call(&["--config", path.to_str().unwrap()]);
        assert_eq!(code, want, "{name}: {err}{stdout}");
    }
}
