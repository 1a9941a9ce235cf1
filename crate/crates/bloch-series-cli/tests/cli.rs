//! End-to-end runs of the `bloch-series` binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bloch-series"))
        .args(args)
        .current_dir(dir)
        .env_remove("BLOCH_SERIES_JOBS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const DISK: &str = r#"
contrast = 1e4
[[inclusions]]
kind = "disk"
center = [0.5, 0.5]
a = 0.3
b = 0.45
[path]
points = [[1.0, 0.0], [1.0, 1.0]]
[resolution]
preset = "coarse"
"#;

#[test]
fn unknown_key_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{DISK}\nsamples = 3\n"));
    let out = run(&["certify", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("samples"), "{err}");
}

#[test]
fn missing_config_and_bad_preset_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["limit"], dir.path()).status.code(), Some(2));
    let cfg = write_config(dir.path(), "disk.toml", DISK);
    let out = run(&["limit", "--config", &cfg, "--resolution", "ultra"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn limit_certify_and_np_spectrum_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "disk.toml", DISK);
    let out_dir = dir.path().join("results");
    let out_arg = out_dir.to_string_lossy().into_owned();
    for (cmd, file) in [
        ("limit", "limit.csv"),
        ("certify", "certificates.json"),
        ("np-spectrum", "np_spectrum.csv"),
    ] {
        let out = run(&[cmd, "--config", &cfg, "--out", &out_arg, "--jobs", "1"], dir.path());
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join(file).exists(), "{cmd} did not write {file}");
    }
    let stdout = String::from_utf8_lossy(&run(&["certify", "--config", &cfg, "--out", &out_arg], dir.path()).stdout)
        .into_owned();
    assert!(stdout.contains("certificates ->"));
}

#[test]
fn band_writes_csv_json_and_plot_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "disk.toml", DISK);
    let out = run(
        &["band", "--config", &cfg, "--order", "2", "--contrast", "5000"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out_dir = dir.path().join("out");
    let csv = std::fs::read_to_string(out_dir.join("band.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().contains("5.0000000000000000e3"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("series.json")).unwrap()).unwrap();
    let entries = json.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert!(entries.iter().all(|e| e["coeffs"].as_array().unwrap().len() == 3));
    assert!(out_dir.join("band_plot.py").exists());

    // The environment variable supplies the worker count.
    let again = Command::new(env!("CARGO_BIN_EXE_bloch-series"))
        .args(["band", "--config", &cfg, "--order", "2", "--contrast", "5000", "--out", "again"])
        .current_dir(dir.path())
        .env("BLOCH_SERIES_JOBS", "2")
        .output()
        .unwrap();
    assert!(again.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("again/band.csv")).unwrap(), csv);
}

#[test]
fn compare_passes_at_moderate_contrast() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
contrast = 200
[[inclusions]]
kind = "disk"
center = [0.5, 0.5]
a = 0.3
b = 0.45
[path]
points = [[1.0, 0.0]]
[oracle]
cutoff = 12
"#;
    let cfg = write_config(dir.path(), "cmp.toml", text);
    let out = run(&["compare", "--config", &cfg], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("overall: PASS"));
    assert!(dir.path().join("out/compare.csv").exists());
    assert!(dir.path().join("out/compare_plot.py").exists());
}
