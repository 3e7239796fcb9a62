//! End-to-end tests of the command-line interface: exit codes, artifact
//! layout, and byte-level determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tauloc"))
}

fn tmp_dir(tag: &str) -> tempfile::TempDir {
    tempfile::Builder::new().prefix(tag).tempdir().unwrap()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn verify_passes_with_defaults() {
    let dir = tmp_dir("tauloc-verify");
    let out = bin()
        .args(["verify", "--out"])
        .arg(dir.path())
        .args(["--set", "verify.grid_n=24", "--set", "verify.points=4"])
        .args(["--set", "verify.reconstruction=false"])
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.code() == Some(0),
        "exit {:?}\n{stdout}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
    assert!(dir.path().join("verify.csv").exists());
    assert!(dir.path().join("verify.json").exists());
}

#[test]
fn verify_fails_with_left_ordering() {
    // deliberately wrong product ordering: the decomposition check must fail
    let dir = tmp_dir("tauloc-left");
    let out = bin()
        .args(["verify", "--out"])
        .arg(dir.path())
        .args(["--set", "verify.ordering=left", "--set", "verify.grid_n=16"])
        .args(["--set", "verify.points=2"])
        .args(["--set", "verify.reconstruction=false", "--set", "verify.position_povm=false"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL operators.nw_decomposition"));
}

#[test]
fn missing_config_exits_2_without_artifacts() {
    let dir = tmp_dir("tauloc-noconf");
    let out = bin()
        .args(["verify", "--config", "/nonexistent/path.cfg", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("verify.csv").exists());
    // diagnostics go to stderr as JSON
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"kind\""), "{stderr}");
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_bump_exits_3_with_diagnostic() {
    let dir = tmp_dir("tauloc-bigbump");
    let cfg = write_config(dir.path(), "heg.radius = 50.0\n");
    let out = bin()
        .args(["heg-leakage", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("localization-failure"), "{stderr}");
}

#[test]
fn state_io_roundtrip_is_bit_exact() {
    let dir = tmp_dir("tauloc-stateio");
    let cfg = write_config(dir.path(), "grid.n = 8\ngrid.pi_max = 4\nstate.sigma = 0.5\n");
    let out = bin()
        .args(["state-io", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("state.bin").exists());
    assert!(dir.path().join("state.json").exists());
    assert!(dir.path().join("state_io.csv").exists());
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    let dir_a = tmp_dir("tauloc-det-a");
    let dir_b = tmp_dir("tauloc-det-b");
    let cfg_body = "classical.points = 6\nclassical.seed = 11\n";
    let cfg_a = write_config(dir_a.path(), cfg_body);
    let cfg_b = write_config(dir_b.path(), cfg_body);
    for (cfg, dir) in [(&cfg_a, &dir_a), (&cfg_b, &dir_b)] {
        let out = bin()
            .args(["classical-check", "--config"])
            .arg(cfg)
            .arg("--out")
            .arg(dir.path())
            .args(["--threads", "2"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir_a.path().join("classical_check.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("classical_check.csv")).unwrap();
    assert_eq!(a, b);
    // sidecar carries the config hash
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir_a.path().join("classical_check.json")).unwrap())
            .unwrap();
    assert!(sidecar["metadata"]["config_hash"].as_str().unwrap().len() == 16);
}

#[test]
fn kijowski_arrival_writes_scan() {
    let dir = tmp_dir("tauloc-kij");
    let cfg = write_config(
        dir.path(),
        "grid.n1 = 24\ngrid.n2 = 24\ngrid.n3 = 96\n\
         grid.pi_max1 = 0.75\ngrid.pi_max2 = 0.75\ngrid.pi_max3 = 4.0\n\
         grid.kijowski_safe = true\n\
         state.center3 = 2.0\nstate.sigma = 0.12\n\
         kij.n_z = 5\nkij.n_s = 384\n",
    );
    let out = bin()
        .args(["kijowski-arrival", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("kijowski_arrival.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6); // header + 5 rows
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("kijowski_arrival.json")).unwrap())
            .unwrap();
    let rel = sidecar["metadata"]["defects"]["slope_relative_error"].as_f64().unwrap();
    assert!(rel < 1e-6, "slope mismatch {rel}");
}

#[test]
fn time_povm_emits_distribution_and_spread() {
    let dir = tmp_dir("tauloc-tpovm");
    let cfg = write_config(
        dir.path(),
        "povm.n_r = 1024\npovm.l_max = 2\npovm.n_t = 401\npovm.bump_radii = 1.0\n",
    );
    let out = bin()
        .args(["time-povm", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("time_povm.json")).unwrap())
            .unwrap();
    assert!(sidecar["metadata"]["defects"]["delta_t"].as_f64().unwrap() > 1e-6);
    let spread = std::fs::read_to_string(dir.path().join("temporal_spread.csv")).unwrap();
    assert_eq!(spread.lines().count(), 2); // header + one radius
}

#[test]
fn nw_density_reports_unit_probability() {
    let dir = tmp_dir("tauloc-nwd");
    let cfg = write_config(dir.path(), "grid.n = 32\ngrid.pi_max = 8\nstate.sigma = 0.8\nnw.t = 0.5\n");
    let out = bin()
        .args(["nw-density", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("nw_density.json")).unwrap())
            .unwrap();
    let defect = sidecar["metadata"]["defects"]["total_probability_defect"].as_f64().unwrap();
    assert!(defect < 1e-6, "probability defect {defect}");
}
