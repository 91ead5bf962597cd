use std::path::Path;
use std::process::{Command, Output};

fn epflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epflow")).args(args).current_dir(cwd).output().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let out = epflow(&["solve", "--bogus", "3"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "n = 8\nwidth = 2\n").unwrap();
    let out = epflow(&["solve", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("width"));
}

#[test]
fn invalid_values_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [["--s", "2.5"], ["--dt", "0"], ["--n", "14"]] {
        let mut a = vec!["solve"];
        a.extend(args);
        let out = epflow(&a, tmp.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn small_solve_writes_everything() {
    let tmp = tempfile::tempdir().unwrap();
    let out = epflow(
        &["solve", "--n", "8", "--T", "0.05", "--dt", "0.01", "--output_every", "1", "--output", "run"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("run");
    for f in [
        "config.txt",
        "manifest.json",
        "rho_bar_0.eplf",
        "u_0.eplf",
        "diagnostics_eulerian.csv",
        "diagnostics_lagrangian.csv",
        "u_T_eulerian.eplf",
        "w_T.eplf",
        "v_T.eplf",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let csv = std::fs::read_to_string(dir.join("diagnostics_eulerian.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    let g = epflow_core::GridSpec::periodic(8).unwrap();
    let u = epflow_cli::snapshot::read_vector(&dir.join("u_0.eplf"), &g).unwrap();
    assert_eq!(u.grid().n(), 8);
    let m = manifest(&dir);
    assert_eq!(m["success"], true);
    assert_eq!(m["config"]["n"], 8);
}

#[test]
fn json_config_and_override_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{"n": 16, "T": 0.02, "dt": 0.01, "formulation": "eulerian", "output": "j"}"#).unwrap();
    let out = epflow(&["solve", "--config", cfg.to_str().unwrap(), "--n", "8"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&tmp.path().join("j"));
    assert_eq!(m["config"]["n"], 8);
    assert!(!tmp.path().join("j/w_T.eplf").exists());
}

#[test]
fn injected_failure_exits_nonzero_and_keeps_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = epflow(&["selftest", "--criteria", "1", "--inject", "1", "--output", "st"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("criterion  1 FAIL"), "{stdout}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed criteria: 1 ("));
    let m = manifest(&tmp.path().join("st"));
    assert_eq!(m["success"], false);
    assert!(m["error"].as_str().unwrap().contains("failed criteria: 1 ("));
}

#[test]
fn selftest_single_criterion_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = epflow(&["selftest", "--criteria", "1", "--output", "st"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(tmp.path().join("st/acceptance.csv").is_file());
}
