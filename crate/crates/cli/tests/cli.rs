//! End-to-end runs of the `rodtbc` binary: exit codes, file layout,
//! idempotence, and the human-readable coefficient export.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn steel_config(out: &Path) -> String {
    format!(
        r#"rho = 7860.0
E = 210e9
R = 1e-3
L = 1.0
h = 0.02
tau = 1.6e-4
T = 0.3
bc = "adtbc"
degrees = [4, 4, 8, 8]
const_constraint = false
output_dir = "{}"
"#,
        out.display()
    )
}

fn rodtbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rodtbc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_dir(out: &Path, command: &str) -> PathBuf {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(command))
        .collect();
    assert_eq!(dirs.len(), 1, "expected exactly one {command} run dir");
    dirs.pop().unwrap()
}

#[test]
fn derive_bc_writes_expected_human_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "t1.toml", &steel_config(&out));
    let res = rodtbc(&["derive-bc", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let dir = run_dir(&out, "derive-bc");
    let human = fs::read_to_string(dir.join("coefficients_human.csv")).unwrap();
    let lines: Vec<&str> = human.lines().collect();
    assert_eq!(lines[0], "power,P1,Q1,R1,S1,P2,Q2,R2,S2");
    assert_eq!(
        lines[1],
        "0,1.000000,0.000000,-0.555979,0.278657,0.000000,1.000000,-0.925737,0.301010"
    );
    assert_eq!(
        lines[2],
        "1,-1.039354,-1.064260,0.925512,-0.300505,-0.039239,-1.498177,0.962232,-0.272787"
    );
    assert_eq!(lines.len(), 10); // powers 0..8
    assert!(dir.join("coefficients.csv").exists());
    assert!(dir.join("run_manifest.json").exists());
    let manifest = fs::read_to_string(dir.join("run_manifest.json")).unwrap();
    assert!(manifest.contains("\"derivation_report\""));
    assert!(manifest.contains("coefficients.csv"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "t1.toml", &steel_config(&out));
    assert!(rodtbc(&["derive-bc", "--config", cfg.to_str().unwrap()]).status.success());
    let dir = run_dir(&out, "derive-bc");
    let first = fs::read(dir.join("coefficients.csv")).unwrap();
    assert!(rodtbc(&["derive-bc", "--config", cfg.to_str().unwrap()]).status.success());
    let second = fs::read(dir.join("coefficients.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn missing_key_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let broken = steel_config(&out).replace("tau = 1.6e-4\n", "");
    let cfg = write_config(tmp.path(), "broken.toml", &broken);
    let res = rodtbc(&["derive-bc", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn degree_parity_mismatch_exits_2_and_names_m() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = steel_config(&out).replace("const_constraint = false", "const_constraint = true");
    let cfg = write_config(tmp.path(), "parity.toml", &body);
    let res = rodtbc(&["derive-bc", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("M = 28") && err.contains("odd"), "stderr: {err}");
}

#[test]
fn regime_violation_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // tau below R*sqrt(rho/E) ~ 1.93e-7: |epsilon| >= 1, no derivation
    let body = steel_config(&out)
        .replace("tau = 1.6e-4", "tau = 1e-7")
        .replace("T = 0.3", "T = 1e-5");
    let cfg = write_config(tmp.path(), "regime.toml", &body);
    let res = rodtbc(&["derive-bc", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn divergence_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // far above the upper stability parabola; blows up around step 42000
    let body = steel_config(&out)
        .replace("tau = 1.6e-4", "tau = 3.2e-3")
        .replace("T = 0.3", "T = 250.0");
    let cfg = write_config(tmp.path(), "diverge.toml", &body);
    let res = rodtbc(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(4), "{}", String::from_utf8_lossy(&res.stderr));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("diverged at step"), "stderr: {err}");
}

#[test]
fn simulate_with_frames_writes_expected_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = steel_config(&out).replace("T = 0.3", "T = 0.016"); // 100 steps
    let cfg = write_config(tmp.path(), "short.toml", &body);
    let res = rodtbc(&["simulate", "--frames", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let dir = run_dir(&out, "simulate");
    let frames = fs::read_to_string(dir.join("frames_adtbc_4-4-8-8.csv")).unwrap();
    assert_eq!(frames.lines().count(), 1 + 101 * 51);
    let norms = fs::read_to_string(dir.join("norms_adtbc_4-4-8-8.csv")).unwrap();
    assert_eq!(norms.lines().count(), 1 + 101);
    assert!(norms.lines().nth(1).unwrap().starts_with("0,"));
}

#[test]
fn compare_emits_error_files_for_all_bcs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "t1.toml", &steel_config(&out));
    let res = rodtbc(&["compare", "--nt", "60", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let dir = run_dir(&out, "compare");
    for name in [
        "reference_norms.csv",
        "errors_adtbc_4-4-8-8.csv",
        "errors_dirichlet_neumann.csv",
        "errors_dirichlet_moment.csv",
        "errors_free_free.csv",
        "heatmap_adtbc_4-4-8-8.csv",
        "run_manifest.json",
    ] {
        assert!(dir.join(name).exists(), "missing {name}");
    }
    let errors = fs::read_to_string(dir.join("errors_adtbc_4-4-8-8.csv")).unwrap();
    assert!(errors.lines().next().unwrap() == "t,log10_H,log10_C,log10_L2");
    assert_eq!(errors.lines().count(), 1 + 61);
}

#[test]
fn scan_writes_map_even_when_fit_is_impossible() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let body = format!(
        "{}\n[scan]\nnh = 3\nntau = 3\nnt = 40\n",
        steel_config(&out)
    );
    let cfg = write_config(tmp.path(), "scan.toml", &body);
    let res = rodtbc(&["scan", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let dir = run_dir(&out, "scan");
    let map = fs::read_to_string(dir.join("stability_map.csv")).unwrap();
    assert_eq!(
        map.lines().next().unwrap(),
        "h,tau,bc_exists,stable_energy,stable_C,stable_L2,first_violation_step"
    );
    assert_eq!(map.lines().count(), 1 + 9);
    // 3 columns cannot support a parabola fit; the run still succeeds
    let manifest = fs::read_to_string(dir.join("run_manifest.json")).unwrap();
    assert!(manifest.contains("parabola fit unavailable"));
}

#[test]
fn check_cauchy_reports_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "t1.toml", &steel_config(&out));
    let res = rodtbc(&["check-cauchy", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("PASS"), "stdout: {stdout}");
    let dir = run_dir(&out, "check-cauchy");
    let report = fs::read_to_string(dir.join("cauchy_report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next().unwrap(), "max_modulus,modulus_at_zero,threshold,pass");
    assert!(lines.next().unwrap().ends_with("true"));
}

#[test]
fn constrained_run_warns_when_initial_integral_is_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let base = steel_config(&out)
        .replace("degrees = [4, 4, 8, 8]", "degrees = [4, 5, 8, 8]")
        .replace("const_constraint = false", "const_constraint = true")
        .replace("T = 0.3", "T = 0.016");
    // shifted profile: integral over the segment no longer vanishes
    let shifted = format!("{base}u0_shift = 0.1\n");
    let cfg = write_config(tmp.path(), "shifted.toml", &shifted);
    let res = rodtbc(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("warning") && err.contains("integral"), "stderr: {err}");

    // centred profile: odd data, integral vanishes, no warning
    let cfg = write_config(tmp.path(), "centred.toml", &base);
    let res = rodtbc(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(!err.contains("warning"), "stderr: {err}");
}

#[test]
fn out_flag_overrides_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let configured = tmp.path().join("configured");
    let replaced = tmp.path().join("replaced");
    let cfg = write_config(tmp.path(), "t1.toml", &steel_config(&configured));
    let res = rodtbc(&[
        "check-cauchy",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        replaced.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert!(!configured.exists());
    assert!(replaced.exists());
}
