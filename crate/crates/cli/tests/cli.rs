//! End-to-end runs of the binary: exit codes, flags, and report formats.

use std::path::{Path, PathBuf};
use std::process::Output;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn vardescent(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_vardescent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(command: &str, file: &str, extra: &[&str]) -> Output {
    let path = fixture(file);
    let mut args = vec![command, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    vardescent(&args)
}

#[test]
fn verify_passes_on_flagship() {
    let out = run_on("verify", "theta1.json", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ALL CHECKS PASSED"), "{text}");
}

#[test]
fn theorem1_prints_source_form() {
    let out = run_on("theorem1", "theta1.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("(-1 - u_tt) * theta(u,[]) ^ dx(t)"), "{text}");
}

#[test]
fn check_failure_exits_one() {
    let out = run_on("verify", "synth2_broken.json", &[]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("2/3"), "{text}");
}

#[test]
fn input_errors_exit_two() {
    let out = vardescent(&["verify", "/nonexistent/problem.json"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run_on("wobble", "theta1.json", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown command"));

    let bad = std::env::temp_dir().join("vardescent_bad_fixture.json");
    std::fs::write(&bad, "{\"name\": 3}").unwrap();
    let out = vardescent(&["verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_infeasibility_exits_three() {
    // densities whose overlap difference has no horizontal primitive
    let text = std::fs::read_to_string(fixture("theta1.json")).unwrap();
    let broken = text
        .replace("\"U0\": \"1/2*u_t^2 + t*u_t\"", "\"U0\": \"1/2*u_t^2 + t*u_t + u\"")
        .replace("\"cocycle\": {\n    \"components\": {\"1\": {\"0,2\": \"-2*pi*u\"}}\n  },\n  ", "");
    assert!(!broken.contains("cocycle"), "fixture edit must drop the precomputed components");
    let path = std::env::temp_dir().join("vardescent_infeasible.json");
    std::fs::write(&path, broken).unwrap();
    let out = vardescent(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn action_with_flags() {
    let out = run_on("action", "theta1.json", &["--quad-order", "20", "--format", "machine"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let s = doc["values"]["action"].as_f64().unwrap();
    assert!((s - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
}

#[test]
fn convention_flag_discriminates() {
    let out = run_on("verify", "theta2.json", &["--convention", "cech-degree"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let out = run_on("verify", "theta2.json", &["--convention", "deligne-degree"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run_on("sign-audit", "theta2.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("deligne-degree"), "{text}");
}

#[test]
fn report_file_and_determinism() {
    let report_a = std::env::temp_dir().join("vardescent_report_a.json");
    let report_b = std::env::temp_dir().join("vardescent_report_b.json");
    let path = fixture("theta1.json");
    for (report, _) in [(&report_a, 0), (&report_b, 1)] {
        let out = vardescent(&[
            "theorem1",
            path.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let strip = |p: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timing_ms");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip(&report_a), strip(&report_b));
}

#[test]
fn on_shell_command() {
    let out = run_on("on-shell", "poisson2.json", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn euler_lagrange_command() {
    let out = run_on("euler-lagrange", "poisson2.json", &["--format", "machine"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let source = doc["values"]["source_form.U0"].as_str().unwrap();
    assert!(source.contains("theta(u,[]) ^ dx(x) ^ dx(y)"), "{source}");
}
