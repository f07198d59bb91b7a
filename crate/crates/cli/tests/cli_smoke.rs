//! End-to-end checks of the binary: exit codes, output determinism, and
//! the documented values for the bundled example specs.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meanaction"))
}

fn write_spec(name: &str, body: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("meanaction-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const ROTATION_HALF: &str = r#"{"compose":[{"kind":"rigid","theta0":0.5}]}"#;

#[test]
fn analyze_rotation_half() {
    let spec = write_spec("rot_half.json", ROTATION_HALF);
    let out = bin()
        .args(["analyze", spec.to_str().unwrap(), "--grid", "128,16"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["flux"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["calabi"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(v["hypothesis_main_theorem"], serde_json::json!(true));
    assert_eq!(v["version"].as_str().unwrap(), meanaction_core::VERSION);
}

#[test]
fn wk_example_values() {
    let out = bin()
        .args([
            "ech",
            "wk",
            "--a",
            "1.0906093943398863",
            "--b",
            "1.9093906056601137",
            "--p",
            "3",
            "--kmax",
            "11",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let w: Vec<u64> = v["w"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    assert_eq!(w, vec![0, 4, 5, 12, 13, 14, 15, 25, 26, 27, 28, 30]);
}

#[test]
fn exit_codes() {
    // usage error -> 1
    let out = bin().arg("not-a-command").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // missing file -> structured JSON error on stderr, exit 1
    let out = bin()
        .args(["analyze", "/nonexistent.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].is_string());

    // verification success -> 0
    let out = bin().args(["verify-suite", "--quick"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    // a guard violation is a computational error -> 1 with JSON on stderr
    // (3/1.5 is an exact integer, so the floor guard trips)
    let out = bin()
        .args([
            "ech", "index", "--a", "1.5", "--b", "1.5", "--p", "3", "--mplus", "3", "--mminus", "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("guard"));
}

#[test]
fn byte_identical_output_across_runs_and_thread_counts() {
    let spec = write_spec(
        "twist.json",
        r#"{"compose":[{"kind":"twist","profile":{"type":"polynomial","coeffs":[0.0,0.5]}}]}"#,
    );
    let run = |threads: &str| {
        bin()
            .args([
                "orbits",
                spec.to_str().unwrap(),
                "--qmax",
                "1",
                "--seeds",
                "12,12",
                "--grid",
                "64,8",
                "--format",
                "csv",
            ])
            .env("MEANACTION_THREADS", threads)
            .output()
            .unwrap()
    };
    let a = run("3");
    let b = run("3");
    let c = run("1");
    let d = run("4");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout, "output depends on the worker count");
    assert_eq!(a.stdout, d.stdout, "output depends on the worker count");
}

#[test]
fn orbits_csv_header_is_stable() {
    let spec = write_spec("rot_half2.json", ROTATION_HALF);
    let out = bin()
        .args([
            "orbits",
            spec.to_str().unwrap(),
            "--qmax",
            "2",
            "--seeds",
            "8,8",
            "--grid",
            "64,8",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(
        meta.starts_with("# meanaction "),
        "missing metadata line: {meta}"
    );
    assert_eq!(
        lines.next().unwrap(),
        "period,winding,x0,y0,total_action,mean_action,residual,family_suspected"
    );
    assert!(lines.next().is_some(), "expected at least one orbit row");
}
