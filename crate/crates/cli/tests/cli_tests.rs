//! End-to-end runs of the installed binary: exit-code contract, artifact
//! writing, and byte-level reproducibility of seeded runs.

use std::path::Path;
use std::process::{Command, Output};

fn isodef(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isodef"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn unknown_flag_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = isodef(
        &["deficit", "--config", "x.json", "--frobnicate"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("--frobnicate"), "stderr: {msg}");
}

#[test]
fn missing_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = isodef(&["deficit", "--config", "nope.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));
}

#[test]
fn unsupported_schema_version_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "{\"schema_version\": 99}\n");
    let out = isodef(&["deficit", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema_version"));
}

#[test]
fn deficit_writes_artifact_and_reports_zero_for_an_extremal() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "{\"schema_version\": 1, \"target\": \"phi-affine-e1\"}\n",
    );
    let out = isodef(&["deficit", "--config", &config], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("deficit.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["target"], "phi-affine-e1");
    let delta = json["function_report"]["deficit"].as_f64().unwrap();
    assert!(delta.abs() < 1e-8, "deficit {delta}");
}

#[test]
fn out_flag_redirects_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("artifacts");
    let config = write_config(
        dir.path(),
        "{\"schema_version\": 1, \"target\": \"slab(w=0.5)\"}\n",
    );
    let out = isodef(
        &[
            "deficit",
            "--config",
            &config,
            "--out",
            sub.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(sub.join("deficit.json").is_file());
}

#[test]
fn stability_csv_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "{\"schema_version\": 1, \"family\": \"wedge\", \
         \"parameters\": [0.2, 0.45, 0.7, 0.95, 1.2], \"mc_samples\": 65536}\n",
    );
    let run = |out: &str| {
        let o = isodef(
            &[
                "stability",
                "--config",
                &config,
                "--seed",
                "42",
                "--out",
                out,
            ],
            dir.path(),
        );
        assert_eq!(
            o.status.code(),
            Some(0),
            "stderr: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        std::fs::read(dir.path().join(out).join("stability.csv")).unwrap()
    };
    let first = run("a");
    let second = run("b");
    assert_eq!(
        first, second,
        "same config and seed must reproduce the CSV byte for byte"
    );

    let o = isodef(
        &[
            "stability",
            "--config",
            &config,
            "--seed",
            "43",
            "--out",
            "c",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let third = std::fs::read(dir.path().join("c").join("stability.csv")).unwrap();
    assert_ne!(
        first, third,
        "a different seed must move the Monte Carlo columns"
    );
}

#[test]
fn verify_passes_on_the_zoo_and_writes_the_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "{\"schema_version\": 1, \"mc_samples\": 16384}\n",
    );
    let out = isodef(&["verify", "--config", &config], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("0 assert failures"), "stdout: {stdout}");
    for name in [
        "ledger.jsonl",
        "ledger_summary.csv",
        "ledger_statements.md",
        "verify.json",
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let verify: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap())
            .unwrap();
    assert_eq!(verify["pass"], true);
}
