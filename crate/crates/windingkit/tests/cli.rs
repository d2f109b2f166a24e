//! Command-line behaviour: exit codes, output layout, manifest and reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_windingkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_cmd(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--out", out.to_str().unwrap()]).status.code(), Some(1));

    let missing = tmp.path().join("missing.json");
    assert_eq!(run_cmd("sweep", &missing, &out, &[]).status.code(), Some(1));

    let bad_json = write_config(tmp.path(), "{ not json");
    assert_eq!(run_cmd("sweep", &bad_json, &out, &[]).status.code(), Some(1));

    let unknown = write_config(
        tmp.path(),
        r#"{"geometry": {"cws": {"major_radius": 3.0, "minor_radius": 1.0}}, "colour": 1}"#,
    );
    assert_eq!(run_cmd("solenoid-check", &unknown, &out, &[]).status.code(), Some(1));

    let no_plasma = write_config(tmp.path(), r#"{"geometry": {"cws": {"major_radius": 3.0, "minor_radius": 1.0}}}"#);
    assert_eq!(run_cmd("sweep", &no_plasma, &out, &[]).status.code(), Some(1));

    let bad_geometry = write_config(tmp.path(), r#"{"geometry": {"cws": {"major_radius": 1.0, "minor_radius": 2.0}}}"#);
    assert_eq!(run_cmd("solenoid-check", &bad_geometry, &out, &[]).status.code(), Some(1));

    let solenoid = configs().join("solenoid.json");
    assert_eq!(run_cmd("solenoid-check", &solenoid, &out, &["--threads", "0"]).status.code(), Some(1));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn failed_checks_exit_with_two_and_still_write_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"geometry": {"cws": {"major_radius": 3.0, "minor_radius": 1.0}},
            "solenoid": {"resolutions": [12], "check_resolution": 12}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_cmd("solenoid-check", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL solenoid.interior"));
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], Value::Bool(false));
}

#[test]
fn sweep_writes_csv_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = run_cmd("sweep", &configs().join("sweep_wire.json"), &out, &["--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,objective,residual_l2_sq,current_l2_sq,bound_ratio,c0_error,c1_error"
    );
    let first = lines.next().unwrap();
    for cell in first.split(',') {
        let mantissa = cell.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17, "{cell}");
    }

    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "windingkit");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["command"], "sweep");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["passed"], true);
    assert_eq!(manifest["config"]["target"]["kind"], "azimuthal_wire");
    assert!(manifest["config"]["lambda"]["points"].is_u64());
    for entry in manifest["outputs"].as_array().unwrap() {
        let bytes = fs::read(out.join(entry["file"].as_str().unwrap())).unwrap();
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(entry["sha256"].as_str().unwrap(), digest);
        assert_eq!(entry["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

#[test]
fn output_prefix_is_applied() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"geometry": {"cws": {"major_radius": 3.0, "minor_radius": 1.0}},
            "solenoid": {"resolutions": [32, 64]},
            "output": {"prefix": "run1_"}}"#,
    );
    let out = tmp.path().join("out");
    let o = run_cmd("solenoid-check", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let names: Vec<String> = files(&out).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, vec!["run1_manifest.json".to_string(), "run1_solenoid.csv".to_string()]);
}

#[test]
fn kernel_outputs_are_bit_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"geometry": {"cws": {"major_radius": 3.0, "minor_radius": 1.0}},
            "kernel": {"resolutions": [64, 96], "probe_shrink": 0.2,
                       "fne_resolution": 16, "fne_pairs": 4,
                       "svd": {"grid": {"n_theta": 32, "n_phi": 96}, "m_max": [4, 6], "probe_shrink": 0.3}}}"#,
    );
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let oa = run_cmd("kernel", &cfg, &a, &["--threads", "1", "--seed", "3"]);
    let ob = run_cmd("kernel", &cfg, &b, &["--threads", "3", "--seed", "3"]);
    let oc = run_cmd("kernel", &cfg, &c, &["--threads", "2", "--seed", "4"]);
    for o in [&oa, &ob, &oc] {
        assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(files(&a), files(&b));
    assert_ne!(files(&a), files(&c));

    let report: Value = serde_json::from_slice(&fs::read(a.join("kernel.json")).unwrap()).unwrap();
    for key in ["pairing_value", "kernel_residual", "iterations", "fp_residual_history", "svd_spectrum"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(
        report["iterations"].as_u64().unwrap() as usize,
        report["fp_residual_history"].as_array().unwrap().len()
    );
}

#[test]
fn rerunning_into_the_same_directory_replaces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = configs().join("sweep_point_source.json");
    assert_eq!(run_cmd("sweep", &cfg, &out, &[]).status.code(), Some(0));
    let first = files(&out);
    assert_eq!(run_cmd("sweep", &cfg, &out, &[]).status.code(), Some(0));
    assert_eq!(files(&out), first);
}
