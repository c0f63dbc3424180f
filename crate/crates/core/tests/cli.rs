//! End-to-end tests of the command-line binary: exit codes, output formats,
//! and byte-identical reproducibility.

use freechaos::kernels::{CellFamily, ElementaryKernel};
use std::process::Command;
use std::sync::Arc;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_freechaos"))
}

#[test]
fn enumerate_counts_and_output() {
    let out = bin()
        .args(["enumerate", "--m", "2", "--q", "2", "--class", "nc2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    // the only non-crossing pair partition respecting 2⊗2 is {{1,4},{2,3}}
    assert_eq!(stdout.trim(), r#"{"blocks":[[1,4],[2,3]]}"#);

    let out = bin()
        .args(["enumerate", "--m", "4", "--q", "1", "--class", "nc0ge2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);

    let out = bin()
        .args(["enumerate", "--m", "1", "--q", "1", "--class", "nc"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn enumerate_cap_exceeded_exits_3() {
    let out = bin()
        .args(["enumerate", "--m", "8", "--q", "2", "--class", "classical"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    // an explicit cap also binds below the default
    let out = bin()
        .args([
            "enumerate", "--m", "3", "--q", "1", "--class", "nc", "--cap", "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin()
        .args(["enumerate", "--m", "3", "--q", "1", "--class", "nc"])
        .output()
        .unwrap();
    assert!(out.status.success());
}

fn write_kernel(dir: &std::path::Path, kernel: &ElementaryKernel) -> std::path::PathBuf {
    let path = dir.join("kernel.json");
    std::fs::write(&path, format!("{}", kernel.to_json())).unwrap();
    path
}

#[test]
fn cumulants_of_indicator_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let family = Arc::new(CellFamily::segments(&[1.0]));
    let f = ElementaryKernel::indicator(family, 0).unwrap();
    let path = write_kernel(dir.path(), &f);
    let out = bin()
        .args([
            "cumulants",
            "--kernel",
            path.to_str().unwrap(),
            "--kind",
            "free-poisson",
            "--m-max",
            "6",
            "--oracle",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["kind"], "free_poisson");
    let rows = v["values"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for row in &rows[1..] {
        // κ_m = λ = 1 for m ≥ 2
        assert!((row["re"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    for d in v["oracle_discrepancies"].as_array().unwrap() {
        assert!(d["moment_discrepancy"].as_f64().unwrap() < 1e-10);
    }

    // CSV format
    let out = bin()
        .args([
            "cumulants",
            "--kernel",
            path.to_str().unwrap(),
            "--kind",
            "semicircular",
            "--m-max",
            "4",
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("kind,method,m,re,im\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn diagonal_kernel_rejected_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let family = Arc::new(CellFamily::segments(&[1.0, 1.0]));
    let f = ElementaryKernel::indicator_tensor(family, &[0, 0]).unwrap();
    let path = write_kernel(dir.path(), &f);
    let out = bin()
        .args([
            "cumulants",
            "--kernel",
            path.to_str().unwrap(),
            "--kind",
            "free-poisson",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));

    // unparseable file
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "not json").unwrap();
    let out = bin()
        .args([
            "cumulants",
            "--kernel",
            bad.to_str().unwrap(),
            "--kind",
            "free-poisson",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("sweep");
    let run = || {
        let out = bin()
            .args([
                "sweep",
                "--n",
                "4,8",
                "--m-max",
                "3",
                "--out-prefix",
                prefix.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (
            std::fs::read_to_string(prefix.with_extension("csv")).unwrap(),
            std::fs::read_to_string(prefix.with_extension("json")).unwrap(),
        )
    };
    let (csv1, json1) = run();
    let (csv2, json2) = run();
    assert_eq!(csv1, csv2, "CSV payload must be byte-identical across reruns");
    assert_eq!(json1, json2, "JSON payload must be byte-identical across reruns");
    assert!(csv1.starts_with("n,radius,step,"));
    assert_eq!(csv1.lines().count(), 3);
    let v: serde_json::Value = serde_json::from_str(&json1).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["alpha"].as_f64().unwrap(), 1.0);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    // timestamps live in the sidecar, not the payload
    assert!(!json1.contains("written_at"));
    let sidecar = std::fs::read_to_string(prefix.with_extension("json.meta.json")).unwrap();
    assert!(sidecar.contains("written_at_unix_secs"));
    assert!(sidecar.contains("runtimes_secs"));
}

#[test]
fn sweep_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"q": 2, "d": 1, "n": [4.0], "m_max": 2}"#).unwrap();
    let out = bin()
        .args(["sweep", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);

    // flags win over the file
    let out = bin()
        .args(["sweep", "--config", config.to_str().unwrap(), "--n", "4,8"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);

    // empty grid is an input error
    std::fs::write(&config, r#"{"n": []}"#).unwrap();
    let out = bin()
        .args(["sweep", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn verify_suite_exit_codes() {
    let out = bin()
        .args(["verify", "--suite", "roundtrip"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("criterion 8 (roundtrip): PASS"));

    let out = bin()
        .args(["verify", "--suite", "no-such-suite"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn jobs_flag_keeps_output_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a");
    let p2 = dir.path().join("b");
    for (jobs, prefix) in [("1", &p1), ("4", &p2)] {
        let out = bin()
            .args([
                "sweep",
                "--jobs",
                jobs,
                "--n",
                "4,8",
                "--m-max",
                "3",
                "--out-prefix",
                prefix.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read_to_string(p1.with_extension("csv")).unwrap(),
        std::fs::read_to_string(p2.with_extension("csv")).unwrap()
    );
}
