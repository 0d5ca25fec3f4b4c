use std::process::{Command, Output};

fn dirbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirbeam"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr_record(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let line = text.lines().last().expect("an error record on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    for args in [
        &["--help"][..],
        &["--version"],
        &["ccdf", "--help"],
        &["verify", "--help"],
    ] {
        let out = dirbeam(args);
        assert!(out.status.success(), "{args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn closedform_reports_two_for_worst_v_orth_case() {
    let out = dirbeam(&[
        "closedform",
        "--case",
        "v-orth",
        "--a1",
        "1",
        "--a2",
        "1",
        "--uu",
        "1",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["delta_snr"], 2.0);
    assert_eq!(v["config"]["command"], "closedform");
    assert!(v["version"].is_string());
}

#[test]
fn usage_errors_exit_two_with_json_record() {
    for args in [
        &["bogus"][..],
        &["closedform", "--case", "v-orth", "--a1", "1", "--a2", "1"],
        &["ccdf", "--paths", "0"],
        &["ccdf", "--scheme", "nonsense"],
    ] {
        let out = dirbeam(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let rec = stderr_record(&out);
        assert_eq!(rec["exit_code"], 2);
        assert_eq!(rec["error"]["kind"], "usage");
    }
}

#[test]
fn unwritable_output_exits_three() {
    let out = dirbeam(&["ccdf", "--trials", "10", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_record(&out)["error"]["kind"], "io");
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "paths = 3\ntrials = 50\nseed = 9\nformat = \"json\"\n",
    )
    .unwrap();
    let out = dirbeam(&["ccdf", "--config", cfg.to_str().unwrap(), "--trials", "20"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let params = &v["config"]["parameters"];
    assert_eq!(params["paths"], 3);
    assert_eq!(params["trials"], 20);
    assert_eq!(params["seed"], 9);
}

#[test]
fn csv_on_stdout_puts_metadata_on_stderr() {
    let out = dirbeam(&["ccdf", "--paths", "2", "--trials", "25", "--seed", "3"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("delta_snr_db,ccdf"));
    assert_eq!(csv.lines().count(), 26);
    let meta: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(meta["summary"]["trials"], 25);
}

#[test]
fn execution_mode_does_not_change_output() {
    let run = |mode: &str| {
        dirbeam(&[
            "ccdf",
            "--paths",
            "3",
            "--trials",
            "200",
            "--seed",
            "5",
            "--execution",
            mode,
        ])
        .stdout
    };
    assert_eq!(run("sequential"), run("parallel"));
}

#[test]
fn verify_bounds_suite_passes() {
    let out = dirbeam(&["verify", "--suite", "bounds"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"][0]["failed"], 0);
}
