use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iutmed::simlab::{scan_dataset, ScanDatasetSpec};
use serde_json::Value;

fn iutmed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iutmed")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = iutmed(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn manifest(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn dataset(dir: &Path, nulls: usize) -> PathBuf {
    let spec = ScanDatasetSpec { null_mediators: nulls, ..ScanDatasetSpec::default() };
    let path = dir.join("data.tsv");
    std::fs::write(&path, scan_dataset(&spec).unwrap().to_delimited('\t', "NA")).unwrap();
    path
}

fn mediators(nulls: usize) -> String {
    let spec = ScanDatasetSpec { null_mediators: nulls, ..ScanDatasetSpec::default() };
    std::iter::once("M0".to_string()).chain(spec.null_names()).collect::<Vec<_>>().join(",")
}

#[test]
fn test_one_prints_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["test-one", "--u", "0.01", "--v", "0.012", "--alpha", "0.05,0.01", "--out", "one.json"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("maxp"));
    let json: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("one.json")).unwrap()).unwrap();
    assert!(json.to_string().contains("ps"));
    let m = manifest(&dir.path().join("one.json.manifest.json"));
    assert_eq!(m["subcommand"], "test-one");
    assert_eq!(m["output_digests"].as_object().unwrap().len(), 1);
}

#[test]
fn unknown_flag_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let out = iutmed(dir.path(), &["test-one", "--u", "0.1", "--v", "0.1", "--bogus"]);
    assert!(!out.status.success());
    assert!(!dir.path().join("iutmed-test-one.manifest.json").exists());
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.conf"), "# dump settings\nalpha = 0.1\nresolution = 20\n").unwrap();
    ok(dir.path(), &["--config", "run.conf", "region-dump", "--resolution", "10", "--out", "grid.csv"]);
    let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 10 * 10);
    let m = manifest(&dir.path().join("grid.csv.manifest.json"));
    assert_eq!(m["config"]["alpha"], 0.1);
    assert_eq!(m["config"]["resolution"], 10);

    std::fs::write(dir.path().join("bad.conf"), "colour = blue\n").unwrap();
    assert!(!iutmed(dir.path(), &["--config", "bad.conf", "region-dump"]).status.success());
}

#[test]
fn scan_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 15);
    let meds = mediators(15);
    let mut outputs = Vec::new();
    for t in ["1", "4", "16"] {
        let out = format!("res{t}.tsv");
        ok(
            dir.path(),
            &[
                "--threads", t, "scan", "--input", "data.tsv", "--outcome", "Y", "--exposures", "G", "--mediators", &meds,
                "--covariates", "age,sex", "--alpha", "0.05,0.01", "--out", &out, "--qq", "qq.csv",
            ],
        );
        outputs.push(std::fs::read(dir.path().join(&out)).unwrap());
        let m = manifest(&dir.path().join(format!("{out}.manifest.json")));
        assert_eq!(m["subcommand"], "scan");
        assert!(dir.path().join(format!("{out}.meta.json")).exists());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.lines().next().unwrap().starts_with("exposure\tmediator\tn_complete"));
}

#[test]
fn scan_with_missing_column_fails() {
    let dir = tempfile::tempdir().unwrap();
    dataset(dir.path(), 2);
    let out = iutmed(
        dir.path(),
        &["scan", "--input", "data.tsv", "--outcome", "Y", "--exposures", "G", "--mediators", "M0,N99", "--out", "r.tsv"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("N99"));
}

#[test]
fn small_simulation_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--beta", "0,0.2", "--gamma", "0.2", "--n", "100", "--reps", "1000", "--seed", "3", "--out", "sim.csv"]);
    let csv = std::fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    assert!(csv.lines().count() > 2);
    let m = manifest(&dir.path().join("sim.csv.manifest.json"));
    assert_eq!(m["seed"], 3);

    ok(dir.path(), &["simulate", "--band-sweep", "0,0.5,1", "--beta", "0", "--gamma", "0", "--n", "100", "--reps", "1000", "--out", "sweep.csv"]);
    let sweep = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);

    assert!(!iutmed(dir.path(), &["simulate", "--beta", "0", "--gamma", "0", "--n", "100", "--reps", "10"]).status.success());
}

#[test]
fn worstcase_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["worstcase", "--scenario", "normal", "--lambda", "1", "--alpha-grid", "0.02,0.03", "--delta-grid", "0,1,2,3", "--out", "wc.csv"]);
    let csv = std::fs::read_to_string(dir.path().join("wc.csv")).unwrap();
    assert!(csv.lines().count() >= 3);
    assert_eq!(manifest(&dir.path().join("wc.csv.manifest.json"))["subcommand"], "worstcase");
}

#[test]
fn default_manifest_lands_in_working_directory() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["region-dump", "--resolution", "5"]);
    let m = manifest(&dir.path().join("iutmed-region-dump.manifest.json"));
    assert_eq!(m["library_version"], iutmed::VERSION);
}
