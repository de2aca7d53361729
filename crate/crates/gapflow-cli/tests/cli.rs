// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gapflow"));
    c.env_remove("GAPFLOW_THREADS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p
}

fn report(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn malformed_json_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{ \"command\": \"reconstruct\", ");
    let o = run(&["--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_keys_and_missing_sections_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{ "command": "reconstruct", "gapz": [] }"#);
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], &dir.path().join("a")).status.code(), Some(2));

    let cfg = write_config(dir.path(), r#"{ "command": "reconstruct" }"#);
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], &dir.path().join("b")).status.code(), Some(2));

    let cfg = write_config(dir.path(), r#"{ "gaps": { "gaps": [[1.0, 0.0]] }, "phases": [0.0] }"#);
    assert_eq!(run(&["--config", cfg.to_str().unwrap(), "reconstruct"], &dir.path().join("c")).status.code(), Some(2));
}

#[test]
fn missing_command_and_bad_thread_counts_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&[], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["--threads", "0", "craig-check"], dir.path()).status.code(), Some(2));
    let o = bin().env("GAPFLOW_THREADS", "many").arg("craig-check").arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn one_gap_reconstruct_is_the_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("one-gap-reconstruct.json");
    let o = run(&["--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("reconstruct-field.csv")).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let re: f64 = rec[2].parse().unwrap();
        let im: f64 = rec[3].parse().unwrap();
        assert!((re - 1.0).abs() <= 1e-10 && im.abs() <= 1e-10, "{re} {im}");
        rows += 1;
    }
    assert_eq!(rows, 64);
    let r = report(&dir.path().join("reconstruct.json"));
    assert_eq!(r["time_convention"]["sign_s"], 1);
    assert_eq!(r["time_convention"]["kappa_t"], 2.0);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn two_gap_comparison_passes_its_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("two-gap-compare.json");
    let o = run(&["--config", cfg.to_str().unwrap(), "--threads", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir.path().join("nls-compare.json"));
    let err = r["result"]["comparison"]["sup_error"].as_f64().unwrap();
    assert!(err <= 1e-4, "{err}");
    assert!(dir.path().join("nls-compare-simulated.bin").exists());
}

#[test]
fn failed_check_exits_with_three_and_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{ "command": "nls-compare",
             "field": { "initial": { "kind": "constant", "c": 1.0, "beta": 0.0 },
                        "x0": 0.0, "length": 10.0, "nx": 32, "t_end": 0.5, "dt": 0.1,
                        "record_every": 1, "richardson": false, "window": null, "threshold": 1e-30 } }"#,
    );
    let out = dir.path().join("out");
    let o = run(&["--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(3));
    let d = report(&out.join("diagnostic.json"));
    assert_eq!(d["kind"], "check");
    assert_eq!(d["exit_code"], 3);
    assert!(out.join("nls-compare.json").exists());
}

#[test]
fn reruns_are_byte_identical_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{ "command": "measure-check", "seed": 5,
             "potential": { "omega": [1.0, 0.6180339887498949],
                            "fourier": [ { "n": [1, 0], "coeff": [0.1, 0.0] }, { "n": [0, 1], "coeff": [0.0, 0.1] } ] },
             "spectral": { "lambda": 1.0, "theta_count": 2, "eps": [0.1, 0.01] } }"#,
    );
    let c = cfg.to_str().unwrap();
    let (a, b, s) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("s"));
    assert_eq!(run(&["--config", c], &a).status.code(), Some(0));
    assert_eq!(run(&["--config", c, "--threads", "1"], &b).status.code(), Some(0));
    for f in ["measure-check.json", "measure-check.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(run(&["--config", c, "--seed", "6"], &s).status.code(), Some(0));
    let (ra, rs) = (report(&a.join("measure-check.json")), report(&s.join("measure-check.json")));
    assert_eq!(rs["seed"], 6);
    assert_ne!(ra["config_hash"], rs["config_hash"]);
    assert_ne!(ra["result"]["thetas"], rs["result"]["thetas"]);
}

#[test]
fn emit_report_merges_matrix_rows_and_flags_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("exponential-craig.json");
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], &out).status.code(), Some(0));
    let cfg = configs().join("one-gap-reconstruct.json");
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], &out).status.code(), Some(0));

    let list = format!(
        r#"{{ "command": "emit-report", "artifacts": [{:?}, {:?}, {:?}] }}"#,
        out.join("craig-check.json"),
        out.join("reconstruct.json"),
        dir.path().join("absent.json"),
    );
    let cfg = write_config(dir.path(), &list);
    let o = run(&["--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out.join("emit-report.json"));
    let m = r["result"]["matrix"].as_array().unwrap();
    let crits: Vec<u64> = m.iter().map(|row| row["criterion"].as_u64().unwrap()).collect();
    assert_eq!(crits, vec![1, 10]);
    assert!(m.iter().all(|row| row["pass"] == true));
    assert_eq!(r["result"]["partial"], true);
    assert_eq!(r["result"]["missing"].as_array().unwrap().len(), 1);
}

#[test]
fn empty_artifact_list_gives_an_empty_report_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["emit-report"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let r = report(&dir.path().join("emit-report.json"));
    assert!(r["result"]["reports"].as_array().unwrap().is_empty());
    assert!(r["result"]["matrix"].as_array().unwrap().is_empty());
    assert_eq!(r["result"]["warnings"].as_array().unwrap().len(), 1);
}
