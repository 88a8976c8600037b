//! End-to-end checks of the `edca` binary: exit codes, CSV schema and
//! determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_edca"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn two_ac_config(deadline_us: f64) -> String {
    format!(
        r#"
[global]
packet_bits = 8000.0

[[classes]]
name = "BE"
n = 1
per = 0.001
rate_mbps = 54.0
aifsn = 3
deadline_us = {deadline_us}
cw_min = 31.0

[[classes]]
name = "VI"
n = 1
per = 0.001
rate_mbps = 54.0
aifsn = 3
deadline_us = {deadline_us}
cw_min = 31.0
"#
    )
}

fn fields(line: &str) -> Vec<String> {
    line.trim_end().split(',').map(|s| s.to_string()).collect()
}

#[test]
fn model_emits_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", &two_ac_config(4e5));
    let out = dir.path().join("model.csv");
    let st = bin()
        .args(["model", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap();
    assert!(st.success());
    let text = fs::read_to_string(&out).unwrap();
    let header = fields(text.lines().next().unwrap());
    assert_eq!(
        header,
        [
            "class",
            "n",
            "cw_min",
            "tau",
            "p_fail",
            "throughput_mbps",
            "delay_us",
            "airtime_total",
            "airtime_successful",
            "airtime_collision"
        ]
    );
    // one row per class, CRLF line endings
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("\r\n"));
}

#[test]
fn missing_field_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let broken = two_ac_config(4e5).replace("rate_mbps = 54.0\n", "");
    let cfg = write(dir.path(), "net.toml", &broken);
    let out: Output = bin().args(["model", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rate_mbps"), "diagnostic should name the field: {err}");
}

#[test]
fn infeasible_deadline_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", &two_ac_config(1.0));
    let out = bin().args(["optimize", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn closed_loop_without_duration_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", &two_ac_config(4e5));
    let out = bin().args(["closed-loop", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_and_events_are_mutually_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", &two_ac_config(4e5));
    let sc = write(
        dir.path(),
        "sc.toml",
        r#"
[[events]]
at_us = 1000000.0
class = "BE"
n = 2

[sweep]
parameter = "per"
class = "VI"
start = 0.001
stop = 0.01
steps = 2
scale = "linear"
"#,
    );
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--scenario")
        .arg(&sc)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn one_point_sweep_matches_optimize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", &two_ac_config(4e5));
    let opt_csv = dir.path().join("opt.csv");
    assert!(bin()
        .args(["optimize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&opt_csv)
        .arg("--quiet")
        .status()
        .unwrap()
        .success());
    let sc = write(
        dir.path(),
        "sc.toml",
        r#"
[sweep]
parameter = "per"
class = "VI"
start = 0.001
stop = 0.001
steps = 1
scale = "linear"
"#,
    );
    let sweep_csv = dir.path().join("sweep.csv");
    assert!(bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--scenario")
        .arg(&sc)
        .arg("--out")
        .arg(&sweep_csv)
        .arg("--quiet")
        .status()
        .unwrap()
        .success());

    let opt = fs::read_to_string(&opt_csv).unwrap();
    let sweep = fs::read_to_string(&sweep_csv).unwrap();
    let opt_rows: Vec<Vec<String>> = opt.lines().map(fields).collect();
    let sweep_rows: Vec<Vec<String>> = sweep.lines().map(fields).collect();
    // sweep prefixes parameter/class/value/error, then repeats the
    // optimize columns verbatim
    let offset = 3;
    for (name, value) in opt_rows[0].iter().zip(&opt_rows[1]) {
        let pos = sweep_rows[0]
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("sweep csv missing column {name}"));
        assert!(pos >= offset);
        assert_eq!(&sweep_rows[1][pos], value, "column {name} differs");
    }
}

#[test]
fn closed_loop_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", &two_ac_config(4e5));
    let run = |path: &Path, seed: &str| {
        assert!(bin()
            .args(["closed-loop", "--config"])
            .arg(&cfg)
            .args(["--seed", seed, "--duration", "3000000"])
            .arg("--out")
            .arg(path)
            .arg("--quiet")
            .status()
            .unwrap()
            .success());
        fs::read(path).unwrap()
    };
    let a = run(&dir.path().join("a.csv"), "7");
    let b = run(&dir.path().join("b.csv"), "7");
    let c = run(&dir.path().join("c.csv"), "8");
    assert_eq!(a, b, "same seed must reproduce byte-identical CSV");
    assert_ne!(a, c, "different seed should perturb the run");
}

#[test]
fn closed_loop_rows_are_per_beacon_and_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", &two_ac_config(4e5));
    let out = dir.path().join("cl.csv");
    assert!(bin()
        .args(["closed-loop", "--config"])
        .arg(&cfg)
        .args(["--seed", "1", "--duration", "2000000"])
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .status()
        .unwrap()
        .success());
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<String>> = text.lines().map(fields).collect();
    // 2 s at the default 100 ms beacon
    assert_eq!(rows.len() - 1, 20);
    for (k, row) in rows[1..].iter().enumerate() {
        assert_eq!(row[0], k.to_string(), "beacon index must be monotone");
    }
}
