use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_wxdrive");

fn wxdrive(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn default_toml() -> String {
    let out = wxdrive(&["print-config"]);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap()
}

/// Default config with `[section] key = value` lines replaced.
fn config_with(dir: &Path, name: &str, edits: &[(&str, &str, &str)]) -> PathBuf {
    let mut text = default_toml();
    for (section, key, value) in edits {
        let header = format!("[{section}]\n");
        let start = text.find(&header).unwrap_or_else(|| panic!("no section {section}")) + header.len();
        let end = text[start..].find("\n[").map_or(text.len(), |i| start + i + 1);
        let mut body: Vec<String> = text[start..end]
            .lines()
            .filter(|l| !l.starts_with(&format!("{key} =")))
            .map(str::to_string)
            .collect();
        body.insert(0, format!("{key} = {value}"));
        text.replace_range(start..end, &(body.join("\n") + "\n"));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn agent_cmd(decision: &str) -> String {
    format!("\"proc:{BIN} echo-agent --decision {decision}\"")
}

#[test]
fn printed_defaults_run_and_reach_the_goal() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let cfg = config_with(tmp.path(), "run.toml", &[("output", "dir", &format!("{:?}", out_dir.display().to_string()))]);
    let out = wxdrive(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["termination"], "goal_reached");
    assert_eq!(report["weather"]["name"], "good");
    for f in ["trajectory.jsonl", "memory.jsonl", "cdf_safety.csv", "cdf_comfort.csv", "cdf_efficiency.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config_with(tmp.path(), "run.toml", &[("scenario", "weather", "\"heavy_rain\"")]);
    // same config, same output directory: the embedded config must match too
    let dir = tmp.path().join("run");
    let run = || {
        let out = wxdrive(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert!(out.status.code().is_some());
        ["trajectory.jsonl", "report.json", "memory.jsonl"].map(|f| fs::read(dir.join(f)).unwrap())
    };
    let first = run();
    let second = run();
    assert!(first == second, "outputs differ between runs");
}

#[test]
fn child_process_agent_drives_the_loop() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config_with(tmp.path(), "run.toml", &[("agent", "target", &agent_cmd("decelerate"))]);
    let dir = tmp.path().join("proc");
    let out = wxdrive(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    let report = read_json(&dir.join("report.json"));
    assert_ne!(report["termination"], "agent_failure", "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report["fallback"]["fallbacks"], 0);
    let log = fs::read_to_string(dir.join("trajectory.jsonl")).unwrap();
    let decisions: Vec<Value> = log
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter_map(|r| r.get("decision").cloned())
        .collect();
    assert!(!decisions.is_empty());
    assert!(decisions.iter().all(|d| d == "decelerate"));
}

#[test]
fn tcp_agent_drives_the_loop() {
    let mut server = Command::new(BIN)
        .args(["echo-agent", "--decision", "idle", "--listen", "127.0.0.1:0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("address line").to_string();

    let tmp = tempfile::tempdir().unwrap();
    let target = format!("\"tcp:{addr}\"");
    let cfg = config_with(tmp.path(), "run.toml", &[("agent", "target", &target)]);
    let dir = tmp.path().join("tcp");
    wxdrive(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    let report = read_json(&dir.join("report.json"));
    assert_ne!(report["termination"], "agent_failure");
    assert_eq!(report["fallback"]["fallbacks"], 0);
    assert!(report["fallback"]["decisions"].as_u64().unwrap() > 0);
    server.wait().unwrap();
}

#[test]
fn silent_agent_times_out_into_fallbacks() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config_with(
        tmp.path(),
        "run.toml",
        &[
            ("agent", "target", "\"proc:sleep 30\""),
            ("agent", "timeout_ms", "50"),
            ("scenario", "max_ticks", "45"),
        ],
    );
    let dir = tmp.path().join("slow");
    let out = wxdrive(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "timeout exit status");
    let report = read_json(&dir.join("report.json"));
    assert_eq!(report["fallback"]["timeout"], 5);
    assert_eq!(report["fallback"]["rate"], 1.0);
}

#[test]
fn dead_agent_aborts_with_a_scored_partial_log() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config_with(tmp.path(), "run.toml", &[("agent", "target", "\"proc:exit 0\"")]);
    let dir = tmp.path().join("dead");
    let out = wxdrive(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    let report = read_json(&dir.join("report.json"));
    assert_eq!(report["termination"], "agent_failure");
    assert!(report["failure"].is_string());
}

fn finished_run(tmp: &Path, seed: u64) -> PathBuf {
    let cfg = config_with(tmp, &format!("seed{seed}.toml"), &[("scenario", "seed", &seed.to_string())]);
    let dir = tmp.join(format!("seed{seed}"));
    wxdrive(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    dir
}

#[test]
fn rescore_reproduces_and_responds_to_tau() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = finished_run(tmp.path(), 3);
    let log = dir.join("trajectory.jsonl");
    let report = read_json(&dir.join("report.json"));

    let same = wxdrive(&["rescore", "--log", log.to_str().unwrap()]);
    assert!(same.status.success());
    let same: Value = serde_json::from_slice(&same.stdout).unwrap();
    assert_eq!(same["scores"], report["scores"]);

    let tau = report["config"]["scoring"]["tau_th"].as_f64().unwrap() * 2.0;
    let doubled = wxdrive(&["rescore", "--log", log.to_str().unwrap(), "--tau-th", &tau.to_string()]);
    let doubled: Value = serde_json::from_slice(&doubled.stdout).unwrap();
    let before = report["scores"]["safety"].as_array().unwrap();
    let after = doubled["scores"]["safety"].as_array().unwrap();
    assert_eq!(before.len(), after.len());
    for (a, b) in after.iter().zip(before) {
        assert!(a.as_f64().unwrap() <= b.as_f64().unwrap());
    }
}

#[test]
fn rescore_names_the_bad_line() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = finished_run(tmp.path(), 1);
    let log = dir.join("trajectory.jsonl");
    let mut text = fs::read_to_string(&log).unwrap();
    let lines = text.lines().count();
    text.truncate(text.len() - 15);
    let cut = tmp.path().join("cut.jsonl");
    fs::write(&cut, text).unwrap();
    let out = wxdrive(&["rescore", "--log", cut.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("line {lines}")), "{err}");
}

#[test]
fn compare_three_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let reports: Vec<String> = (1..=3)
        .map(|s| finished_run(tmp.path(), s).join("report.json").display().to_string())
        .collect();
    let json = tmp.path().join("cmp.json");
    let mut args = vec!["compare", "--json", json.to_str().unwrap()];
    args.extend(reports.iter().map(String::as_str));
    let out = wxdrive(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cmp = read_json(&json);
    assert_eq!(cmp["rows"].as_array().unwrap().len(), 3);
    for matrix in cmp["dominance"].as_array().unwrap() {
        let m = matrix.as_array().unwrap();
        assert_eq!(m.len(), 3);
        for (i, row) in m.iter().enumerate() {
            assert_eq!(row.as_array().unwrap().len(), 3);
            assert_eq!(row[i], 0.0);
        }
    }
    let single = wxdrive(&["compare", &reports[0]]);
    assert!(!single.status.success());
}

#[test]
fn batch_writes_index_and_table() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = "presets = [\"fog\", \"storm\"]\nrigs = [\"3cam+lidar\"]\nseeds = [1]\n";
    let path = tmp.path().join("batch.toml");
    fs::write(&path, spec).unwrap();
    let out_dir = tmp.path().join("grid");
    let out = wxdrive(&["batch", "--spec", path.to_str().unwrap(), "--workers", "2", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let index = read_json(&out_dir.join("index.json"));
    let cells = index["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    assert!(out_dir.join("fog__3cam+lidar__seed1/report.json").exists());
    assert!(out_dir.join("comparison.txt").exists());
}

#[test]
fn printed_batch_defaults_parse() {
    let tmp = tempfile::tempdir().unwrap();
    let text = wxdrive(&["print-config", "--batch"]).stdout;
    let path = tmp.path().join("grid.toml");
    fs::write(&path, text).unwrap();
    // an empty seed list must be rejected before anything runs
    let broken = fs::read_to_string(&path).unwrap().replace("seeds = [1]", "seeds = []");
    fs::write(&path, broken).unwrap();
    let out = wxdrive(&["batch", "--spec", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(&path, "[scenario]\nweather = \"sunny\"\n").unwrap();
    let out = wxdrive(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sunny"));
}
