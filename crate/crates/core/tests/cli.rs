//! The `hoicue` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use hoicue::evaluator::read_report_json;

fn hoicue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoicue"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn suite(dir: &Path, count: usize) -> String {
    let path = dir.join("suite");
    let p = path.to_str().unwrap();
    let out = hoicue(&["fixtures", "--out", p, "--count", &count.to_string(), "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p.to_string()
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&hoicue(&["--help"])), 0);
    assert_eq!(code(&hoicue(&["--version"])), 0);
    assert_eq!(code(&hoicue(&["run", "--bogus"])), 1);
    assert_eq!(code(&hoicue(&[])), 1);
    let out = hoicue(&["--json", "sample", "--frames", "10", "--lambda=-1"]);
    assert_eq!(code(&out), 1);
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "domain");
}

#[test]
fn sample_prints_a_plan() {
    let out = hoicue(&["sample", "--frames", "50", "--lambda", "0.1", "--n", "15", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    let plan: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let idx = plan["indices"].as_array().unwrap();
    assert_eq!(idx.len(), 15);
    assert_eq!(idx.last().unwrap(), 49);
    let again = hoicue(&["sample", "--frames", "50", "--lambda", "0.1", "--n", "15", "--seed", "7"]);
    assert_eq!(stdout(&out), stdout(&again));
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let s = suite(dir.path(), 3);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 9\nconcurrency = 2\n[backend]\nkind = \"mock_random\"\n").unwrap();
    let out = hoicue(&["run", "--suite", &s, "--config", cfg.to_str().unwrap(), "--seed", "11", "--dump-config"]);
    assert_eq!(code(&out), 0);
    let resolved: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(resolved["seed"], 11, "flag beats file");
    assert_eq!(resolved["concurrency"], 2, "file beats default");
    assert_eq!(resolved["backend"]["kind"], "mock_random");
    assert_eq!(resolved["mode"]["sample_size"], 15, "default kept");

    std::fs::write(&cfg, "concurrency = 0\n").unwrap();
    let out = hoicue(&["run", "--suite", &s, "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn run_writes_reports_and_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let s = suite(dir.path(), 10);
    let report = dir.path().join("r.json");
    let preds = dir.path().join("p.jsonl");
    let out = hoicue(&[
        "run",
        "--suite",
        &s,
        "--backend",
        "mock_random",
        "--out",
        report.to_str().unwrap(),
        "--predictions",
        preds.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let parsed = read_report_json(&report).unwrap();
    assert_eq!(parsed.cells.len(), 1);
    assert_eq!(parsed.cells[0].total, 10);
    assert_eq!(std::fs::read_to_string(&preds).unwrap().lines().count(), 10);

    let csv = dir.path().join("r.csv");
    let out = hoicue(&["report", "--input", report.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("strategy,"));
    let md = hoicue(&["report", "--input", csv.to_str().unwrap(), "--format", "md"]);
    assert_eq!(code(&md), 0);
    assert!(stdout(&md).starts_with("| Strategy |"));
}

#[test]
fn unreachable_backend_degrades() {
    let dir = tempfile::tempdir().unwrap();
    let s = suite(dir.path(), 4);
    let out = hoicue(&[
        "run",
        "--suite",
        &s,
        "--backend",
        "frame_list",
        "--endpoint",
        "http://127.0.0.1:9/v1",
        "--model",
        "m",
        "--max-retries",
        "0",
        "--timeout",
        "1",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn render_writes_pngs() {
    let dir = tempfile::tempdir().unwrap();
    let s = suite(dir.path(), 2);
    let out_dir = dir.path().join("png");
    let out = hoicue(&[
        "render",
        "--suite",
        &s,
        "--clip",
        "clip00000",
        "--n",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let written = std::fs::read_dir(&out_dir).unwrap().count();
    assert_eq!(written, 5);
    let missing = hoicue(&["render", "--suite", &s, "--clip", "nope", "--out", out_dir.to_str().unwrap()]);
    assert_ne!(code(&missing), 0);
}

#[test]
fn prompt_prints_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let s = suite(dir.path(), 2);
    let out = hoicue(&["prompt", "--suite", &s, "--question", "q00001", "--strategy", "vllm_only"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("What object will the person interact with next"));
    assert!(!text.contains("Focus on the last frame"));
}

#[test]
fn grid_preset_renders_table() {
    let dir = tempfile::tempdir().unwrap();
    let s = suite(dir.path(), 5);
    let out = hoicue(&["grid", "--suite", &s, "--preset", "table2", "--backend", "mock_random", "--seed", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with('|')).count(), 6);
    let bad = hoicue(&["grid", "--suite", &s, "--preset", "table4", "--backend", "frame_list"]);
    assert_eq!(code(&bad), 1);
}
