//! End-to-end checks of the command-line interface: exit codes, sweep
//! output shape, determinism of data rows, and partial-failure behavior.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_stqs")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("stqs-cli-test-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(path: &PathBuf, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

/// Data rows only: strip header and footer comment.
fn data_rows(csv: &str) -> Vec<String> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(str::to_string)
        .collect()
}

const SWEEP_CONFIG: &str = r#"
[experiment]
kind = "dark_matter"
n_dm = 4
phi = 0.1
shots = 20000

[noise]
platform = "superconducting"

[sweep]
repetitions = 2
n = [4, 6]

[output]
seed = 42
"#;

#[test]
fn run_writes_sorted_deterministic_rows() {
    let dir = tmp_dir("determinism");
    let config = dir.join("sweep.toml");
    write(&config, SWEEP_CONFIG);
    let out_a = dir.join("a.csv");
    let out_b = dir.join("b.csv");

    let status_a = run_cli(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert!(status_a.status.success(), "{status_a:?}");
    let status_b = run_cli(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
        "--jobs",
        "4",
    ]);
    assert!(status_b.status.success());

    let a = std::fs::read_to_string(&out_a).unwrap();
    let b = std::fs::read_to_string(&out_b).unwrap();
    // Byte-identical data rows regardless of parallelism.
    assert_eq!(data_rows(&a), data_rows(&b));
    assert_eq!(data_rows(&a).len(), 4);
    // Footer carries wall time and version and may differ between runs.
    assert!(a.lines().last().unwrap().starts_with("# footer"));
}

#[test]
fn sweep_produces_the_expected_grid() {
    let dir = tmp_dir("grid");
    let config = dir.join("grid.toml");
    write(
        &config,
        r#"
[experiment]
kind = "dark_matter"
n_dm = 4
phi = 0.1
shots = 5000

[noise]
platform = "superconducting"

[sweep]
n = [4, 6, 8, 10]
classes = [
    [],
    ["readout", "single_gate", "two_gate", "state_prep", "t1", "t2"],
    ["single_gate", "two_gate", "state_prep", "t1", "t2"],
    ["readout", "two_gate", "state_prep", "t1", "t2"],
    ["readout", "single_gate", "state_prep", "t1", "t2"],
]

[output]
seed = 7
"#,
    );
    let out = dir.join("grid.csv");
    let result = run_cli(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 20);
    assert!(text.lines().next().unwrap().starts_with("experiment,platform,n_sensors"));
    // The noiseless rows label their class set as none.
    assert!(rows.iter().any(|r| r.contains(",none,")));
}

#[test]
fn invalid_grid_point_yields_exit_two_with_partial_output() {
    let dir = tmp_dir("partial");
    let config = dir.join("partial.toml");
    // n = 40 pushes n * phi past the inversion domain at run time.
    write(
        &config,
        r#"
[experiment]
kind = "dark_matter"
n_dm = 4
phi = 0.1
shots = 5000

[noise]
platform = "noiseless"

[sweep]
n = [4, 40]

[output]
seed = 3
"#,
    );
    let out = dir.join("partial.csv");
    let result = run_cli(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2), "{result:?}");
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(data_rows(&text).len(), 1);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("inversion domain"), "stderr: {stderr}");
}

#[test]
fn validate_accepts_good_and_rejects_bad() {
    let dir = tmp_dir("validate");
    let good = dir.join("good.toml");
    write(&good, SWEEP_CONFIG);
    let ok = run_cli(&["validate", "--config", good.to_str().unwrap()]);
    assert!(ok.status.success());
    // The effective config echoes resolved defaults and re-parses.
    let echoed = String::from_utf8_lossy(&ok.stdout);
    assert!(echoed.contains("shots = 20000"));

    let bad = dir.join("bad.toml");
    write(
        &bad,
        r#"
[experiment]
kind = "dark_matter"
n_dm = 4
phi = 0.1
shotz = 100
"#,
    );
    let err = run_cli(&["validate", "--config", bad.to_str().unwrap()]);
    assert_eq!(err.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&err.stderr).contains("shotz"));

    let missing = run_cli(&["validate", "--config", "/nonexistent/x.toml"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn profiles_prints_the_registry() {
    let result = run_cli(&["profiles"]);
    assert!(result.status.success());
    let text = String::from_utf8_lossy(&result.stdout);
    for name in ["trapped_ion", "rydberg", "superconducting", "nv_center"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn repro_lists_and_rejects_unknown_ids() {
    let list = run_cli(&["repro", "list"]);
    assert!(list.status.success());
    let text = String::from_utf8_lossy(&list.stdout);
    assert!(text.contains("dm-probes-noise"));
    assert!(text.contains("fig10"));

    let unknown = run_cli(&["repro", "fig99"]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn jsonl_output_is_one_object_per_row() {
    let dir = tmp_dir("jsonl");
    let config = dir.join("j.toml");
    write(&config, SWEEP_CONFIG);
    let out = dir.join("rows.jsonl");
    let result = run_cli(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "jsonl",
    ]);
    assert!(result.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5); // 4 rows + footer
    for line in &lines[..4] {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("accuracy_pct").is_some());
    }
    let footer: serde_json::Value = serde_json::from_str(lines[4]).unwrap();
    assert!(footer.get("footer").is_some());
}
