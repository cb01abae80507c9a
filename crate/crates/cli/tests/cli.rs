use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-vi")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn vi_suite_passes_and_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = cli(&["run", "--suite", "vi", "--sizes", "31", "--s", "0.5", "--seed", "7", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert!(bundle["header"]["generated_unix"].is_u64());
    assert_eq!(bundle["body"]["reports"].as_array().unwrap().len(), 10);
    assert!(out_dir.join("summary.csv").exists());
    assert!(out_dir.join("solutions/vi_s0.5_n31.json").exists());
}

#[test]
fn invalid_sizes_exit_one() {
    let out = cli(&["run", "--suite", "all", "--sizes", "0"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("below 3"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&cli(&["run", "--no-such-flag"])), 1);
    assert_eq!(code(&cli(&["run", "--suite", "everything"])), 1);
    assert_eq!(code(&cli(&["run", "--s", "1.5"])), 1);
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("out");
    let out = cli(&["run", "--suite", "extension", "--s", "0.5", "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn comparison_summary_has_one_row_per_theorem_and_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&[
        "run",
        "--suite",
        "comparison",
        "--sizes",
        "63",
        "--s",
        "0.25,0.5,0.75",
        "--seed",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 8 * 3);
    let mut keys: Vec<(String, String)> = rows
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 24);
}

#[test]
fn describe_is_deterministic_and_echoes_overrides() {
    let a = cli(&["describe"]);
    let b = cli(&["describe"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("suites (5)"));

    let tuned = String::from_utf8(cli(&["describe", "--tol-absolute", "1e-6"]).stdout).unwrap();
    assert!(tuned.contains("absolute: 1e-6"));

    let reseeded = String::from_utf8(cli(&["describe", "--seed", "42"]).stdout).unwrap();
    let diff: Vec<(&str, &str)> = text.lines().zip(reseeded.lines()).filter(|(x, y)| x != y).collect();
    assert_eq!(diff, vec![("  seed: 1", "  seed: 42")]);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, r#"{"suite": "regularity", "sizes": [15], "seed": 3}"#).unwrap();
    let text = String::from_utf8(cli(&["describe", "--config", path.to_str().unwrap(), "--seed", "4"]).stdout).unwrap();
    assert!(text.contains("seed: 4"));
    assert!(text.contains("sizes: 15"));
    assert!(text.contains("suites (1)") && text.contains("regularity"));
}
