//! End-to-end tests of the `cmplq` binary: every subcommand, config-file
//! merging, the k-range syntax, and the one-line error contract.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmplq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

/// Small-but-real tuning so CLI runs finish in seconds.
const TUNING: &[&str] = &[
    "--iterations",
    "12",
    "--candidates",
    "3",
    "--restarts",
    "2",
    "--points-centroids",
    "6000",
    "--points-mse",
    "6000",
    "--min-region-points",
    "10",
    "--max-topup-rounds",
    "2",
];

fn design_args<'a>(out_path: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "design",
        "--source",
        "gaussian",
        "--dim",
        "1",
        "--comparators",
        "1",
        "--seed",
        "5",
        "--out",
        out_path,
    ];
    args.extend_from_slice(TUNING);
    args.extend_from_slice(extra);
    args
}

#[test]
fn design_then_eval_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let design_path = dir.path().join("design.json");
    let design_str = design_path.to_str().unwrap();

    let out = run(&design_args(design_str, &[]));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("restart 0:") && text.contains("restart 1:"), "{text}");
    assert!(text.contains("wrote") && text.contains("k=1"), "{text}");
    assert!(design_path.exists());

    let out = run(&[
        "eval",
        "--design",
        design_str,
        "--points-mse",
        "20000",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("stored_mse="), "{text}");
    let mse_line = text
        .lines()
        .find(|l| l.starts_with("mse="))
        .expect("estimate line");
    let value: f64 = mse_line
        .split(['=', ' '])
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    // One Gaussian comparator cannot do better than 1 - 2/pi ≈ 0.3634 and
    // even a rough design stays well below the unquantized variance.
    assert!(value > 0.3 && value < 0.8, "{value}");
    assert!(text.contains("points=20000"), "{text}");
}

#[test]
fn sweep_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for out_dir in [&out_a, &out_b] {
        let mut args = vec![
            "sweep",
            "--source",
            "uniform",
            "--dim",
            "2",
            "--k",
            "1..2",
            "--seed",
            "11",
            "--out",
            out_dir.to_str().unwrap(),
        ];
        args.extend_from_slice(TUNING);
        let out = run(&args);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }

    for name in ["results.csv", "design_k1.json", "design_k2.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty());
    }

    let csv = String::from_utf8(std::fs::read(out_a.join("results.csv")).unwrap()).unwrap();
    let ks: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ks, ["1", "2"]);
}

#[test]
fn sweep_accepts_comma_separated_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let mut args = vec![
        "sweep",
        "--source",
        "gaussian",
        "--dim",
        "1",
        "--k",
        "1,3",
        "--seed",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ];
    args.extend_from_slice(TUNING);
    let out = run(&args);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let csv = String::from_utf8(std::fs::read(out_dir.join("results.csv")).unwrap()).unwrap();
    let ks: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ks, ["1", "3"]);
    assert!(out_dir.join("design_k3.json").exists());
    assert!(!out_dir.join("design_k2.json").exists());
}

#[test]
fn baseline_reports_both_schemes() {
    let out = run(&[
        "baseline",
        "--source",
        "gaussian",
        "--dim",
        "2",
        "--comparators",
        "5",
        "--baseline",
        "both",
        "--points-mse",
        "20000",
        "--seed",
        "1",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    // Ties between compositions go to the lexicographically greatest split.
    assert!(text.contains("matched-comparators: split=[3, 2] points=12"), "{text}");
    assert!(text.contains("analytic_mse=3.07655"), "{text}");
    // r(2,5) = 16 reconstruction points by default.
    assert!(text.contains("matched-points: points=16"), "{text}");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let from_config = dir.path().join("from_config.json");
    let from_flag = dir.path().join("from_flag.json");
    let config_path = dir.path().join("run.json");
    std::fs::write(
        &config_path,
        format!(
            r#"{{
                "source": "gaussian",
                "dim": 1,
                "comparators": 1,
                "seed": 5,
                "out": {:?},
                "iterations": 12,
                "candidates": 3,
                "restarts": 2,
                "points_centroids": 6000,
                "points_mse": 6000,
                "min_region_points": 10,
                "max_topup_rounds": 2
            }}"#,
            from_config.to_str().unwrap()
        ),
    )
    .unwrap();

    // Config alone supplies everything.
    let out = run(&["design", "--config", config_path.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(from_config.exists());

    // An explicit flag overrides the config value.
    let out = run(&[
        "design",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        from_flag.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(from_flag.exists());

    // Identical parameters produce identical designs regardless of which
    // channel supplied them.
    let a = std::fs::read(&from_config).unwrap();
    let b = std::fs::read(&from_flag).unwrap();
    assert_eq!(a, b);
}

fn assert_one_line_error(out: &Output, needle: &str) {
    assert!(!out.status.success());
    let text = stderr(out);
    assert_eq!(text.lines().count(), 1, "stderr: {text}");
    assert!(text.starts_with("error: "), "stderr: {text}");
    assert!(text.contains(needle), "stderr: {text}");
}

#[test]
fn failures_exit_nonzero_with_one_line_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");

    let out = run(&["eval", "--design", missing.to_str().unwrap()]);
    assert_one_line_error(&out, "missing.json");

    let out = run(&["design", "--source", "laplacian", "--comparators", "1", "--out", "x.json"]);
    assert_one_line_error(&out, "laplacian");

    let out = run(&["design", "--source", "gaussian", "--comparators", "1"]);
    assert_one_line_error(&out, "--out");

    let out = run(&[
        "baseline",
        "--source",
        "gaussian",
        "--comparators",
        "2",
        "--baseline",
        "bogus",
    ]);
    assert_one_line_error(&out, "bogus");

    let out = run(&[
        "sweep",
        "--source",
        "gaussian",
        "--k",
        "3..1",
        "--out",
        dir.path().join("s").to_str().unwrap(),
    ]);
    assert_one_line_error(&out, "descending");

    // Malformed config files are rejected with the offending field.
    let bad_config = dir.path().join("bad.json");
    std::fs::write(&bad_config, r#"{"restart": 5}"#).unwrap();
    let out = run(&[
        "design",
        "--config",
        bad_config.to_str().unwrap(),
        "--source",
        "gaussian",
        "--comparators",
        "1",
        "--out",
        dir.path().join("d.json").to_str().unwrap(),
    ]);
    assert_one_line_error(&out, "restart");
}

#[test]
fn eval_rejects_corrupted_design_files() {
    let dir = tempfile::tempdir().unwrap();
    let design_path = dir.path().join("design.json");
    let design_str = design_path.to_str().unwrap();
    let out = run(&design_args(design_str, &[]));
    assert!(out.status.success(), "stderr: {}", stderr(&out));

    let text = std::fs::read_to_string(&design_path).unwrap();
    let corrupted = text.replace("\"dim\": 1", "\"dim\": 2");
    let bad_path = dir.path().join("corrupt.json");
    std::fs::write(&bad_path, corrupted).unwrap();

    let out = run(&["eval", "--design", bad_path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error: "), "{}", stderr(&out));
    assert!(Path::new(design_str).exists());
}
