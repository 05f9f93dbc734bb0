//! Spawns the installed binary once to check the full pipeline and the
//! documented exit codes from outside the process.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linkloss"))
}

#[test]
fn binary_runs_the_full_pipeline() {
    let dir = tempfile::TempDir::new().unwrap();
    let p = |name: &str| dir.path().join(name);

    let out = bin()
        .args(["synth", "--n", "300", "--seed", "11"])
        .arg("--output")
        .arg(p("samples.jsonl"))
        .output()
        .unwrap();
    assert!(out.status.success(), "synth failed: {}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .arg("extract")
        .arg("--input")
        .arg(p("samples.jsonl"))
        .arg("--output")
        .arg(p("features.csv"))
        .output()
        .unwrap();
    assert!(out.status.success(), "extract failed: {}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args([
            "train",
            "--features", "4",
            "--batch-size", "64",
            "--max-epochs", "5",
            "--patience", "4",
            "--hidden-width", "8",
            "--seed", "1",
        ])
        .arg("--input")
        .arg(p("features.csv"))
        .arg("--output")
        .arg(p("model.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "train failed: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("4-feature model"), "unexpected train output: {stdout}");

    let out = bin()
        .arg("eval")
        .arg("--input")
        .arg(p("features.csv"))
        .arg("--model")
        .arg(p("model.json"))
        .arg("--output-dir")
        .arg(p("reports"))
        .output()
        .unwrap();
    assert!(out.status.success(), "eval failed: {}", String::from_utf8_lossy(&out.stderr));
    assert!(p("reports").join("metrics.json").exists());

    // Usage error: exit 2, and nothing on stdout.
    let out = bin().args(["synth", "--definitely-not-a-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Data error: exit 1 with a diagnostic on stderr.
    let out = bin()
        .arg("eval")
        .arg("--input")
        .arg(p("missing.csv"))
        .arg("--model")
        .arg(p("model.json"))
        .arg("--output-dir")
        .arg(p("reports"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}
