use std::path::Path;
use std::process::{Command, Output};

fn tempered(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempered")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn corpus_run_evaluate_replay() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = tempered(&["gen-corpus", "--seed", "21", "--out", p(&corpus), "--total", "24"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_dir(corpus.join("traces")).unwrap().count(), 24);

    let mut runs = Vec::new();
    for preset in ["tight", "relaxed", "default"] {
        let run_dir = dir.path().join(preset);
        let out = tempered(&["run", "--corpus", p(&corpus), "--config", preset, "--seed", "9", "--out", p(&run_dir), "--series", "trace-0002"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("clamp rates"));
        assert!(run_dir.join("loudness/trace-0002_short_term.csv").exists());
        runs.push(run_dir);
    }

    // Runs are ordered by preset regardless of argument order.
    let evidence = dir.path().join("evaluation.json");
    let mut args = vec!["evaluate", "--out", p(&evidence), "--runs"];
    args.extend(runs.iter().map(|r| p(r)));
    let out = tempered(&args);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("PASS monotonicity"));
    assert!(stdout.contains("PASS nesting dominance"));
    let ev: serde_json::Value = serde_json::from_slice(&std::fs::read(&evidence).unwrap()).unwrap();
    assert_eq!(ev["passed"], true);

    // With two runs only the per-run checks apply.
    let out = tempered(&["evaluate", "--runs", p(&runs[1]), p(&runs[0])]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("monotonicity needs exactly three runs"));

    let report = runs[0].join("reports/trace-0005.json");
    let out = tempered(&["replay", "--report", p(&report), "--corpus", p(&corpus)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("exact_match"));

    // A tampered report is a mismatch (exit 1), not an error.
    let mut doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    doc["audio_digest_constrained"] = "00".into();
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_vec(&doc).unwrap()).unwrap();
    let out = tempered(&["replay", "--report", p(&tampered), "--corpus", p(&corpus), "--configs", p(&runs[0])]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("audio_digest_constrained"));
}

#[test]
fn audio_run_and_meter() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert!(tempered(&["gen-corpus", "--seed", "3", "--out", p(&corpus), "--total", "3"]).status.success());
    let run_dir = dir.path().join("run");
    let out = tempered(&["run", "--corpus", p(&corpus), "--config", "default", "--out", p(&run_dir), "--audio"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let wav = run_dir.join("wav/trace-0000_constrained.wav");
    let out = tempered(&["meter", "--wav", p(&wav)]);
    assert!(out.status.success());
    let m: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(m["sample_rate_hz"], 44100);

    // The metered value matches the report's constrained loudness.
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run_dir.join("reports/trace-0000.json")).unwrap()).unwrap();
    let a: f64 = m["integrated_lufs"].as_f64().unwrap();
    let b: f64 = report["metrics_constrained"]["integrated_lufs"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-3, "{a} vs {b}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempered(&["gen-corpus", "--out", p(dir.path()), "--total", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = tempered(&["run", "--corpus", p(dir.path()), "--config", "nonexistent", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
