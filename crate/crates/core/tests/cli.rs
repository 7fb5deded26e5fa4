use std::path::Path;
use std::process::{Command, Output};

fn run(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splithygiene"))
        .args(args)
        .env("SPLITHYGIENE_WORKDIR", workdir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(workdir: &Path, args: &[&str]) -> String {
    let out = run(workdir, args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lines(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn pipeline_on_bundled_data() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    ok(w, &["extract"]);
    assert_eq!(lines(&w.join("templates.jsonl")), 50);
    ok(w, &["generate", "--limit", "20"]);
    let n = lines(&w.join("corpus.nlq"));
    assert_eq!(n, lines(&w.join("corpus.ql")));
    assert_eq!(n, lines(&w.join("corpus.ids")));
    ok(w, &["attribute"]);
    assert!(w.join("attribution.tsv").is_file());

    ok(
        w,
        &[
            "partition",
            "--scheme",
            "leaky",
            "--ratios",
            "0.8,0.1,0.1",
            "--rng-seed",
            "3",
        ],
    );
    let leaky = w.join("split-leaky-3");
    let counts: usize = ["train", "valid", "test"]
        .iter()
        .map(|s| lines(&leaky.join(format!("{s}.ql"))))
        .sum();
    assert_eq!(counts, n);

    ok(w, &["partition", "--scheme", "sanitized", "--rng-seed", "3"]);
    let san = w.join("split-sanitized-3");
    assert!(san.join("manifest.json").is_file());
    assert!(san.join("diagnostics.json").is_file());

    ok(
        w,
        &[
            "memorize",
            "--split",
            san.to_str().unwrap(),
            "--attribution",
            w.join("attribution.tsv").to_str().unwrap(),
        ],
    );
    ok(w, &["lm", "--split", san.to_str().unwrap()]);
    assert_eq!(lines(&san.join("pred.ql")), lines(&san.join("test.ql")));
    assert_eq!(lines(&san.join("pred.logp")), lines(&san.join("test.ql")));

    let report = ok(
        w,
        &[
            "eval",
            "--pred",
            san.join("pred.ql").to_str().unwrap(),
            "--test",
            san.join("test.ql").to_str().unwrap(),
            "--logp",
            san.join("pred.logp").to_str().unwrap(),
            "--split",
            san.to_str().unwrap(),
            "--attribution",
            w.join("attribution.tsv").to_str().unwrap(),
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert!(v["bleu"]["bleu"].as_f64().unwrap() < 100.0);
    assert!(v["perplexity"].as_f64().unwrap() > 1.0);
    assert_eq!(v["leakage"]["test_seen_fraction"].as_f64(), Some(0.0));
}

#[test]
fn experiment_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    let cfg = w.join("run.toml");
    std::fs::write(&cfg, "rng_seeds = [1, 2]\ninstance_limit = 30\n").unwrap();
    ok(
        w,
        &["experiment", "--preset", "exp1", "--config", cfg.to_str().unwrap()],
    );
    ok(
        w,
        &["experiment", "--preset", "exp3", "--config", cfg.to_str().unwrap()],
    );
    assert!(w.join("exp1/report.json").is_file());
    ok(w, &["report"]);
    let merged = std::fs::read_to_string(w.join("report.csv")).unwrap();
    assert!(merged.lines().any(|l| l.starts_with("exp1,")));
    assert!(merged.lines().any(|l| l.starts_with("exp3,")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path();
    // validation errors exit 2
    assert_eq!(run(w, &["generate"]).status.code(), Some(2), "missing templates");
    assert_eq!(run(w, &["report"]).status.code(), Some(2), "no reports");
    assert_eq!(run(w, &["bogus"]).status.code(), Some(2), "unknown subcommand");
    ok(w, &["extract"]);
    ok(w, &["generate", "--limit", "5"]);
    let bad = run(w, &["partition", "--ratios", "0.5,0.1,0.1"]);
    assert_eq!(bad.status.code(), Some(2), "ratios not summing to one");
    assert_eq!(
        run(w, &["partition", "--ratios", "0.8,0.2"]).status.code(),
        Some(2),
        "two ratios"
    );
    let cfg = w.join("bad.toml");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(
        run(w, &["--config", cfg.to_str().unwrap(), "extract"]).status.code(),
        Some(2)
    );
    // runtime errors exit 1
    std::fs::write(w.join("templates.jsonl"), "{not json\n").unwrap();
    assert_eq!(run(w, &["generate"]).status.code(), Some(1), "malformed templates");
}
