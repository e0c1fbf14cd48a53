use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn medkg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medkg")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = medkg(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: &[&str] = &["--epochs", "2", "--seed", "5", "--config", "small.cfg"];

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(SMALL.iter().copied()).collect()
}

/// Corpus, both models and extractions of the corpus notes in `dir`.
fn pipeline(dir: &Path, threshold: &str) {
    fs::write(dir.join("small.cfg"), "n_layers = 1\nhidden_size = 16\nff_size = 32\n# tiny for speed\nn_docs = 12\n").unwrap();
    ok(dir, &with_small(&["generate-corpus", "--out", "corpus"]));
    ok(dir, &with_small(&["train-ner", "--corpus", "corpus", "--out", "ner.model"]));
    ok(dir, &with_small(&["train-re", "--corpus", "corpus", "--out", "re.model"]));
    ok(dir, &with_small(&["extract", "--input", "corpus", "--ner-model", "ner.model", "--re-model", "re.model", "--threshold", threshold, "--out", "x.jsonl"]));
    ok(dir, &["build-graph", "--input", "x.jsonl", "--out", "g.jsonl"]);
}

#[test]
fn commands_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        pipeline(d, "0.3");
        ok(d, &["export", "--graph", "g.jsonl", "--format", "cypher", "--out", "g.cypher"]);
    }
    for f in ["corpus/note0003.ann", "ner.model", "re.model", "x.jsonl", "g.jsonl", "g.cypher"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let report = ok(a.path(), &["analyze", "drug-ade", "--graph", "g.jsonl"]);
    assert_eq!(report, ok(b.path(), &["analyze", "drug-ade", "--graph", "g.jsonl"]));
}

#[test]
fn threshold_above_one_keeps_no_relations() {
    let d = tempfile::tempdir().unwrap();
    pipeline(d.path(), "1.01");
    let x = fs::read_to_string(d.path().join("x.jsonl")).unwrap();
    assert_eq!(x.lines().count(), 12);
    for line in x.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["relations"].as_array().unwrap().len(), 0);
    }
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(medkg(p, &["train-ner", "--corpus", "nowhere", "--out", "m"]).status.code(), Some(2));
    assert_eq!(medkg(p, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(medkg(p, &["generate-corpus", "--out", "c", "--config", "missing.cfg"]).status.code(), Some(2));

    ok(p, &["generate-corpus", "--n-docs", "3", "--out", "c"]);
    assert_eq!(medkg(p, &["train-ner", "--corpus", "c", "--out", "m", "--batch-size", "0"]).status.code(), Some(2));

    fs::write(p.join("empty.jsonl"), "").unwrap();
    ok(p, &["build-graph", "--input", "empty.jsonl", "--out", "g.jsonl"]);
    assert_eq!(fs::read_to_string(p.join("g.jsonl")).unwrap(), "");
    assert_eq!(medkg(p, &["export", "--graph", "g.jsonl", "--format", "dot", "--out", "g.dot"]).status.code(), Some(2));
    assert_eq!(medkg(p, &["analyze", "pagerank", "--graph", "g.jsonl"]).status.code(), Some(2));

    fs::write(p.join("broken.jsonl"), "{not json\n").unwrap();
    assert_eq!(medkg(p, &["analyze", "degree", "--kind", "drug", "--graph", "broken.jsonl"]).status.code(), Some(1));
}

#[test]
fn empty_notes_give_empty_extractions() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::write(p.join("small.cfg"), "n_layers = 1\nhidden_size = 16\nff_size = 32\nn_docs = 6\n").unwrap();
    ok(p, &with_small(&["generate-corpus", "--out", "corpus"]));
    ok(p, &with_small(&["train-ner", "--corpus", "corpus", "--out", "ner.model"]));
    ok(p, &with_small(&["train-re", "--corpus", "corpus", "--out", "re.model"]));
    fs::create_dir(p.join("notes")).unwrap();
    ok(p, &["extract", "--input", "notes", "--ner-model", "ner.model", "--re-model", "re.model", "--out", "x.jsonl"]);
    assert_eq!(fs::read_to_string(p.join("x.jsonl")).unwrap(), "");
}
