use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use coreview::commands;
use coreview::config::PipelineConfig;
use coreview::formats::{load_model, read_feature_table};
use coreview::ingest::ReviewFormat;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coreview"))
}

fn run(args: &[&str]) -> std::process::Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "coreview {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small(dir: &Path) -> PathBuf {
    let cfg = dir.join("small.toml");
    fs::write(
        &cfg,
        "seed = 5\n[synth]\nn_organic_products = 40\nn_fake_products = 20\n[forest]\nn_estimators = 30\n[kmeans]\nk = 4\nn_restarts = 3\n",
    )
    .unwrap();
    cfg
}

/// synth, features, train, predict and cluster through the binary.
fn full_run(dir: &Path, cfg: &Path) {
    let d = s(dir);
    run(&["--config", s(cfg), "synth", "-o", d]);
    let reviews = dir.join("reviews.jsonl");
    let emb = dir.join("embeddings.jsonl");
    run(&["--config", s(cfg), "build-graph", "--reviews", s(&reviews), "-o", d]);
    run(&["--config", s(cfg), "features", "--reviews", s(&reviews), "--embeddings", s(&emb), "-o", d]);
    let feats = dir.join("features.csv");
    run(&["--config", s(cfg), "train", "--features", s(&feats), "--reviews", s(&reviews), "-o", d]);
    run(&["--config", s(cfg), "evaluate", "--features", s(&feats), "--reviews", s(&reviews), "-o", d]);
    let model = dir.join("forest.model");
    run(&["--config", s(cfg), "predict", "--features", s(&feats), "--model", s(&model), "-o", d]);
    run(&["--config", s(cfg), "cluster", "--features", s(&feats), "--model", s(&model), "-o", d]);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e != "toml"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = small(a.path());
    full_run(a.path(), &cfg);
    // same config file path, so the manifests agree too
    let out_b = b.path().join("o");
    fs::create_dir(&out_b).unwrap();
    full_run(&out_b, &cfg);
    let (x, y) = (dir_bytes(a.path()), dir_bytes(&out_b));
    let names: Vec<_> = x.iter().map(|f| f.0.as_str()).collect();
    for expected in ["reviews.jsonl", "edges.csv", "features.csv", "forest.model", "predictions.csv", "profile.csv", "manifest-cluster.json"] {
        assert!(names.contains(&expected), "{expected} missing from {names:?}");
    }
    assert_eq!(x.len(), y.len());
    for ((n1, b1), (n2, b2)) in x.iter().zip(&y) {
        assert_eq!(n1, n2);
        if n1.starts_with("manifest-") {
            continue; // output paths differ between the two runs
        }
        assert!(b1 == b2, "{n1} differs between runs");
    }
}

#[test]
fn binary_matches_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = small(dir.path());
    let cli_dir = dir.path().join("cli");
    let lib_dir = dir.path().join("lib");
    full_run(&cli_dir, &cfg_path);

    let mut cfg = PipelineConfig::load(&cfg_path).unwrap();
    cfg.apply_seed(5);
    cfg.paths.out_dir = Some(lib_dir.clone());
    commands::synth(&cfg, ReviewFormat::Jsonl).unwrap();
    cfg.paths.reviews = Some(lib_dir.join("reviews.jsonl"));
    cfg.paths.embeddings = Some(lib_dir.join("embeddings.jsonl"));
    commands::features(&cfg).unwrap();
    cfg.paths.features = Some(lib_dir.join("features.csv"));
    commands::train(&cfg).unwrap();
    cfg.paths.model = Some(lib_dir.join("forest.model"));
    commands::predict(&cfg).unwrap();

    for f in ["reviews.jsonl", "embeddings.jsonl", "features.csv", "forest.model", "predictions.csv"] {
        assert!(fs::read(cli_dir.join(f)).unwrap() == fs::read(lib_dir.join(f)).unwrap(), "{f}");
    }
    let t = read_feature_table(&lib_dir.join("features.csv")).unwrap();
    let model = load_model(&lib_dir.join("forest.model")).unwrap();
    let p = model.score_table(&t).unwrap();
    assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
}

#[test]
fn evaluate_prints_the_comparison_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let d = s(dir.path());
    run(&["--config", s(&cfg), "synth", "-o", d, "--format", "csv"]);
    let reviews = dir.path().join("reviews.csv");
    let emb = dir.path().join("embeddings.jsonl");
    run(&["--config", s(&cfg), "features", "--reviews", s(&reviews), "--embeddings", s(&emb), "-o", d]);
    let out = run(&[
        "--config", s(&cfg), "evaluate", "--stratified",
        "--features", s(&dir.path().join("features.csv")),
        "--reviews", s(&reviews),
        "--feature-sets", "network,mine=degree+avg_rating",
        "-o", d,
    ]);
    let table = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3, "{table}");
    assert!(lines[0].starts_with("feature_set"));
    assert!(lines[2].starts_with("mine"));
    assert!(dir.path().join("roc_mine.csv").exists());
    let manifest = fs::read_to_string(dir.path().join("manifest-evaluate.json")).unwrap();
    assert!(manifest.contains("\"stratified\": true"));
}

#[test]
fn failures_exit_nonzero_and_leave_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    let out = bin().args(["synth", "-o", d, "--fake-mix", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fake_mix"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "product_id,reviewer_id,rating,timestamp,text,helpful_votes,has_photo,label\nP1,u,9,1,x,0,false,organic\n").unwrap();
    let out_dir = dir.path().join("o");
    let out = bin().args(["build-graph", "--reviews", s(&bad), "-o", s(&out_dir)]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("rating"), "{err}");
    assert!(!out_dir.join("edges.csv").exists());

    let out = bin().args(["features", "--reviews", s(&bad), "--groups", "network,colour"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_config_keys_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[forest]\nn_trees = 3\n").unwrap();
    let out = bin().args(["--config", s(&cfg), "synth", "-o", s(dir.path())]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_trees"));
}
