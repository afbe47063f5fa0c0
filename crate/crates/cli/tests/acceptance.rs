//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
//! criterion fails.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use coreview::commands::labels_for;
use coreview::config::PipelineConfig;
use coreview::formats::{model_from_bytes, model_to_bytes};
use coreview_core::centrality::{
    clustering_coefficient, degree, eigenvector_centrality, network_features, pagerank, SolverConfig,
};
use coreview_core::cluster::{kmeans, profile_clusters, KMeansConfig};
use coreview_core::content::{cosine_similarity, metadata_features, tfidf_vectors, TextConfig, TfIdfMode};
use coreview_core::content::text::{tokenize, TermCounts};
use coreview_core::eval::{auc, compare_feature_sets, FeatureSet, Standardizer};
use coreview_core::features::FeatureTable;
use coreview_core::graph::ProductNetwork;
use coreview_core::model::train_on_table;
use coreview_core::records::{flatten, group_reviews, Label, ProductReviewSet, ReviewRecord};
use coreview_core::rng::stream;
use coreview_core::synth::generate;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// graph enumeration

/// Adjacency as one bitmask per vertex.
type Graph = Vec<u16>;

/// Splits cells until every vertex in a cell has the same neighbor counts
/// into every other cell. Cell order depends only on the graph structure.
fn refine(g: &Graph, mut cells: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    loop {
        let mut cell_of = vec![0; g.len()];
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                cell_of[v] = c;
            }
        }
        let sig = |v: usize| -> Vec<u32> {
            let mut s = vec![0; cells.len()];
            for (u, &c) in cell_of.iter().enumerate() {
                if g[v] >> u & 1 == 1 {
                    s[c] += 1;
                }
            }
            s
        };
        let mut next = Vec::new();
        for cell in &cells {
            let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
            for &v in cell {
                groups.entry(sig(v)).or_default().push(v);
            }
            next.extend(groups.into_values());
        }
        if next.len() == cells.len() {
            return next;
        }
        cells = next;
    }
}

/// Smallest adjacency code over the leaves of the individualization tree.
fn canon_search(g: &Graph, cells: Vec<Vec<usize>>, best: &mut u64) {
    let cells = refine(g, cells);
    match cells.iter().position(|c| c.len() > 1) {
        None => {
            let order: Vec<usize> = cells.iter().map(|c| c[0]).collect();
            let mut code = 0u64;
            let mut bit = 0;
            for a in 0..order.len() {
                for b in a + 1..order.len() {
                    if g[order[a]] >> order[b] & 1 == 1 {
                        code |= 1 << bit;
                    }
                    bit += 1;
                }
            }
            *best = (*best).min(code);
        }
        Some(i) => {
            for &v in &cells[i] {
                let mut next = cells[..i].to_vec();
                next.push(vec![v]);
                next.push(cells[i].iter().copied().filter(|&u| u != v).collect());
                next.extend(cells[i + 1..].iter().cloned());
                canon_search(g, next, best);
            }
        }
    }
}

fn canonical(g: &Graph) -> u64 {
    let mut best = u64::MAX;
    canon_search(g, vec![(0..g.len()).collect()], &mut best);
    best
}

/// All connected graphs on `1..=max_n` vertices up to isomorphism. Every
/// connected graph has a vertex whose removal keeps it connected, so adding a
/// vertex to each smaller graph in every possible way reaches all of them.
fn connected_graphs(max_n: usize) -> Vec<Vec<Graph>> {
    let mut levels: Vec<Vec<Graph>> = vec![vec![vec![0]]];
    for n in 2..=max_n {
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for g in &levels[n - 2] {
            for mask in 1u16..(1 << (n - 1)) {
                let mut h = g.clone();
                for (u, row) in h.iter_mut().enumerate() {
                    if mask >> u & 1 == 1 {
                        *row |= 1 << (n - 1);
                    }
                }
                h.push(mask);
                if seen.insert(canonical(&h)) {
                    next.push(h);
                }
            }
        }
        levels.push(next);
    }
    levels
}

fn to_network(g: &Graph, weighted: bool) -> ProductNetwork {
    let n = g.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if g[u] >> v & 1 == 1 {
                let w = if weighted { 1 + ((u * 7 + v * 3) % 4) as u32 } else { 1 };
                edges.push((u, v, w));
            }
        }
    }
    ProductNetwork::from_edges((0..n).map(|i| format!("v{i}")).collect(), &edges).unwrap()
}

fn random_connected(rng: &mut impl Rng, n: usize) -> Graph {
    let mut g = vec![0u16; n];
    let density = rng.random::<f64>() * 0.7;
    for v in 1..n {
        let u = rng.random_range(0..v);
        g[u] |= 1 << v;
        g[v] |= 1 << u;
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(density) {
                g[u] |= 1 << v;
                g[v] |= 1 << u;
            }
        }
    }
    g
}

/// The exhaustive suite (connected, up to 8 vertices) plus 50 random
/// connected graphs on up to 12 vertices.
fn graph_suite() -> Result<Vec<Graph>, String> {
    let levels = connected_graphs(8);
    let counts: Vec<usize> = levels.iter().map(Vec::len).collect();
    check(counts == [1, 1, 2, 6, 21, 112, 853, 11117], || {
        format!("enumeration found {counts:?} connected graphs per size")
    })?;
    let mut all: Vec<Graph> = levels.into_iter().flatten().collect();
    let mut rng = stream(2024, 0);
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        all.push(random_connected(&mut rng, n));
    }
    Ok(all)
}

fn dense(g: &Graph) -> DMatrix<f64> {
    let n = g.len();
    DMatrix::from_fn(n, n, |i, j| f64::from(g[i] >> j & 1))
}

// ---------------------------------------------------------------------------
// criteria

fn centralities_match_oracles() -> Outcome {
    let t = Instant::now();
    let suite = graph_suite()?;
    let cfg = SolverConfig::default();
    let (mut worst_e, mut worst_p) = (0.0f64, 0.0f64);
    for g in &suite {
        let n = g.len();
        let net = to_network(g, true);
        if n > 1 {
            let ev = eigenvector_centrality(&net, &cfg).map_err(|e| e.to_string())?;
            let eig = SymmetricEigen::new(dense(g));
            let top = eig.eigenvalues.imax();
            let mut v = eig.eigenvectors.column(top).into_owned();
            if v.sum() < 0.0 {
                v = -v;
            }
            worst_e = worst_e.max((ev.lambda1 - eig.eigenvalues[top]).abs());
            for i in 0..n {
                worst_e = worst_e.max((ev.scores[i] - v[i]).abs());
            }
        }
        let p = pagerank(&net, &cfg).map_err(|e| e.to_string())?;
        let deg: Vec<f64> = (0..n).map(|i| f64::from(g[i].count_ones())).collect();
        let exact = if n == 1 {
            DVector::from_element(1, 1.0)
        } else {
            let m = DMatrix::from_fn(n, n, |i, j| {
                let walk = if g[i] >> j & 1 == 1 { cfg.alpha / deg[j] } else { 0.0 };
                f64::from(u8::from(i == j)) - walk
            });
            m.lu().solve(&DVector::from_element(n, (1.0 - cfg.alpha) / n as f64)).ok_or("singular system")?
        };
        for i in 0..n {
            worst_p = worst_p.max((p[i] - exact[i]).abs());
        }
    }
    let elapsed = t.elapsed();
    check(worst_e < 1e-8, || format!("eigenvector max error {worst_e:.2e}"))?;
    check(worst_p < 1e-8, || format!("pagerank max error {worst_p:.2e}"))?;
    check(elapsed < Duration::from_secs(10), || format!("took {elapsed:.2?}"))?;
    Ok(format!(
        "{} graphs, eigen err {worst_e:.1e}, pagerank err {worst_p:.1e}, {elapsed:.2?}",
        suite.len()
    ))
}

fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut credit, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                credit += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    credit / pairs
}

fn metrics_match_oracles() -> Outcome {
    let mut rng = stream(77, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..200);
        let levels = rng.random_range(1..30);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels)) / 13.0).collect();
        let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let a = auc(&scores, &labels).map_err(|e| e.to_string())?;
        worst = worst.max((a - brute_auc(&scores, &labels)).abs());
    }
    check(worst <= 1e-12, || format!("auc max error {worst:.2e}"))?;

    let suite = graph_suite()?;
    let cfg = SolverConfig::default();
    let mut nodes = 0;
    for g in &suite {
        let c = clustering_coefficient(&to_network(g, true), &cfg);
        for (i, &ci) in c.iter().enumerate() {
            let nb: Vec<usize> = (0..g.len()).filter(|&j| g[i] >> j & 1 == 1).collect();
            let k = nb.len();
            let mut tri = 0;
            for a in 0..k {
                for b in a + 1..k {
                    tri += usize::from(g[nb[a]] >> nb[b] & 1 == 1);
                }
            }
            let expect = if k < 2 { 0.0 } else { 2.0 * tri as f64 / (k * (k - 1)) as f64 };
            check(ci == expect, || format!("clustering of node {i} is {ci}, triangles give {expect}"))?;
            nodes += 1;
        }
    }
    Ok(format!("1000 auc sets, max err {worst:.1e}; clustering exact on {nodes} nodes"))
}

fn review(product: &str, reviewer: &str, rating: u8, day: f64, text: &str) -> ReviewRecord {
    ReviewRecord {
        product_id: product.into(),
        reviewer_id: reviewer.into(),
        rating,
        timestamp: day,
        text: text.into(),
        helpful_votes: 0,
        has_photo: false,
        label: None,
    }
}

fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn formula_fixtures() -> Outcome {
    let cfg = SolverConfig::default();
    let s3 = 3f64.sqrt();
    let s2 = 2f64.sqrt();
    let mut passed = 0;
    let mut fixture = |name: &str, ok: bool| -> Result<(), String> {
        passed += 1;
        check(ok, || format!("fixture `{name}` failed"))
    };

    // degree: A shares 3 reviewers with B and 1 with C
    let mut recs = Vec::new();
    for u in ["u1", "u2", "u3"] {
        recs.push(review("A", u, 5, 1.0, ""));
        recs.push(review("B", u, 5, 1.0, ""));
    }
    recs.push(review("A", "u4", 5, 1.0, ""));
    recs.push(review("C", "u4", 5, 1.0, ""));
    recs.push(review("D", "u5", 5, 1.0, ""));
    let net = ProductNetwork::project(&group_reviews(recs).unwrap()).unwrap();
    let d = degree(&net);
    fixture("degree", d == [4, 3, 1, 0])?;

    let graph = |n: usize, edges: &[(usize, usize)]| {
        let e: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1)).collect();
        ProductNetwork::from_edges((0..n).map(|i| format!("v{i}")).collect(), &e).unwrap()
    };
    let k3 = graph(3, &[(0, 1), (1, 2), (0, 2)]);
    let star = graph(4, &[(0, 1), (0, 2), (0, 3)]);
    let path = graph(3, &[(0, 1), (1, 2)]);
    let tol = 1e-9; // iterative solvers stop at tol 1e-10

    let e = eigenvector_centrality(&k3, &cfg).unwrap();
    fixture("K3 eigenvector", near(e.lambda1, 2.0, tol) && e.scores.iter().all(|&x| near(x, 1.0 / s3, tol)))?;
    let e = eigenvector_centrality(&star, &cfg).unwrap();
    fixture("star eigenvector", near(e.lambda1, s3, tol) && near(e.scores[0] / e.scores[1], s3, tol))?;
    let e = eigenvector_centrality(&path, &cfg).unwrap();
    fixture(
        "path eigenvector",
        near(e.lambda1, s2, tol) && near(e.scores[1] / e.scores[0], s2, tol) && near(e.scores[0], e.scores[2], tol),
    )?;

    let p = pagerank(&path, &cfg).unwrap();
    // p_a = p_c = x, p_b = y: x = 0.05 + 0.85 y / 2, y = 0.05 + 0.85 * 2x
    let a = 0.85;
    let x = ((1.0 - a) / 3.0) * (1.0 + a / 2.0) / (1.0 - a * a);
    let y = (1.0 - a) / 3.0 + 2.0 * a * x;
    fixture("path pagerank", near(p[0], x, tol) && near(p[1], y, tol) && near(p[2], x, tol))?;
    let cycle = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
    fixture("cycle pagerank", pagerank(&cycle, &cfg).unwrap().iter().all(|&v| near(v, 1.0 / 6.0, tol)))?;
    fixture("single node pagerank", pagerank(&graph(1, &[]), &cfg).unwrap() == [1.0])?;

    fixture("K3 clustering", clustering_coefficient(&k3, &cfg) == [1.0, 1.0, 1.0])?;
    fixture("star clustering", clustering_coefficient(&star, &cfg)[0] == 0.0)?;
    let partial = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2)]);
    fixture("one neighbor link", clustering_coefficient(&partial, &cfg)[0] == 1.0 / 3.0)?;

    fixture("tf", TermCounts::from_tokens(tokenize("a b a")).tf("a") == 2.0 / 3.0)?;
    let corpus = ProductReviewSet {
        product_id: "P".into(),
        reviews: ["rare", "x", "x", "x"]
            .iter()
            .enumerate()
            .map(|(i, t)| review("P", &format!("u{i}"), 5, i as f64, t))
            .collect(),
        label: None,
    };
    let mult = TextConfig { mode: TfIdfMode::Multiplicative, ..TextConfig::default() };
    fixture("idf", tfidf_vectors(&corpus, &mult)[0]["rare"] == 4f64.ln())?;
    fixture("cosine", near(cosine_similarity(&[1.0, 0.0], &[1.0, 1.0]).unwrap(), 0.5f64.sqrt(), 1e-15))?;

    let gaps = ProductReviewSet {
        product_id: "P".into(),
        reviews: vec![
            review("P", "a", 5, 0.0, "one"),
            review("P", "b", 5, 2.0, "two"),
            review("P", "c", 1, 6.0, "three"),
        ],
        label: None,
    };
    let m = metadata_features(&gaps, &TextConfig::default());
    fixture(
        "gaps",
        m.gap_avg == 3.0 && m.gap_min == 2.0 && m.gap_max == 4.0 && m.gap_std == 1.0,
    )?;
    fixture("avg rating", near(m.avg_rating, 11.0 / 3.0, 1e-15))?;
    let mut all5 = gaps.clone();
    all5.reviews.iter_mut().for_each(|r| r.rating = 5);
    let m = metadata_features(&all5, &TextConfig::default());
    fixture("star shares", m.share_5star == 1.0 && m.share_1star == 0.0)?;
    Ok(format!("{passed} fixtures"))
}

fn run_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.apply_seed(seed);
    cfg
}

struct SynthRun {
    table: FeatureTable,
    labels: Vec<u8>,
    sets: Vec<ProductReviewSet>,
}

fn synth_run(cfg: &PipelineConfig) -> Result<SynthRun, String> {
    let (sets, emb) = generate(&cfg.synth).map_err(|e| e.to_string())?;
    let opts = cfg.feature_options().map_err(|e| e.to_string())?;
    let table = FeatureTable::build(&sets, &emb, &opts).map_err(|e| e.to_string())?;
    let labels = labels_for(&table, &sets).map_err(|e| e.to_string())?;
    Ok(SynthRun { table, labels, sets })
}

fn evaluate(cfg: &PipelineConfig, run: &SynthRun, names: &[&str]) -> Result<Vec<coreview_core::eval::SetResult>, String> {
    let sets: Vec<FeatureSet> = names
        .iter()
        .map(|n| Ok(FeatureSet { name: n.to_string(), columns: run.table.group_columns(n)? }))
        .collect::<Result<_, coreview_core::features::FeatureError>>()
        .map_err(|e| e.to_string())?;
    compare_feature_sets(&run.table, &run.labels, &sets, &cfg.forest, &cfg.split).map_err(|e| e.to_string())
}

fn mechanism_reproduction() -> Outcome {
    let t = Instant::now();
    let cfg = run_config(42);
    let run = synth_run(&cfg)?;
    let r = evaluate(&cfg, &run, &["network", "metadata", "image"])?;
    let (net, meta, img) = (r[0].report.auc, r[1].report.auc, r[2].report.auc);
    let elapsed = t.elapsed();
    let summary = format!("auc network {net:.3}, metadata {meta:.3}, image {img:.3}, {elapsed:.2?}");
    check(net >= 0.85, || format!("network auc below 0.85: {summary}"))?;
    check(net >= meta && meta >= img, || format!("ordering broken: {summary}"))?;
    check(elapsed < Duration::from_secs(120), || summary.clone())?;
    Ok(summary)
}

const SEEDS: [u64; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

fn importance_reproduction() -> Outcome {
    let mut hits = 0;
    let mut detail = Vec::new();
    for seed in SEEDS {
        let cfg = run_config(seed);
        let run = synth_run(&cfg)?;
        let r = evaluate(&cfg, &run, &["all"])?;
        let top3: Vec<&str> = r[0].importances.iter().take(3).map(|(n, _)| n.as_str()).collect();
        let hit = top3.contains(&"clustering_coef") && top3.contains(&"eigenvector_cent");
        hits += usize::from(hit);
        detail.push(format!("{seed}:{}", if hit { "y" } else { "n" }));
    }
    let summary = format!("{hits}/10 seeds with both in top 3 [{}]", detail.join(" "));
    check(hits >= 8, || summary.clone())?;
    Ok(summary)
}

fn cluster_concentration() -> Outcome {
    let mut hits = 0;
    let mut shares = Vec::new();
    for seed in SEEDS {
        let cfg = run_config(seed);
        let run = synth_run(&cfg)?;
        let rows: Vec<usize> = (0..run.table.n_rows()).collect();
        let columns = run.table.group_columns("all").map_err(|e| e.to_string())?;
        let model = train_on_table(&run.table, &rows, &run.labels, &columns, &cfg.forest).map_err(|e| e.to_string())?;
        let mut cols = run.table.group_columns("network").map_err(|e| e.to_string())?;
        cols.extend(run.table.group_columns("metadata").map_err(|e| e.to_string())?);
        let x = run.table.select(&cols).map_err(|e| e.to_string())?.rows;
        let x = Standardizer::fit(&x).apply(&x);
        let km = KMeansConfig { k: 5, ..cfg.kmeans };
        let report = kmeans(&x, &km).map_err(|e| e.to_string())?;
        let report = profile_clusters(report, &run.table, Some(&model)).map_err(|e| e.to_string())?;
        let flagged = report.flagged.as_ref().ok_or("no flagged profile")?;
        let mut s = flagged.share_of_flagged.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        let top2 = s.iter().take(2).sum::<f64>();
        let any = flagged.count.iter().sum::<usize>() > 0;
        if any && top2 >= 0.6 {
            hits += 1;
        }
        shares.push(format!("{top2:.2}"));
    }
    let summary = format!("{hits}/10 seeds with >= 60% of flagged in 2 clusters [{}]", shares.join(" "));
    check(hits >= 8, || summary.clone())?;
    Ok(summary)
}

/// Runs the full CLI pipeline in `dir` with relative paths only, so two runs
/// in different directories can be compared byte for byte.
fn cli_pipeline(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let steps: [&[&str]; 7] = [
        &["synth"],
        &["build-graph", "--reviews", "reviews.jsonl"],
        &["features", "--reviews", "reviews.jsonl", "--embeddings", "embeddings.jsonl"],
        &["train", "--features", "features.csv", "--reviews", "reviews.jsonl"],
        &["evaluate", "--features", "features.csv", "--reviews", "reviews.jsonl"],
        &["predict", "--features", "features.csv", "--model", "forest.model"],
        &["cluster", "--features", "features.csv", "--model", "forest.model", "--k", "5"],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_coreview"))
            .current_dir(dir)
            .args(args)
            .args(["--seed", "42"])
            .output()
            .map_err(|e| e.to_string())?;
        check(out.status.success(), || {
            format!("coreview {args:?}: {}", String::from_utf8_lossy(&out.stderr))
        })?;
    }
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let p = entry.map_err(|e| e.to_string())?.path();
        files.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

/// Same partition up to a relabeling of cluster ids.
fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut map = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.iter().zip(b).all(|(&x, &y)| *map.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

fn determinism_and_invariance() -> Outcome {
    // byte-identical reruns
    let d1 = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d2 = tempfile::tempdir().map_err(|e| e.to_string())?;
    let f1 = cli_pipeline(d1.path())?;
    let f2 = cli_pipeline(d2.path())?;
    check(f1.len() >= 20, || format!("only {} output files", f1.len()))?;
    check(f1 == f2, || {
        let diff: Vec<&String> = f1.keys().filter(|k| f1.get(*k) != f2.get(*k)).collect();
        format!("reruns differ in {diff:?}")
    })?;

    // input-order permutation
    let cfg = run_config(42);
    let run = synth_run(&cfg)?;
    let (_, emb) = generate(&cfg.synth).map_err(|e| e.to_string())?;
    let mut records = flatten(&run.sets);
    records.shuffle(&mut stream(5, 0));
    let mut emb_shuffled = emb.clone();
    emb_shuffled.shuffle(&mut stream(6, 0));
    let shuffled = group_reviews(records).map_err(|e| e.to_string())?;
    let opts = cfg.feature_options().map_err(|e| e.to_string())?;
    let table2 = FeatureTable::build(&shuffled, &emb_shuffled, &opts).map_err(|e| e.to_string())?;
    check(table2 == run.table, || "features change under input permutation".into())?;

    let cols = run.table.group_columns("network").map_err(|e| e.to_string())?;
    let x = run.table.select(&cols).map_err(|e| e.to_string())?.rows;
    let x = Standardizer::fit(&x).apply(&x);
    let km = KMeansConfig { k: 5, ..cfg.kmeans };
    let base = kmeans(&x, &km).map_err(|e| e.to_string())?;
    let mut perm: Vec<usize> = (0..x.len()).collect();
    perm.shuffle(&mut stream(7, 0));
    let xp: Vec<Vec<f64>> = perm.iter().map(|&i| x[i].clone()).collect();
    let permuted = kmeans(&xp, &km).map_err(|e| e.to_string())?;
    let unpermuted: Vec<usize> = {
        let mut a = vec![0; x.len()];
        for (pos, &i) in perm.iter().enumerate() {
            a[i] = permuted.assignments[pos];
        }
        a
    };
    check(same_partition(&base.assignments, &unpermuted), || "k-means partition changes under row permutation".into())?;

    // monotone k-means objective, every restart
    for seed in 0..5 {
        let r = kmeans(&x, &KMeansConfig { seed, n_restarts: 1, ..km }).map_err(|e| e.to_string())?;
        for w in r.objective_trace.windows(2) {
            check(w[1] <= w[0] * (1.0 + 1e-12), || format!("objective rose from {} to {}", w[0], w[1]))?;
        }
    }

    // pagerank mass, importances, model round trip
    let net = ProductNetwork::project(&run.sets).map_err(|e| e.to_string())?;
    let (rows, _) = network_features(&net, &cfg.solver).map_err(|e| e.to_string())?;
    let mass: f64 = rows.iter().map(|r| r.pagerank).sum();
    check((mass - 1.0).abs() <= 1e-8, || format!("pagerank sums to {mass}"))?;

    let all_rows: Vec<usize> = (0..run.table.n_rows()).collect();
    let columns = run.table.group_columns("all").map_err(|e| e.to_string())?;
    let model = train_on_table(&run.table, &all_rows, &run.labels, &columns, &cfg.forest).map_err(|e| e.to_string())?;
    let imp: f64 = model.feature_importances().iter().map(|(_, v)| v).sum();
    check((imp - 1.0).abs() <= 1e-12, || format!("importances sum to {imp}"))?;
    let back = model_from_bytes(&model_to_bytes(&model).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (p1, p2) = (model.score_table(&run.table), back.score_table(&run.table));
    check(p1.is_ok() && p1 == p2, || "reloaded model predicts differently".into())?;
    Ok(format!(
        "{} files identical across reruns; permutation, monotonicity, mass {mass:.12}, round trip ok",
        f1.len()
    ))
}

/// A bipartite input: `reviewers` reviewers each review `per_reviewer`
/// distinct products drawn uniformly from `products`.
fn scale_input(products: usize, reviewers: usize, per_reviewer: usize) -> Vec<ProductReviewSet> {
    let mut rng = stream(99, 0);
    let mut records = Vec::with_capacity(reviewers * per_reviewer);
    for u in 0..reviewers {
        let picks = coreview_core::rng::sample_indices(&mut rng, products, per_reviewer);
        for p in picks {
            records.push(ReviewRecord {
                product_id: format!("P{p:06}"),
                reviewer_id: format!("u{u:06}"),
                rating: 5,
                timestamp: rng.random_range(0.0..365.0),
                text: String::new(),
                helpful_votes: 0,
                has_photo: false,
                label: Some(Label::Organic),
            });
        }
    }
    group_reviews(records).expect("valid records")
}

fn scale_smoke_test() -> Outcome {
    let sets = scale_input(20_000, 4_000, 30);
    let t = Instant::now();
    let net = ProductNetwork::project(&sets).map_err(|e| e.to_string())?;
    let (rows, _) = network_features(&net, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let edges = net.edge_count();
    let summary = format!("{edges} edges, {} products, {elapsed:.2?}", rows.len());
    check(edges >= 1_000_000, || format!("too few edges: {summary}"))?;
    check(elapsed < Duration::from_secs(60), || summary.clone())?;
    Ok(summary)
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("centralities match dense oracles", centralities_match_oracles),
        ("metrics match brute-force oracles", metrics_match_oracles),
        ("formula fixtures", formula_fixtures),
        ("mechanism reproduction", mechanism_reproduction),
        ("importance reproduction", importance_reproduction),
        ("cluster concentration", cluster_concentration),
        ("determinism and invariance", determinism_and_invariance),
        ("scale smoke test", scale_smoke_test),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS C{} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL C{} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
