//! TF-IDF over review text.
//!
//! `tf(w, r)` is the count of `w` in `r` over the token count of `r`, and
//! `idf(w, R) = log(|R| / |{r ∈ R : w ∈ r}|)`. The two are added by default
//! ([`TfIdfMode::Additive`]); the usual product is available as
//! [`TfIdfMode::Multiplicative`]. Scores exist only for terms that occur in
//! the document, so an empty review has an empty vector.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::records::ProductReviewSet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfIdfMode {
    #[default]
    Additive,
    Multiplicative,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfLog {
    #[default]
    Natural,
    Base2,
    Base10,
}

/// Which terms populate the fixed-width product text vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopTermSelection {
    /// Each product keeps its own highest-scoring terms; columns are the terms
    /// kept by the most products.
    #[default]
    PerProduct,
    /// Columns are the terms with the highest score in any product.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    pub mode: TfIdfMode,
    pub idf_log: IdfLog,
    pub selection: TopTermSelection,
    /// Width of the product text vector.
    pub top_terms: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            mode: TfIdfMode::Additive,
            idf_log: IdfLog::Natural,
            selection: TopTermSelection::PerProduct,
            top_terms: 1000,
        }
    }
}

impl TextConfig {
    fn idf(&self, n_docs: usize, doc_freq: u32) -> f64 {
        let ratio = n_docs as f64 / f64::from(doc_freq);
        match self.idf_log {
            IdfLog::Natural => libm::log(ratio),
            IdfLog::Base2 => libm::log2(ratio),
            IdfLog::Base10 => libm::log10(ratio),
        }
    }

    fn combine(&self, tf: f64, idf: f64) -> f64 {
        match self.mode {
            TfIdfMode::Additive => tf + idf,
            TfIdfMode::Multiplicative => tf * idf,
        }
    }
}

/// Lowercases, splits on runs of non-alphanumeric characters and drops tokens
/// made only of digits.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !t.chars().all(|c| c.is_ascii_digit()))
        .map(|t| t.chars().flat_map(char::to_lowercase).collect())
        .collect()
}

/// Term counts of one document.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TermCounts {
    pub counts: BTreeMap<String, u32>,
    pub total: u32,
}

impl TermCounts {
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let mut counts = BTreeMap::new();
        let total = tokens.len() as u32;
        for t in tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
        Self { counts, total }
    }

    pub fn tf(&self, term: &str) -> f64 {
        match self.counts.get(term) {
            Some(&c) => f64::from(c) / f64::from(self.total),
            None => 0.0,
        }
    }
}

/// Per-document term counts plus document frequencies over a corpus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TermStats {
    pub docs: Vec<TermCounts>,
    pub doc_freq: BTreeMap<String, u32>,
}

impl TermStats {
    pub fn new(docs: Vec<TermCounts>) -> Self {
        let mut doc_freq = BTreeMap::new();
        for d in &docs {
            for term in d.counts.keys() {
                *doc_freq.entry(term.clone()).or_insert(0) += 1;
            }
        }
        Self { docs, doc_freq }
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    /// Sparse TF-IDF vector of document `d`.
    pub fn scores(&self, d: usize, cfg: &TextConfig) -> BTreeMap<String, f64> {
        let doc = &self.docs[d];
        doc.counts
            .keys()
            .map(|term| {
                let idf = cfg.idf(self.n_docs(), self.doc_freq[term]);
                (term.clone(), cfg.combine(doc.tf(term), idf))
            })
            .collect()
    }
}

/// Per-review TF-IDF vectors, with the product's reviews as the corpus.
pub fn tfidf_vectors(product: &ProductReviewSet, cfg: &TextConfig) -> Vec<BTreeMap<String, f64>> {
    let stats = TermStats::new(
        product
            .reviews
            .iter()
            .map(|r| TermCounts::from_tokens(tokenize(&r.text)))
            .collect(),
    );
    (0..stats.n_docs()).map(|d| stats.scores(d, cfg)).collect()
}

fn sparse_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let na = libm::sqrt(a.values().map(|v| v * v).sum::<f64>());
    let nb = libm::sqrt(b.values().map(|v| v * v).sum::<f64>());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(t, v)| large.get(t).map(|w| v * w))
        .sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Average pairwise TF-IDF cosine similarity between a product's reviews.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TfIdfSimilarity {
    pub value: f64,
    /// Fewer than two reviews with text: `value` is `0`.
    pub missing: bool,
}

/// Mean cosine similarity over unordered pairs of reviews that have text.
///
/// A zero-norm vector (possible in multiplicative mode when every term occurs
/// in every review) contributes similarity `0`.
pub fn tfidf_similarity(product: &ProductReviewSet, cfg: &TextConfig) -> TfIdfSimilarity {
    let vectors: Vec<_> = tfidf_vectors(product, cfg)
        .into_iter()
        .filter(|v| !v.is_empty())
        .collect();
    if vectors.len() < 2 {
        return TfIdfSimilarity {
            value: 0.0,
            missing: true,
        };
    }
    let mut sims = Vec::with_capacity(vectors.len() * (vectors.len() - 1) / 2);
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            sims.push(sparse_cosine(&vectors[i], &vectors[j]));
        }
    }
    // summation order fixed by value so review order cannot change the result
    sims.sort_by(f64::total_cmp);
    TfIdfSimilarity {
        value: crate::stats::mean(&sims),
        missing: false,
    }
}

/// Fixed-width product text vectors over a shared column vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct TextFeatures {
    /// Term behind each column; shorter than the configured width when the
    /// corpus has fewer distinct terms (the remaining columns are zero).
    pub terms: Vec<String>,
    /// One row of `top_terms` values per product, in input order.
    pub rows: Vec<Vec<f64>>,
}

/// Document-level TF-IDF with each product's concatenated reviews as one
/// document and all products as the corpus, truncated to the top terms.
pub fn product_text_features(products: &[ProductReviewSet], cfg: &TextConfig) -> TextFeatures {
    let stats = TermStats::new(
        products
            .iter()
            .map(|p| {
                let tokens = p.reviews.iter().flat_map(|r| tokenize(&r.text)).collect();
                TermCounts::from_tokens(tokens)
            })
            .collect(),
    );
    let scores: Vec<BTreeMap<String, f64>> =
        (0..stats.n_docs()).map(|d| stats.scores(d, cfg)).collect();
    let width = cfg.top_terms;

    // terms each product keeps, and the column ranking
    let kept: Vec<BTreeMap<&str, f64>> = match cfg.selection {
        TopTermSelection::PerProduct => scores.iter().map(|s| top_terms(s, width)).collect(),
        TopTermSelection::Global => scores
            .iter()
            .map(|s| s.iter().map(|(t, &v)| (t.as_str(), v)).collect())
            .collect(),
    };
    let mut rank: BTreeMap<&str, (u32, f64)> = BTreeMap::new();
    for doc in &kept {
        for (&t, &v) in doc {
            let e = rank.entry(t).or_insert((0, f64::NEG_INFINITY));
            e.0 += 1;
            e.1 = e.1.max(v);
        }
    }
    let mut ranked: Vec<(&str, (u32, f64))> = rank.into_iter().collect();
    match cfg.selection {
        TopTermSelection::PerProduct => {
            ranked.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then_with(|| a.0.cmp(b.0)))
        }
        TopTermSelection::Global => {
            ranked.sort_by(|a, b| b.1 .1.total_cmp(&a.1 .1).then_with(|| a.0.cmp(b.0)))
        }
    }
    ranked.truncate(width);
    let terms: Vec<String> = ranked.iter().map(|(t, _)| String::from(*t)).collect();

    let rows = kept
        .iter()
        .map(|doc| {
            let mut row = vec![0.0; width];
            for (c, t) in terms.iter().enumerate() {
                if let Some(&v) = doc.get(t.as_str()) {
                    row[c] = v;
                }
            }
            row
        })
        .collect();
    TextFeatures { terms, rows }
}

fn top_terms(scores: &BTreeMap<String, f64>, k: usize) -> BTreeMap<&str, f64> {
    let mut v: Vec<(&str, f64)> = scores.iter().map(|(t, &s)| (t.as_str(), s)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v.truncate(k);
    v.into_iter().collect()
}
