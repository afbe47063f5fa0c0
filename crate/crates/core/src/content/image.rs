//! Image-similarity features from precomputed embeddings.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ContentError;
use crate::records::{EmbeddingIndex, ImageEmbedding};
use crate::stats::{dot, norm, Summary};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    /// `u·v / (|u| |v|)`.
    #[default]
    Cosine,
    /// `1 - arccos(cosine) / π`, in `[0, 1]`.
    Angular,
}

/// Cosine similarity of two equal-length, non-zero vectors.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, ContentError> {
    if u.len() != v.len() {
        return Err(ContentError::LengthMismatch(u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(ContentError::ZeroVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

impl SimilarityKind {
    pub fn similarity(self, u: &[f64], v: &[f64]) -> Result<f64, ContentError> {
        let c = cosine_similarity(u, v)?;
        Ok(match self {
            SimilarityKind::Cosine => c,
            SimilarityKind::Angular => 1.0 - libm::acos(c) / core::f64::consts::PI,
        })
    }
}

/// Summary of one group of pairwise similarities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub avg: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
    /// No pair available; the statistics are zero.
    pub missing: bool,
}

impl SimSummary {
    fn of(mut sims: Vec<f64>) -> Self {
        sims.sort_by(f64::total_cmp);
        match Summary::of(&sims) {
            Some(s) => Self {
                avg: s.avg,
                min: s.min,
                max: s.max,
                std: s.std,
                missing: false,
            },
            None => Self {
                missing: true,
                ..Default::default()
            },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageSimRow {
    /// Pairs of reviews, each review represented by the mean of its images.
    pub img_sim: SimSummary,
    /// Pairs of individual review images.
    pub sim_review: SimSummary,
    /// Product image × review image pairs.
    pub sim_product: SimSummary,
}

fn pairwise(vectors: &[&[f64]], kind: SimilarityKind) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            // a zero mean vector has no direction to compare
            if let Ok(s) = kind.similarity(vectors[i], vectors[j]) {
                out.push(s);
            }
        }
    }
    out
}

/// The three image-similarity groups of one product.
pub fn image_features(
    index: &EmbeddingIndex<'_>,
    product_id: &str,
    kind: SimilarityKind,
) -> ImageSimRow {
    let Some(images) = index.product(product_id) else {
        return ImageSimRow {
            img_sim: SimSummary::of(Vec::new()),
            sim_review: SimSummary::of(Vec::new()),
            sim_product: SimSummary::of(Vec::new()),
        };
    };

    let mut by_review: BTreeMap<&str, Vec<&ImageEmbedding>> = BTreeMap::new();
    for e in &images.review {
        let key = e.review_id.as_deref().unwrap_or(e.image_id.as_str());
        by_review.entry(key).or_default().push(e);
    }
    let review_means: Vec<Vec<f64>> = by_review
        .values()
        .map(|imgs| {
            let mut m = vec![0.0; imgs[0].vector.len()];
            for e in imgs {
                m.iter_mut().zip(&e.vector).for_each(|(a, b)| *a += b);
            }
            let k = imgs.len() as f64;
            m.iter_mut().for_each(|a| *a /= k);
            m
        })
        .collect();
    let mean_refs: Vec<&[f64]> = review_means.iter().map(Vec::as_slice).collect();

    // sorted by image id so input order does not matter
    let mut review_imgs: Vec<&ImageEmbedding> = images.review.clone();
    review_imgs.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let review_refs: Vec<&[f64]> = review_imgs.iter().map(|e| e.vector.as_slice()).collect();

    let mut cross = Vec::new();
    for p in &images.product {
        for r in &review_refs {
            if let Ok(s) = kind.similarity(&p.vector, r) {
                cross.push(s);
            }
        }
    }

    ImageSimRow {
        img_sim: SimSummary::of(pairwise(&mean_refs, kind)),
        sim_review: SimSummary::of(pairwise(&review_refs, kind)),
        sim_product: SimSummary::of(cross),
    }
}
