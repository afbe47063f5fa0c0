//! Review records, image embeddings and per-product review sets.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// Length of an image embedding vector.
pub const EMBEDDING_DIM: usize = 2048;

/// Product-level ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    FakeBuyer,
    Organic,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::FakeBuyer => "fake_buyer",
            Label::Organic => "organic",
        }
    }

    /// Binary class used by the classifiers: fake buyers are the positive class.
    pub fn as_class(self) -> u8 {
        match self {
            Label::FakeBuyer => 1,
            Label::Organic => 0,
        }
    }
}

impl core::str::FromStr for Label {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fake_buyer" => Ok(Label::FakeBuyer),
            "organic" => Ok(Label::Organic),
            _ => Err(RecordError::InvalidField {
                field: "label",
                reason: alloc::format!("expected fake_buyer or organic, got {s:?}"),
            }),
        }
    }
}

/// One review.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub product_id: String,
    pub reviewer_id: String,
    /// Star rating, 1 to 5.
    pub rating: u8,
    /// Days since the Unix epoch.
    pub timestamp: f64,
    pub text: String,
    pub helpful_votes: u32,
    pub has_photo: bool,
    pub label: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("invalid {field}: {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("duplicate review of product {product_id} by {reviewer_id} at day {timestamp}")]
    DuplicateReview {
        product_id: String,
        reviewer_id: String,
        timestamp: f64,
    },
    #[error("product {product_id} has inconsistent labels")]
    InconsistentLabel { product_id: String },
    #[error("embedding {image_id}: vector has length {observed}, expected {EMBEDDING_DIM}")]
    EmbeddingLength { image_id: String, observed: usize },
    #[error("embedding {image_id}: vector is all zeros")]
    ZeroEmbedding { image_id: String },
    #[error("embedding {image_id}: review_image without review_id")]
    MissingReviewId { image_id: String },
    #[error("no review records")]
    Empty,
}

fn invalid(field: &'static str, reason: impl Into<String>) -> RecordError {
    RecordError::InvalidField {
        field,
        reason: reason.into(),
    }
}

impl ReviewRecord {
    /// Checks the per-record invariants.
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.product_id.is_empty() {
            return Err(invalid("product_id", "empty"));
        }
        if self.reviewer_id.is_empty() {
            return Err(invalid("reviewer_id", "empty"));
        }
        if !(1..=5).contains(&self.rating) {
            return Err(invalid(
                "rating",
                alloc::format!("{} is outside 1..=5", self.rating),
            ));
        }
        if !self.timestamp.is_finite() {
            return Err(invalid("timestamp", "not a finite day count"));
        }
        Ok(())
    }

    fn chronological(&self, other: &Self) -> Ordering {
        self.timestamp
            .total_cmp(&other.timestamp)
            .then_with(|| self.reviewer_id.cmp(&other.reviewer_id))
    }
}

/// All reviews of one product, oldest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductReviewSet {
    pub product_id: String,
    pub reviews: Vec<ReviewRecord>,
    pub label: Option<Label>,
}

impl ProductReviewSet {
    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }
}

/// Validates records and groups them by product.
///
/// Products come out sorted by id and reviews by `(timestamp, reviewer_id)`,
/// so the result does not depend on input order.
pub fn group_reviews(records: Vec<ReviewRecord>) -> Result<Vec<ProductReviewSet>, RecordError> {
    if records.is_empty() {
        return Err(RecordError::Empty);
    }
    let mut by_product: BTreeMap<String, Vec<ReviewRecord>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        by_product.entry(r.product_id.clone()).or_default().push(r);
    }
    let mut out = Vec::with_capacity(by_product.len());
    for (product_id, mut reviews) in by_product {
        reviews.sort_by(|a, b| a.chronological(b));
        for w in reviews.windows(2) {
            if w[0].chronological(&w[1]) == Ordering::Equal {
                return Err(RecordError::DuplicateReview {
                    product_id,
                    reviewer_id: w[1].reviewer_id.clone(),
                    timestamp: w[1].timestamp,
                });
            }
        }
        let label = reviews[0].label;
        if reviews.iter().any(|r| r.label != label) {
            return Err(RecordError::InconsistentLabel { product_id });
        }
        out.push(ProductReviewSet {
            product_id,
            reviews,
            label,
        });
    }
    Ok(out)
}

/// Flattens review sets back into records (product order, then time order).
pub fn flatten(sets: &[ProductReviewSet]) -> Vec<ReviewRecord> {
    sets.iter().flat_map(|s| s.reviews.iter().cloned()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageOwner {
    ProductImage,
    ReviewImage,
}

/// A precomputed image embedding (output of an external CNN extractor).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageEmbedding {
    pub owner: ImageOwner,
    pub product_id: String,
    #[serde(default)]
    pub review_id: Option<String>,
    pub image_id: String,
    pub vector: Vec<f64>,
}

impl ImageEmbedding {
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.vector.len() != EMBEDDING_DIM {
            return Err(RecordError::EmbeddingLength {
                image_id: self.image_id.clone(),
                observed: self.vector.len(),
            });
        }
        if self.vector.iter().any(|x| !x.is_finite()) {
            return Err(invalid("vector", "non-finite entry"));
        }
        if self.vector.iter().all(|&x| x == 0.0) {
            return Err(RecordError::ZeroEmbedding {
                image_id: self.image_id.clone(),
            });
        }
        if self.owner == ImageOwner::ReviewImage && self.review_id.is_none() {
            return Err(RecordError::MissingReviewId {
                image_id: self.image_id.clone(),
            });
        }
        Ok(())
    }
}

/// Embeddings of one product, split by owner.
#[derive(Clone, Debug, Default)]
pub struct ProductImages<'a> {
    pub product: Vec<&'a ImageEmbedding>,
    pub review: Vec<&'a ImageEmbedding>,
}

/// Embeddings indexed by `(product_id, owner)`.
#[derive(Clone, Debug, Default)]
pub struct EmbeddingIndex<'a> {
    by_product: BTreeMap<&'a str, ProductImages<'a>>,
}

impl<'a> EmbeddingIndex<'a> {
    pub fn new(embeddings: &'a [ImageEmbedding]) -> Self {
        let mut by_product: BTreeMap<&str, ProductImages> = BTreeMap::new();
        for e in embeddings {
            let slot = by_product.entry(e.product_id.as_str()).or_default();
            match e.owner {
                ImageOwner::ProductImage => slot.product.push(e),
                ImageOwner::ReviewImage => slot.review.push(e),
            }
        }
        Self { by_product }
    }

    pub fn get(&self, product_id: &str, owner: ImageOwner) -> &[&'a ImageEmbedding] {
        match (self.by_product.get(product_id), owner) {
            (Some(p), ImageOwner::ProductImage) => &p.product,
            (Some(p), ImageOwner::ReviewImage) => &p.review,
            (None, _) => &[],
        }
    }

    pub fn product(&self, product_id: &str) -> Option<&ProductImages<'a>> {
        self.by_product.get(product_id)
    }
}
