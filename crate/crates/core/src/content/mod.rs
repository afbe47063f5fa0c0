//! Review-content features: metadata statistics, TF-IDF text features and
//! image-similarity aggregates.

pub mod image;
pub mod metadata;
pub mod text;

pub use image::{cosine_similarity, image_features, ImageSimRow, SimilarityKind, SimSummary};
pub use metadata::{metadata_features, MetadataRow};
pub use text::{
    product_text_features, tfidf_similarity, tfidf_vectors, tokenize, IdfLog, TextConfig,
    TextFeatures, TfIdfMode, TopTermSelection,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContentError {
    #[error("cosine similarity undefined for a zero vector")]
    ZeroVector,
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}
