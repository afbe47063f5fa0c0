//! Detecting products that buy fake reviews from the structure of the
//! product–reviewer network.
//!
//! Review records are projected onto a weighted product–product graph whose
//! edges count shared reviewers. Per-product network, metadata, text and image
//! features feed a random-forest classifier, and an unsupervised k-means stage
//! profiles clusters of products and how many of them a trained model flags.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command line
//! and anything touching the filesystem live in the `coreview` companion crate.
//!
//! * [`records`]: review and image-embedding data model, validation, grouping.
//! * [`synth`]: seeded synthetic marketplace with labelled fake-review buyers.
//! * [`graph`]: co-reviewer projection ([`ProductNetwork`]) and edge export.
//! * [`centrality`]: degree, eigenvector centrality, PageRank, clustering.
//! * [`content`]: metadata, TF-IDF and image-similarity features.
//! * [`features`]: the per-product [`FeatureTable`] and named column groups.
//! * [`model`]: random forest, logistic-regression baseline.
//! * [`eval`]: splitting, standardization, AUC and friends.
//! * [`cluster`]: k-means and cluster profiling.

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod centrality;
pub mod cluster;
pub mod content;
pub mod eval;
pub mod features;
pub mod graph;
pub mod model;
pub mod records;
pub mod rng;
pub mod stats;
pub mod synth;

pub use centrality::{NetworkFeatureRow, SolverConfig};
pub use cluster::{ClusterReport, KMeansConfig};
pub use eval::{EvalReport, Standardizer};
pub use features::FeatureTable;
pub use graph::ProductNetwork;
pub use model::{ForestConfig, ForestModel};
pub use records::{ImageEmbedding, Label, ProductReviewSet, ReviewRecord};
pub use synth::SynthConfig;
