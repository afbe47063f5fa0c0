//! Review-metadata features of a product.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::text::{tfidf_similarity, tokenize, TextConfig};
use crate::records::ProductReviewSet;
use crate::stats::{mean, population_std, Summary};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetadataRow {
    pub n_reviews: usize,
    pub avg_rating: f64,
    /// Statistics of the gaps in days between consecutive reviews; all zero
    /// with fewer than two reviews.
    pub gap_avg: f64,
    pub gap_min: f64,
    pub gap_max: f64,
    pub gap_std: f64,
    /// Share of reviews with at least one helpful vote.
    pub share_helpful: f64,
    pub share_1star: f64,
    pub share_5star: f64,
    pub share_photo: f64,
    /// Population standard deviation of review lengths in tokens.
    pub stdev_review_len: f64,
    pub tfidf_sim: f64,
    pub tfidf_sim_missing: bool,
}

pub fn metadata_features(product: &ProductReviewSet, text: &TextConfig) -> MetadataRow {
    let reviews = &product.reviews;
    let n = reviews.len();
    if n == 0 {
        return MetadataRow {
            tfidf_sim_missing: true,
            ..Default::default()
        };
    }
    let nf = n as f64;
    let share = |pred: &dyn Fn(&crate::records::ReviewRecord) -> bool| {
        reviews.iter().filter(|r| pred(r)).count() as f64 / nf
    };

    let mut times: Vec<f64> = reviews.iter().map(|r| r.timestamp).collect();
    times.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let gap = Summary::of(&gaps).unwrap_or_default();

    // sorted so the floating-point sums do not depend on review order
    let mut lengths: Vec<f64> = reviews
        .iter()
        .map(|r| tokenize(&r.text).len() as f64)
        .collect();
    lengths.sort_by(f64::total_cmp);
    let ratings: Vec<f64> = reviews.iter().map(|r| f64::from(r.rating)).collect();
    let sim = tfidf_similarity(product, text);

    MetadataRow {
        n_reviews: n,
        avg_rating: mean(&ratings),
        gap_avg: gap.avg,
        gap_min: gap.min,
        gap_max: gap.max,
        gap_std: gap.std,
        share_helpful: share(&|r| r.helpful_votes >= 1),
        share_1star: share(&|r| r.rating == 1),
        share_5star: share(&|r| r.rating == 5),
        share_photo: share(&|r| r.has_photo),
        stdev_review_len: population_std(&lengths),
        tfidf_sim: sim.value,
        tfidf_sim_missing: sim.missing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::ReviewRecord;
    use alloc::string::ToString;
    use alloc::vec;

    fn review(t: f64, rating: u8, text: &str) -> ReviewRecord {
        ReviewRecord {
            product_id: "A".to_string(),
            reviewer_id: alloc::format!("u{t}"),
            rating,
            timestamp: t,
            text: text.to_string(),
            helpful_votes: 0,
            has_photo: false,
            label: None,
        }
    }

    fn set(reviews: Vec<ReviewRecord>) -> ProductReviewSet {
        ProductReviewSet {
            product_id: "A".to_string(),
            reviews,
            label: None,
        }
    }

    #[test]
    fn gap_statistics() {
        let m = metadata_features(
            &set(vec![review(0.0, 5, ""), review(2.0, 5, ""), review(6.0, 5, "")]),
            &TextConfig::default(),
        );
        assert_eq!((m.gap_avg, m.gap_min, m.gap_max, m.gap_std), (3.0, 2.0, 4.0, 1.0));
        assert_eq!((m.share_5star, m.share_1star), (1.0, 0.0));
    }

    #[test]
    fn rating_average_and_shares() {
        let mut rs = vec![review(0.0, 5, "a b c"), review(1.0, 5, "a"), review(2.0, 1, "")];
        rs[0].helpful_votes = 3;
        rs[1].has_photo = true;
        let m = metadata_features(&set(rs), &TextConfig::default());
        assert!((m.avg_rating - 11.0 / 3.0).abs() < 1e-15);
        assert!((m.share_1star - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.share_helpful - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.share_photo - 1.0 / 3.0).abs() < 1e-15);
        // lengths 3, 1, 0
        assert!((m.stdev_review_len - population_std(&[3.0, 1.0, 0.0])).abs() < 1e-15);
    }

    #[test]
    fn single_review_zero_gaps() {
        let m = metadata_features(&set(vec![review(4.0, 3, "only one")]), &TextConfig::default());
        assert_eq!((m.gap_avg, m.gap_min, m.gap_max, m.gap_std), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(m.stdev_review_len, 0.0);
        assert!(m.tfidf_sim_missing);
    }

    #[test]
    fn order_of_reviews_is_irrelevant() {
        let a = vec![review(0.0, 5, "x y"), review(9.0, 2, "y"), review(3.0, 4, "x z")];
        let mut b = a.clone();
        b.reverse();
        let cfg = TextConfig::default();
        assert_eq!(metadata_features(&set(a), &cfg), metadata_features(&set(b), &cfg));
    }
}
