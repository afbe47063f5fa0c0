//! Seeded synthetic marketplace.
//!
//! Organic products draw all reviewers from a large pool. A fake-buyer
//! product draws `ceil(fake_mix * k)` of its `k` reviewers from a small shared
//! pool of paid reviewers, which is what makes such products dense in the
//! co-reviewer graph. Everything else that depends on the label (ratings,
//! arrival gaps, topical words, image shift) is tied to reviews coming from
//! that pool, so `fake_mix = 0` leaves the label as the only difference.
//!
//! Product `i` is generated from its own stream `(seed, i)`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Bernoulli, Distribution, Exp, Geometric, StandardNormal, Zipf};
use serde::{Deserialize, Serialize};

use crate::records::{ImageEmbedding, ImageOwner, Label, ProductReviewSet, ReviewRecord, EMBEDDING_DIM};
use crate::rng::{sample_indices, stream, StreamRng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("fake products need up to {needed} distinct reviewers but fake_pool has {pool}")]
    FakePoolTooSmall { needed: usize, pool: usize },
    #[error("products need up to {needed} distinct organic reviewers but organic_pool has {pool}")]
    OrganicPoolTooSmall { needed: usize, pool: usize },
}

/// Inclusive integer range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub min: usize,
    pub max: usize,
}

impl Range {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    fn draw<R: Rng>(self, rng: &mut R) -> usize {
        rng.random_range(self.min..=self.max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_organic_products: usize,
    pub n_fake_products: usize,
    pub organic_pool: usize,
    pub fake_pool: usize,
    pub reviews_per_product: Range,
    /// Fraction of a fake product's reviewers drawn from the fake pool.
    pub fake_mix: f64,
    /// Probabilities of 1..=5 stars.
    pub organic_rating_probs: [f64; 5],
    pub fake_rating_probs: [f64; 5],
    /// Mean gap before a review, by the reviewer's pool.
    pub mean_gap_days_organic: f64,
    pub mean_gap_days_fake: f64,
    /// First review of each product falls uniformly in `[0, span)` days.
    pub start_span_days: f64,
    pub vocabulary_size: usize,
    pub topic_vocabulary_size: usize,
    /// Chance that a word of a fake-pool review comes from the topic words.
    pub fake_topic_rate: f64,
    /// Words per review.
    pub review_length: Range,
    pub helpful_rate: f64,
    pub photo_rate: f64,
    pub product_images: Range,
    pub review_images: Range,
    /// Weight of the per-product direction shared by all its images.
    pub product_style: f64,
    /// Weight of the common direction added to fake-pool review images.
    /// Fake product images get `image_shift * fake_mix`.
    pub image_shift: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_organic_products: 100,
            n_fake_products: 50,
            organic_pool: 50_000,
            fake_pool: 300,
            reviews_per_product: Range::new(20, 40),
            fake_mix: 0.8,
            organic_rating_probs: [0.05, 0.04, 0.08, 0.18, 0.65],
            fake_rating_probs: [0.03, 0.02, 0.03, 0.07, 0.85],
            mean_gap_days_organic: 7.0,
            mean_gap_days_fake: 4.5,
            start_span_days: 365.0,
            vocabulary_size: 400,
            topic_vocabulary_size: 30,
            fake_topic_rate: 0.2,
            review_length: Range::new(8, 40),
            helpful_rate: 0.35,
            photo_rate: 0.2,
            product_images: Range::new(1, 3),
            review_images: Range::new(1, 2),
            product_style: 0.5,
            image_shift: 0.14,
        }
    }
}

/// `ceil(mix * k)`, ignoring the last-bit noise of the product.
fn fake_count(mix: f64, k: usize) -> usize {
    let raw = mix * k as f64;
    let r = libm::round(raw);
    let v = if libm::fabs(raw - r) < 1e-9 { r } else { libm::ceil(raw) };
    v as usize
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        for (name, p) in [
            ("organic_rating_probs", &self.organic_rating_probs),
            ("fake_rating_probs", &self.fake_rating_probs),
        ] {
            if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return bad(&format!("{name} has a negative or non-finite entry"));
            }
            let s: f64 = p.iter().sum();
            if libm::fabs(s - 1.0) > 1e-9 {
                return bad(&format!("{name} sums to {s}, not 1"));
            }
        }
        if self.fake_pool >= self.organic_pool {
            return bad("fake_pool must be smaller than organic_pool");
        }
        if !(0.0..=1.0).contains(&self.fake_mix) {
            return bad("fake_mix must lie in [0, 1]");
        }
        for (name, r, lo) in [
            ("reviews_per_product", self.reviews_per_product, 1),
            ("review_length", self.review_length, 0),
            ("product_images", self.product_images, 0),
            ("review_images", self.review_images, 1),
        ] {
            if r.min < lo || r.min > r.max {
                return bad(&format!("{name} must satisfy {lo} <= min <= max"));
            }
        }
        for (name, v) in [
            ("mean_gap_days_organic", self.mean_gap_days_organic),
            ("mean_gap_days_fake", self.mean_gap_days_fake),
            ("start_span_days", self.start_span_days),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        for (name, v) in [
            ("fake_topic_rate", self.fake_topic_rate),
            ("helpful_rate", self.helpful_rate),
            ("photo_rate", self.photo_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        for (name, v) in [("product_style", self.product_style), ("image_shift", self.image_shift)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be non-negative"));
            }
        }
        if self.vocabulary_size == 0 || self.topic_vocabulary_size == 0 {
            return bad("vocabularies must be non-empty");
        }
        let k = self.reviews_per_product.max;
        let needed = if self.n_fake_products > 0 { fake_count(self.fake_mix, k) } else { 0 };
        if needed > self.fake_pool {
            return Err(SynthError::FakePoolTooSmall {
                needed,
                pool: self.fake_pool,
            });
        }
        if k > self.organic_pool {
            return Err(SynthError::OrganicPoolTooSmall {
                needed: k,
                pool: self.organic_pool,
            });
        }
        Ok(())
    }
}

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "ta", "vi", "so", "de", "pa", "zu", "ge", "fo", "ri", "ba", "hu",
];

/// Distinct pronounceable word for every index (base-16 digits of `i + 16`).
fn word(i: usize) -> String {
    let mut n = i + 16;
    let mut digits = Vec::new();
    while n > 0 {
        digits.push(n % 16);
        n /= 16;
    }
    digits.iter().rev().map(|&d| SYLLABLES[d]).collect()
}

fn gaussian_vector<R: Rng>(rng: &mut R) -> Vec<f64> {
    (0..EMBEDDING_DIM).map(|_| StandardNormal.sample(rng)).collect()
}

/// `noise + a * u + b * w`, rounded to 4 decimals to keep files compact.
fn mix_vector(noise: Vec<f64>, a: f64, u: &[f64], b: f64, w: &[f64]) -> Vec<f64> {
    noise
        .iter()
        .zip(u.iter().zip(w))
        .map(|(z, (x, y))| libm::round((z + a * x + b * y) * 1e4) / 1e4)
        .collect()
}

struct Shared {
    general: Vec<String>,
    topic: Vec<String>,
    zipf: Zipf<f64>,
    ratings: [WeightedIndex<f64>; 2],
    gaps: [Exp<f64>; 2],
    helpful: Bernoulli,
    photo: Bernoulli,
    topical: Bernoulli,
    votes: Geometric,
    direction: Vec<f64>,
}

/// Generates the labelled review sets (sorted by product id) and the image
/// embeddings. Deterministic in `cfg`.
pub fn generate(cfg: &SynthConfig) -> Result<(Vec<ProductReviewSet>, Vec<ImageEmbedding>), SynthError> {
    cfg.validate()?;
    let invalid = |e: &dyn core::fmt::Display| SynthError::InvalidConfig(e.to_string());
    let shared = Shared {
        general: (0..cfg.vocabulary_size).map(word).collect(),
        topic: (cfg.vocabulary_size..cfg.vocabulary_size + cfg.topic_vocabulary_size)
            .map(word)
            .collect(),
        zipf: Zipf::new(cfg.vocabulary_size as f64, 1.0).map_err(|e| invalid(&e))?,
        ratings: [
            WeightedIndex::new(cfg.organic_rating_probs).map_err(|e| invalid(&e))?,
            WeightedIndex::new(cfg.fake_rating_probs).map_err(|e| invalid(&e))?,
        ],
        gaps: [
            Exp::new(1.0 / cfg.mean_gap_days_organic).map_err(|e| invalid(&e))?,
            Exp::new(1.0 / cfg.mean_gap_days_fake).map_err(|e| invalid(&e))?,
        ],
        helpful: Bernoulli::new(cfg.helpful_rate).map_err(|e| invalid(&e))?,
        photo: Bernoulli::new(cfg.photo_rate).map_err(|e| invalid(&e))?,
        topical: Bernoulli::new(cfg.fake_topic_rate).map_err(|e| invalid(&e))?,
        votes: Geometric::new(0.5).map_err(|e| invalid(&e))?,
        direction: gaussian_vector(&mut stream(cfg.seed, u64::MAX - 1)),
    };

    let n = cfg.n_organic_products + cfg.n_fake_products;
    let mut labels: Vec<Label> = core::iter::repeat_n(Label::Organic, cfg.n_organic_products)
        .chain(core::iter::repeat_n(Label::FakeBuyer, cfg.n_fake_products))
        .collect();
    labels.shuffle(&mut stream(cfg.seed, u64::MAX));
    let width = n.saturating_sub(1).to_string().len().max(5);

    let mut sets = Vec::with_capacity(n);
    let mut images = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        let id = format!("P{i:0width$}");
        let mut rng = stream(cfg.seed, i as u64);
        let (set, imgs) = product(cfg, &shared, id, label, &mut rng);
        sets.push(set);
        images.extend(imgs);
    }
    Ok((sets, images))
}

fn product(
    cfg: &SynthConfig,
    sh: &Shared,
    id: String,
    label: Label,
    rng: &mut StreamRng,
) -> (ProductReviewSet, Vec<ImageEmbedding>) {
    let k = cfg.reviews_per_product.draw(rng);
    let n_fake = if label == Label::FakeBuyer { fake_count(cfg.fake_mix, k) } else { 0 };
    let fake = sample_indices(rng, cfg.fake_pool, n_fake);
    let organic = sample_indices(rng, cfg.organic_pool, k - n_fake);
    let mut slots: Vec<(usize, String)> = fake
        .iter()
        .map(|r| (1, format!("f{r}")))
        .chain(organic.iter().map(|r| (0, format!("o{r}"))))
        .collect();
    slots.shuffle(rng);

    let style = gaussian_vector(rng);
    let shift = if label == Label::FakeBuyer { cfg.image_shift * cfg.fake_mix } else { 0.0 };
    let mut images = Vec::new();
    for j in 0..cfg.product_images.draw(rng) {
        let v = mix_vector(gaussian_vector(rng), cfg.product_style, &style, shift, &sh.direction);
        images.push(ImageEmbedding {
            owner: ImageOwner::ProductImage,
            product_id: id.clone(),
            review_id: None,
            image_id: format!("{id}/p{j}"),
            vector: v,
        });
    }

    let mut t = rng.random::<f64>() * cfg.start_span_days;
    let mut reviews = Vec::with_capacity(k);
    for (r, (pool, reviewer)) in slots.into_iter().enumerate() {
        if r > 0 {
            t += sh.gaps[pool].sample(rng);
        }
        let rating = sh.ratings[pool].sample(rng) as u8 + 1;
        let words = cfg.review_length.draw(rng);
        let mut text = String::new();
        for w in 0..words {
            if w > 0 {
                text.push(' ');
            }
            let topical = pool == 1 && sh.topical.sample(rng);
            if topical {
                text.push_str(&sh.topic[rng.random_range(0..sh.topic.len())]);
            } else {
                text.push_str(&sh.general[sh.zipf.sample(rng) as usize - 1]);
            }
        }
        let helpful_votes = if sh.helpful.sample(rng) { 1 + sh.votes.sample(rng) as u32 } else { 0 };
        let has_photo = sh.photo.sample(rng);
        if has_photo {
            let review_id = format!("{id}/{reviewer}");
            let s = if pool == 1 { cfg.image_shift } else { 0.0 };
            for j in 0..cfg.review_images.draw(rng) {
                let v = mix_vector(gaussian_vector(rng), cfg.product_style, &style, s, &sh.direction);
                images.push(ImageEmbedding {
                    owner: ImageOwner::ReviewImage,
                    product_id: id.clone(),
                    review_id: Some(review_id.clone()),
                    image_id: format!("{review_id}/{j}"),
                    vector: v,
                });
            }
        }
        reviews.push(ReviewRecord {
            product_id: id.clone(),
            reviewer_id: reviewer,
            rating,
            timestamp: t,
            text,
            helpful_votes,
            has_photo,
            label: Some(label),
        });
    }
    reviews.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp).then_with(|| a.reviewer_id.cmp(&b.reviewer_id)));
    (
        ProductReviewSet {
            product_id: id,
            reviews,
            label: Some(label),
        },
        images,
    )
}
