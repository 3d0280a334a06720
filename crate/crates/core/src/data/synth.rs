//! Seeded synthetic datasets.
//!
//! [`mini_dataset`] generates the bundled ~100 user x 200 item sample used by
//! the golden tests and the default pipeline run. Item popularity and user
//! activity are Zipf-shaped; rating values come from a small latent-factor
//! model with noise, rounded to whole stars.

use std::sync::Arc;

use indexmap::IndexSet;
use rand_distr::{Distribution, Normal};

use super::{Rating, RatingScale, RatingsDataset};
use crate::error::Result;
use crate::rng::SeededRng;

/// Parameters for [`mini_dataset`].
#[derive(Clone, Debug)]
pub struct MiniConfig {
    pub users: usize,
    pub items: usize,
    pub seed: u64,
    /// Zipf exponent of item popularity.
    pub item_exponent: f64,
    /// Zipf exponent of user activity.
    pub user_exponent: f64,
    pub max_per_user: usize,
    pub min_per_user: usize,
}

impl Default for MiniConfig {
    fn default() -> Self {
        Self {
            users: 100,
            items: 200,
            seed: 20220601,
            item_exponent: 1.1,
            user_exponent: 0.6,
            max_per_user: 100,
            min_per_user: 10,
        }
    }
}

pub const MINI_TIMESTAMP_BASE: i64 = 978_300_000;

/// Generates the bundled mini-dataset. External ids are `1..=users` and
/// `1..=items`; item ids are assigned to popularity ranks by a seeded
/// permutation so that id order carries no popularity signal.
pub fn mini_dataset(cfg: &MiniConfig) -> Result<RatingsDataset> {
    let mut rng = SeededRng::new(cfg.seed);
    let noise = Normal::new(0.0, 0.6).expect("valid sigma");
    let factor = Normal::new(0.0, 0.55).expect("valid sigma");
    let bias_user = Normal::new(0.0, 0.35).expect("valid sigma");
    let bias_item = Normal::new(0.0, 0.45).expect("valid sigma");
    const LATENT: usize = 3;

    let item_of_rank = rng.permutation(cfg.items);
    let item_weight: Vec<f64> = (0..cfg.items)
        .map(|r| 1.0 / ((r + 1) as f64).powf(cfg.item_exponent))
        .collect();
    let user_factors: Vec<[f64; LATENT]> = (0..cfg.users)
        .map(|_| std::array::from_fn(|_| factor.sample(&mut rng)))
        .collect();
    let item_factors: Vec<[f64; LATENT]> = (0..cfg.items)
        .map(|_| std::array::from_fn(|_| factor.sample(&mut rng)))
        .collect();
    let user_bias: Vec<f64> = (0..cfg.users).map(|_| bias_user.sample(&mut rng)).collect();
    let item_bias: Vec<f64> = (0..cfg.items).map(|_| bias_item.sample(&mut rng)).collect();

    let mut ratings = Vec::new();
    let mut clock = MINI_TIMESTAMP_BASE;
    for user in 0..cfg.users {
        let activity = cfg.max_per_user as f64 / ((user + 1) as f64).powf(cfg.user_exponent);
        let count = (activity.round() as usize).clamp(cfg.min_per_user, cfg.max_per_user.min(cfg.items));

        // Weighted sampling without replacement over popularity ranks.
        let mut weights = item_weight.clone();
        let mut total: f64 = weights.iter().sum();
        let mut picked = Vec::with_capacity(count);
        for _ in 0..count {
            let mut target = rng.unit() * total;
            let mut chosen = weights.len() - 1;
            for (rank, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    if target < *w {
                        chosen = rank;
                        break;
                    }
                    target -= w;
                }
            }
            while weights[chosen] == 0.0 {
                chosen -= 1;
            }
            total -= weights[chosen];
            weights[chosen] = 0.0;
            picked.push(chosen);
        }

        for rank in picked {
            let item = item_of_rank[rank];
            let affinity: f64 = user_factors[user]
                .iter()
                .zip(&item_factors[item])
                .map(|(a, b)| a * b)
                .sum();
            let popular_boost = 0.3 * item_weight[rank].sqrt();
            let raw = 3.55
                + user_bias[user]
                + item_bias[item]
                + popular_boost
                + affinity
                + noise.sample(&mut rng);
            let value = raw.round().clamp(1.0, 5.0);
            clock += 1 + rng.below(3600) as i64;
            ratings.push(Rating {
                user,
                item,
                value,
                timestamp: Some(clock),
            });
        }
    }

    // Re-index in order of first appearance so that only rated items exist.
    let mut users = IndexSet::new();
    let mut items = IndexSet::new();
    for r in &mut ratings {
        r.user = users.insert_full((r.user + 1).to_string()).0;
        r.item = items.insert_full((r.item + 1).to_string()).0;
    }
    RatingsDataset::from_parts(Arc::new(users), Arc::new(items), ratings, RatingScale::FIVE_STAR)
}

/// Fully observed, noiseless rank-`rank` matrix `R = A B^T` with factor
/// entries drawn from `[lo, hi)`. Ratings carry a scale that contains every
/// generated value.
pub fn low_rank_dataset(
    users: usize,
    items: usize,
    rank: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<RatingsDataset> {
    let mut rng = SeededRng::new(seed);
    let mut draw = |n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..rank).map(|_| lo + (hi - lo) * rng.unit()).collect())
            .collect()
    };
    let a = draw(users);
    let b = draw(items);
    let mut ratings = Vec::with_capacity(users * items);
    for (u, au) in a.iter().enumerate() {
        for (i, bi) in b.iter().enumerate() {
            let v: f64 = au.iter().zip(bi).map(|(x, y)| x * y).sum();
            ratings.push(Rating::new(u, i, v));
        }
    }
    let scale = RatingScale::new(0.0, (rank as f64 * hi * hi).max(1.0))?;
    RatingsDataset::from_indexed(users, items, ratings, scale)
}
