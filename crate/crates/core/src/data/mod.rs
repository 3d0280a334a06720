//! Rating datasets: parsing, canonical serialization, splits and popularity
//! curves.

mod ingest;
mod popularity;
mod split;
pub mod synth;

use std::sync::Arc;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{load_ratings, parse_ratings, write_canonical, IngestReport, InputFormat};
pub use popularity::{
    entity_counts, popularity_curve, popularity_order, rating_value_frequency, Side,
};
pub use split::{split, SplitPair};

/// Closed interval of representable rating values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    pub const FIVE_STAR: RatingScale = RatingScale { min: 1.0, max: 5.0 };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid(format!(
                "rating scale must satisfy min < max, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

impl Default for RatingScale {
    fn default() -> Self {
        Self::FIVE_STAR
    }
}

/// One observed rating, addressed by dense user/item indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
    pub timestamp: Option<i64>,
}

impl Rating {
    pub fn new(user: usize, item: usize, value: f64) -> Self {
        Self {
            user,
            item,
            value,
            timestamp: None,
        }
    }
}

/// Sparse explicit-feedback dataset with dense index maps.
///
/// Index maps are shared (`Arc`) so that the two halves of a split address the
/// same users and items as their source.
#[derive(Clone, Debug)]
pub struct RatingsDataset {
    users: Arc<IndexSet<String>>,
    items: Arc<IndexSet<String>>,
    ratings: Vec<Rating>,
    scale: RatingScale,
}

impl RatingsDataset {
    /// Builds a dataset whose external ids are the decimal dense indices.
    ///
    /// Checks index bounds, the rating scale and (user, item) uniqueness.
    pub fn from_indexed(
        num_users: usize,
        num_items: usize,
        ratings: Vec<Rating>,
        scale: RatingScale,
    ) -> Result<Self> {
        let users: IndexSet<String> = (0..num_users).map(|u| u.to_string()).collect();
        let items: IndexSet<String> = (0..num_items).map(|i| i.to_string()).collect();
        Self::from_parts(Arc::new(users), Arc::new(items), ratings, scale)
    }

    pub(crate) fn from_parts(
        users: Arc<IndexSet<String>>,
        items: Arc<IndexSet<String>>,
        ratings: Vec<Rating>,
        scale: RatingScale,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(ratings.len());
        for r in &ratings {
            if r.user >= users.len() || r.item >= items.len() {
                return Err(Error::invalid(format!(
                    "rating ({}, {}) outside index range {}x{}",
                    r.user,
                    r.item,
                    users.len(),
                    items.len()
                )));
            }
            if !scale.contains(r.value) {
                return Err(Error::invalid(format!(
                    "rating {} outside [{}, {}]",
                    r.value, scale.min, scale.max
                )));
            }
            if !seen.insert((r.user, r.item)) {
                return Err(Error::invalid(format!(
                    "duplicate rating for ({}, {})",
                    r.user, r.item
                )));
            }
        }
        Ok(Self {
            users,
            items,
            ratings,
            scale,
        })
    }

    /// Same index maps and scale, different ratings. Used by splits.
    pub(crate) fn with_ratings(&self, ratings: Vec<Rating>) -> Self {
        Self {
            users: Arc::clone(&self.users),
            items: Arc::clone(&self.items),
            ratings,
            scale: self.scale,
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn user_id(&self, index: usize) -> Option<&str> {
        self.users.get_index(index).map(String::as_str)
    }

    pub fn item_id(&self, index: usize) -> Option<&str> {
        self.items.get_index(index).map(String::as_str)
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.users.get_index_of(id)
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.get_index_of(id)
    }

    pub fn mean_rating(&self) -> f64 {
        if self.ratings.is_empty() {
            return self.scale.midpoint();
        }
        self.ratings.iter().map(|r| r.value).sum::<f64>() / self.ratings.len() as f64
    }

    /// Whether both datasets address the same index maps.
    pub fn shares_index_with(&self, other: &RatingsDataset) -> bool {
        Arc::ptr_eq(&self.users, &other.users) && Arc::ptr_eq(&self.items, &other.items)
    }
}

/// Re-expresses two separately loaded datasets over one index space.
///
/// Ids of `first` keep their positions; ids only seen in `second` are
/// appended in order of appearance. Both results share the merged maps.
pub fn unify(first: &RatingsDataset, second: &RatingsDataset) -> Result<(RatingsDataset, RatingsDataset)> {
    if first.scale != second.scale {
        return Err(Error::invalid("datasets use different rating scales"));
    }
    let mut users = (*first.users).clone();
    let mut items = (*first.items).clone();
    let remapped: Vec<Rating> = second
        .ratings
        .iter()
        .map(|r| Rating {
            user: users.insert_full(second.users[r.user].clone()).0,
            item: items.insert_full(second.items[r.item].clone()).0,
            ..*r
        })
        .collect();
    let users = Arc::new(users);
    let items = Arc::new(items);
    let a = RatingsDataset::from_parts(Arc::clone(&users), Arc::clone(&items), first.ratings.clone(), first.scale)?;
    let b = RatingsDataset::from_parts(users, items, remapped, second.scale)?;
    Ok((a, b))
}
