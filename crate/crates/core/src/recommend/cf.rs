use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::data::{RatingScale, RatingsDataset, Side};
use crate::error::{Error, Result};
use crate::similarity::{similarity_matrix, SimilarityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CfMode {
    UserBased,
    ItemBased,
}

impl CfMode {
    fn side(self) -> Side {
        match self {
            CfMode::UserBased => Side::User,
            CfMode::ItemBased => Side::Item,
        }
    }
}

/// A neighborhood prediction and how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfPrediction {
    pub value: f64,
    /// The user or item index is unknown to the model.
    pub cold: bool,
    /// No neighbor had rated the target, so the global mean was used.
    pub fallback: bool,
}

/// K-nearest-neighbor collaborative filtering on raw cosine similarity.
///
/// User-based: the prediction for `(u, i)` is the similarity-weighted mean of
/// the ratings of item `i` by the `K` users most similar to `u` among those who
/// rated `i`. Item-based swaps the roles.
#[derive(Clone, Debug)]
pub struct CollaborativeFilter {
    mode: CfMode,
    neighbors: usize,
    sim: SimilarityMatrix,
    /// Per entity on the similarity side: (context index, rating), sorted.
    rated: Vec<Vec<(usize, f64)>>,
    global_mean: f64,
    scale: RatingScale,
    num_users: usize,
    num_items: usize,
}

impl CollaborativeFilter {
    pub fn fit(
        train: &RatingsDataset,
        mode: CfMode,
        neighbors: usize,
        min_support: usize,
    ) -> Result<Self> {
        let sim = similarity_matrix(train, mode.side(), min_support)?;
        Self::with_similarity(train, mode, neighbors, sim)
    }

    pub fn with_similarity(
        train: &RatingsDataset,
        mode: CfMode,
        neighbors: usize,
        sim: SimilarityMatrix,
    ) -> Result<Self> {
        if neighbors == 0 {
            return Err(Error::invalid("neighbor count K must be at least 1"));
        }
        if train.is_empty() {
            return Err(Error::invalid("training set is empty"));
        }
        let size = match mode {
            CfMode::UserBased => train.num_users(),
            CfMode::ItemBased => train.num_items(),
        };
        if sim.side() != mode.side() || sim.size() != size {
            return Err(Error::invalid("similarity matrix does not match the CF mode"));
        }
        let mut rated = vec![Vec::new(); size];
        for r in train.ratings() {
            match mode {
                CfMode::UserBased => rated[r.user].push((r.item, r.value)),
                CfMode::ItemBased => rated[r.item].push((r.user, r.value)),
            }
        }
        for list in &mut rated {
            list.sort_by_key(|&(c, _)| c);
        }
        Ok(Self {
            mode,
            neighbors,
            sim,
            rated,
            global_mean: train.mean_rating(),
            scale: train.scale(),
            num_users: train.num_users(),
            num_items: train.num_items(),
        })
    }

    pub fn predict_detailed(&self, user: usize, item: usize) -> CfPrediction {
        let mean = self.scale.clamp(self.global_mean);
        if user >= self.num_users || item >= self.num_items {
            return CfPrediction {
                value: mean,
                cold: true,
                fallback: true,
            };
        }
        let (target, context) = match self.mode {
            CfMode::UserBased => (user, item),
            CfMode::ItemBased => (item, user),
        };
        let mut candidates: Vec<(usize, f64, f64)> = self
            .sim
            .neighbors(target)
            .iter()
            .filter_map(|&(b, s)| {
                let list = &self.rated[b];
                list.binary_search_by_key(&context, |&(c, _)| c)
                    .ok()
                    .map(|pos| (b, s, list[pos].1))
            })
            .collect();
        candidates.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        candidates.truncate(self.neighbors);

        let weight: f64 = candidates.iter().map(|c| c.1).sum();
        if candidates.is_empty() || weight <= 0.0 {
            return CfPrediction {
                value: mean,
                cold: false,
                fallback: true,
            };
        }
        let value = candidates.iter().map(|c| c.1 * c.2).sum::<f64>() / weight;
        CfPrediction {
            value: self.scale.clamp(value),
            cold: false,
            fallback: false,
        }
    }
}

impl Predictor for CollaborativeFilter {
    fn predict(&self, user: usize, item: usize) -> f64 {
        self.predict_detailed(user, item).value
    }

    fn scale(&self) -> RatingScale {
        self.scale
    }
}

/// One-shot neighborhood prediction for `(user, item)`.
pub fn cf_predict(
    train: &RatingsDataset,
    mode: CfMode,
    neighbors: usize,
    user: usize,
    item: usize,
) -> Result<CfPrediction> {
    Ok(CollaborativeFilter::fit(train, mode, neighbors, 1)?.predict_detailed(user, item))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Rating;

    fn ds(ratings: Vec<Rating>, users: usize, items: usize) -> RatingsDataset {
        RatingsDataset::from_indexed(users, items, ratings, RatingScale::FIVE_STAR).unwrap()
    }

    #[test]
    fn single_neighbor() {
        // users 0 and 1 share item 0; user 1 rated item 1 as 4.
        let d = ds(
            vec![
                Rating::new(0, 0, 3.0),
                Rating::new(1, 0, 5.0),
                Rating::new(1, 1, 4.0),
            ],
            2,
            2,
        );
        let p = cf_predict(&d, CfMode::UserBased, 5, 0, 1).unwrap();
        assert_eq!(p.value, 4.0);
        assert!(!p.fallback);
    }

    #[test]
    fn no_neighbor_falls_back_to_global_mean() {
        let d = ds(
            vec![
                Rating::new(0, 0, 3.0),
                Rating::new(1, 1, 5.0),
                Rating::new(1, 2, 4.0),
            ],
            2,
            3,
        );
        let p = cf_predict(&d, CfMode::UserBased, 5, 0, 1).unwrap();
        assert_eq!(p.value, 4.0);
        assert!(p.fallback);
    }

    #[test]
    fn weighted_mean_of_two_neighbors() {
        // Users 1 and 2 rated item 0 as 5 and 2; similarities to user 0 fixed.
        let d = ds(
            vec![
                Rating::new(0, 1, 3.0),
                Rating::new(1, 0, 5.0),
                Rating::new(2, 0, 2.0),
            ],
            3,
            2,
        );
        let sim =
            SimilarityMatrix::from_pairs(Side::User, 3, &[(0, 1, 0.8), (0, 2, 0.4)]).unwrap();
        let cf = CollaborativeFilter::with_similarity(&d, CfMode::UserBased, 2, sim.clone()).unwrap();
        assert!((cf.predict(0, 0) - 4.0).abs() < 1e-12);
        // K = 1 keeps only the 0.8 neighbor.
        let cf = CollaborativeFilter::with_similarity(&d, CfMode::UserBased, 1, sim).unwrap();
        assert_eq!(cf.predict(0, 0), 5.0);
    }

    #[test]
    fn item_based_mirror() {
        let d = ds(
            vec![
                Rating::new(0, 0, 3.0),
                Rating::new(0, 1, 5.0),
                Rating::new(1, 1, 4.0),
            ],
            2,
            2,
        );
        // items 0 and 1 share user 0; user 1 rated item 1 as 4 -> predict (1, 0) = 4
        let p = cf_predict(&d, CfMode::ItemBased, 3, 1, 0).unwrap();
        assert_eq!(p.value, 4.0);
    }

    #[test]
    fn unknown_index_is_cold() {
        let d = ds(vec![Rating::new(0, 0, 2.0)], 1, 1);
        let p = cf_predict(&d, CfMode::UserBased, 1, 7, 0).unwrap();
        assert!(p.cold);
        assert_eq!(p.value, 2.0);
    }
}
