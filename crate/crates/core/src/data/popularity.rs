use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RatingsDataset;

/// Which entity a per-entity statistic refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    User,
    Item,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::User => "user",
            Side::Item => "item",
        }
    }
}

/// Number of ratings per user or item, indexed densely.
pub fn entity_counts(dataset: &RatingsDataset, side: Side) -> Vec<usize> {
    let size = match side {
        Side::User => dataset.num_users(),
        Side::Item => dataset.num_items(),
    };
    let mut counts = vec![0usize; size];
    for r in dataset.ratings() {
        let idx = match side {
            Side::User => r.user,
            Side::Item => r.item,
        };
        counts[idx] += 1;
    }
    counts
}

/// Entity indices by descending count, ties broken by ascending index.
pub fn popularity_order(counts: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order
}

/// `(rank, count)` of items with at least one rating, rank starting at 1.
pub fn popularity_curve(dataset: &RatingsDataset) -> Vec<(usize, usize)> {
    let counts = entity_counts(dataset, Side::Item);
    popularity_order(&counts)
        .into_iter()
        .map(|i| counts[i])
        .take_while(|&c| c > 0)
        .enumerate()
        .map(|(k, c)| (k + 1, c))
        .collect()
}

/// `(rating value, frequency)` for every distinct rating value, ascending.
pub fn rating_value_frequency(dataset: &RatingsDataset) -> Vec<(f64, usize)> {
    // Keyed on the bit pattern; ratings are finite and never -0.0 after parsing.
    let mut freq: BTreeMap<u64, usize> = BTreeMap::new();
    for r in dataset.ratings() {
        *freq.entry((r.value + 0.0).to_bits()).or_default() += 1;
    }
    let mut out: Vec<(f64, usize)> = freq
        .into_iter()
        .map(|(bits, c)| (f64::from_bits(bits), c))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Rating, RatingScale};

    fn ds(ratings: Vec<Rating>, users: usize, items: usize) -> RatingsDataset {
        RatingsDataset::from_indexed(users, items, ratings, RatingScale::FIVE_STAR).unwrap()
    }

    #[test]
    fn sorted_by_count_then_index() {
        // a:3, b:1, c:1
        let d = ds(
            vec![
                Rating::new(0, 2, 3.0),
                Rating::new(0, 0, 4.0),
                Rating::new(1, 0, 4.0),
                Rating::new(2, 0, 4.0),
                Rating::new(1, 1, 2.0),
            ],
            3,
            3,
        );
        assert_eq!(popularity_curve(&d), vec![(1, 3), (2, 1), (3, 1)]);
        assert_eq!(popularity_order(&entity_counts(&d, Side::Item)), vec![0, 1, 2]);
    }

    #[test]
    fn uniform_counts_are_flat() {
        let ratings = (0..4)
            .flat_map(|u| (0..3).map(move |i| Rating::new(u, i, 3.0)))
            .collect();
        let curve = popularity_curve(&ds(ratings, 4, 3));
        assert!(curve.iter().all(|&(_, c)| c == 4));
    }

    #[test]
    fn rating_values() {
        let d = ds(
            vec![
                Rating::new(0, 0, 4.0),
                Rating::new(0, 1, 1.0),
                Rating::new(1, 0, 4.0),
            ],
            2,
            2,
        );
        assert_eq!(rating_value_frequency(&d), vec![(1.0, 1), (4.0, 2)]);
    }
}
