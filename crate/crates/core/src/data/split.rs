use super::RatingsDataset;
use crate::error::{Error, Result};
use crate::rng::{SeededRng, SPLIT_STREAM};

/// Train/test halves sharing the source dataset's index maps and scale.
#[derive(Clone, Debug)]
pub struct SplitPair {
    pub train: RatingsDataset,
    pub test: RatingsDataset,
    pub seed: u64,
    pub ratio: f64,
}

/// Seeded hold-out split.
///
/// Triplet positions are shuffled with `SeededRng::stream(seed, SPLIT_STREAM)`
/// and the first `ceil(ratio * len)` shuffled positions form the training
/// set. Both halves keep the source order of their triplets.
pub fn split(dataset: &RatingsDataset, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    if dataset.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    let n = dataset.len();
    let mut rng = SeededRng::stream(seed, SPLIT_STREAM);
    let order = rng.permutation(n);
    let n_train = ((ratio * n as f64).ceil() as usize).min(n);

    let mut in_train = vec![false; n];
    for &pos in &order[..n_train] {
        in_train[pos] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = dataset
        .ratings()
        .iter()
        .zip(&in_train)
        .partition(|(_, &t)| t);

    Ok(SplitPair {
        train: dataset.with_ratings(train.into_iter().map(|(r, _)| *r).collect()),
        test: dataset.with_ratings(test.into_iter().map(|(r, _)| *r).collect()),
        seed,
        ratio,
    })
}
