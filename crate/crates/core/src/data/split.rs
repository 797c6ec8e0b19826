use rand::seq::SliceRandom;

use super::MilDataset;
use crate::error::{Error, Result};
use crate::rng;

const MAX_ATTEMPTS: usize = 10_000;

/// Bag-level random train/test partition.
///
/// The permutation is redrawn until both sides hold at least one positive
/// bag. Bags keep their original relative order inside each side.
pub fn split_train_test(
    dataset: &MilDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(MilDataset, MilDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let total = dataset.bag_count();
    let positives = dataset
        .bags()
        .iter()
        .filter(|b| b.label.is_positive())
        .count();
    if positives < 2 {
        return Err(Error::ImpossibleSplit(format!(
            "need at least 2 positive bags, found {positives}"
        )));
    }
    let n_train = ((train_fraction * total as f64).round() as usize).clamp(1, total - 1);

    let mut rng = rng::stream(seed, rng::SPLIT_STREAM);
    let mut order: Vec<usize> = (0..total).collect();
    for _ in 0..MAX_ATTEMPTS {
        order.shuffle(&mut rng);
        let (train, test) = order.split_at(n_train);
        let has_positive = |side: &[usize]| side.iter().any(|&i| dataset.bags()[i].label.is_positive());
        if has_positive(train) && has_positive(test) {
            let mut train = train.to_vec();
            let mut test = test.to_vec();
            train.sort_unstable();
            test.sort_unstable();
            return Ok((
                dataset.subset(format!("{}-train", dataset.name()), &train),
                dataset.subset(format!("{}-test", dataset.name()), &test),
            ));
        }
    }
    Err(Error::ImpossibleSplit(
        "no permutation put a positive bag on both sides".into(),
    ))
}
