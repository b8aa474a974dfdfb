//! Cross-fitting splits.

use rand::seq::{index::sample, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PokerError, Result};

/// Partitions `0..n` into `k` shuffled folds whose sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(PokerError::KOutOfRange { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = base + usize::from(i < extra);
        let mut fold = order[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Indices outside fold `i`.
pub fn training_indices(folds: &[Vec<usize>], i: usize) -> Vec<usize> {
    let mut train: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    train.sort_unstable();
    train
}

/// Uniform subsample of `n` items without replacement, in original order.
pub fn subsample_training<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>> {
    if n > items.len() {
        return Err(PokerError::SampleTooLarge {
            requested: n,
            available: items.len(),
        });
    }
    let mut picked = sample(&mut ChaCha8Rng::seed_from_u64(seed), items.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| items[i].clone()).collect())
}
