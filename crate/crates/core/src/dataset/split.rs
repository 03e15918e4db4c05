use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DatasetError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

/// Draws `validation_size` records from `train` with a seeded generator.
/// Both partitions keep input order; `test` passes through untouched.
pub fn split<T>(train: Vec<T>, test: Vec<T>, validation_size: usize, seed: u64) -> Result<Split<T>, DatasetError> {
    if validation_size > 0 && validation_size >= train.len() {
        return Err(DatasetError::SplitTooLarge { requested: validation_size, available: train.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = vec![false; train.len()];
    for i in sample(&mut rng, train.len(), validation_size) {
        picked[i] = true;
    }
    let (validation, train): (Vec<_>, Vec<_>) = train.into_iter().zip(picked).partition(|(_, p)| *p);
    Ok(Split {
        train: train.into_iter().map(|(r, _)| r).collect(),
        validation: validation.into_iter().map(|(r, _)| r).collect(),
        test,
    })
}
