use rand::seq::SliceRandom;

use super::block::pick_distinct;
use crate::error::{Error, Result};
use crate::kg::AlignmentSet;

/// A training mini-batch `B = (phi_s' ∪ theta_s, phi_t' ∪ theta_t)`.
///
/// `source` and `target` hold per-side entity ids; the first `pairs.len()`
/// entries of each are the seed pairs, in pair order, and the rest are the
/// negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub num_pairs: usize,
}

impl TrainingBatch {
    pub fn negatives_source(&self) -> &[usize] {
        &self.source[self.num_pairs..]
    }

    pub fn negatives_target(&self) -> &[usize] {
        &self.target[self.num_pairs..]
    }
}

/// Draw `n_pairs` random seed pairs and up to `n_neg` negatives per side.
pub fn sample_training_batch(
    seed: &AlignmentSet,
    n_source: usize,
    n_target: usize,
    n_pairs: usize,
    n_neg: usize,
    rng: &mut impl rand::Rng,
) -> Result<TrainingBatch> {
    if n_pairs == 0 || n_pairs > seed.len() {
        return Err(Error::invalid(format!(
            "batch wants {n_pairs} pairs but the seed alignment has {}",
            seed.len()
        )));
    }
    let picked = pick_distinct(rng, &(0..seed.len()).collect::<Vec<_>>(), n_pairs);
    let pairs: Vec<(usize, usize)> = picked.iter().map(|&i| seed.pairs()[i]).collect();
    Ok(batch_with_negatives(&pairs, n_source, n_target, n_neg, rng))
}

pub(crate) fn batch_with_negatives(
    pairs: &[(usize, usize)],
    n_source: usize,
    n_target: usize,
    n_neg: usize,
    rng: &mut impl rand::Rng,
) -> TrainingBatch {
    let mut source: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let mut target: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    if n_neg > 0 {
        source.extend(negatives(&source, n_source, n_neg, rng));
        target.extend(negatives(&target, n_target, n_neg, rng));
    }
    TrainingBatch {
        source,
        target,
        num_pairs: pairs.len(),
    }
}

fn negatives(exclude: &[usize], n: usize, k: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut taken = vec![false; n];
    for &e in exclude {
        taken[e] = true;
    }
    let pool: Vec<usize> = (0..n).filter(|&e| !taken[e]).collect();
    pick_distinct(rng, &pool, k)
}

/// Epoch-wise iteration: shuffle the seed pairs, cut them into chunks of
/// `n_pairs`, add fresh negatives to each chunk.
pub(crate) fn epoch_batches(
    seed: &AlignmentSet,
    n_source: usize,
    n_target: usize,
    n_pairs: usize,
    n_neg: usize,
    rng: &mut impl rand::Rng,
) -> Vec<TrainingBatch> {
    let mut pairs = seed.pairs().to_vec();
    pairs.shuffle(rng);
    pairs
        .chunks(n_pairs.max(1))
        .map(|c| batch_with_negatives(c, n_source, n_target, n_neg, rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::AlignmentRole;
    use std::collections::HashSet;

    fn seed(n: usize) -> AlignmentSet {
        AlignmentSet::new((0..n).map(|i| (i, i)).collect(), AlignmentRole::Seed).unwrap()
    }

    #[test]
    fn batch_sizes_when_entities_suffice() {
        let mut rng = crate::seeded_rng(0);
        let b = sample_training_batch(&seed(3000), 10_000, 10_000, 2000, 4000, &mut rng).unwrap();
        assert_eq!((b.source.len(), b.target.len()), (6000, 6000));
        let phi: HashSet<_> = b.source[..2000].iter().collect();
        assert!(b.negatives_source().iter().all(|e| !phi.contains(e)));
        let uniq: HashSet<_> = b.target.iter().collect();
        assert_eq!(uniq.len(), 6000);
    }

    #[test]
    fn no_negatives_means_only_pairs() {
        let mut rng = crate::seeded_rng(0);
        let b = sample_training_batch(&seed(10), 20, 20, 4, 0, &mut rng).unwrap();
        assert_eq!(b.source.len(), 4);
        assert_eq!(b.num_pairs, 4);
    }

    #[test]
    fn too_many_pairs_is_an_error() {
        let mut rng = crate::seeded_rng(0);
        assert!(sample_training_batch(&seed(10), 20, 20, 11, 0, &mut rng).is_err());
    }

    #[test]
    fn negatives_capped_by_availability() {
        let mut rng = crate::seeded_rng(0);
        let b = sample_training_batch(&seed(10), 12, 15, 10, 100, &mut rng).unwrap();
        assert_eq!(b.negatives_source().len(), 2);
        assert_eq!(b.negatives_target().len(), 5);
    }
}
