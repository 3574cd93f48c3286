use std::collections::HashSet;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentRole {
    /// Training pairs.
    Seed,
    /// Held-out pairs used for evaluation.
    Test,
    /// Everything a links file contained, before splitting.
    Full,
}

/// 1-to-1 pairs `(source entity, target entity)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSet {
    pairs: Vec<(usize, usize)>,
    role: AlignmentRole,
}

impl AlignmentSet {
    pub fn new(pairs: Vec<(usize, usize)>, role: AlignmentRole) -> Result<Self> {
        let mut src = HashSet::with_capacity(pairs.len());
        let mut tgt = HashSet::with_capacity(pairs.len());
        for &(s, t) in &pairs {
            if !src.insert(s) {
                return Err(Error::NotOneToOne {
                    side: "source",
                    entity: s,
                });
            }
            if !tgt.insert(t) {
                return Err(Error::NotOneToOne {
                    side: "target",
                    entity: t,
                });
            }
        }
        Ok(AlignmentSet { pairs, role })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn role(&self) -> AlignmentRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sources(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().map(|p| p.1)
    }

    /// The same pairs with source and target swapped.
    pub fn reversed(&self) -> AlignmentSet {
        AlignmentSet {
            pairs: self.pairs.iter().map(|&(s, t)| (t, s)).collect(),
            role: self.role,
        }
    }

    /// Union of two disjoint alignment sets (e.g. seed and test).
    pub fn union(&self, other: &AlignmentSet) -> Result<AlignmentSet> {
        let mut pairs = self.pairs.clone();
        pairs.extend_from_slice(&other.pairs);
        AlignmentSet::new(pairs, AlignmentRole::Full)
    }
}

/// Split into `(seed, test)` with `|seed| = round(ratio * |pairs|)`.
///
/// The partition depends only on `rng_seed`; both halves keep the input order.
pub fn split_seed(
    alignment: &AlignmentSet,
    ratio: f64,
    rng_seed: u64,
) -> Result<(AlignmentSet, AlignmentSet)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid(format!(
            "train ratio must lie in (0, 1), got {ratio}"
        )));
    }
    if alignment.is_empty() {
        return Err(Error::invalid("cannot split an empty alignment"));
    }
    let n = alignment.len();
    let n_seed = (ratio * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut crate::seeded_rng(rng_seed));
    let mut is_seed = vec![false; n];
    for &i in &order[..n_seed] {
        is_seed[i] = true;
    }
    let (mut seed, mut test) = (Vec::with_capacity(n_seed), Vec::with_capacity(n - n_seed));
    for (i, &p) in alignment.pairs.iter().enumerate() {
        if is_seed[i] {
            seed.push(p);
        } else {
            test.push(p);
        }
    }
    Ok((
        AlignmentSet {
            pairs: seed,
            role: AlignmentRole::Seed,
        },
        AlignmentSet {
            pairs: test,
            role: AlignmentRole::Test,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ten() -> AlignmentSet {
        AlignmentSet::new((0..10).map(|i| (i, i)).collect(), AlignmentRole::Full).unwrap()
    }

    #[test]
    fn split_sizes_round() {
        let (seed, test) = split_seed(&ten(), 0.3, 7).unwrap();
        assert_eq!((seed.len(), test.len()), (3, 7));
        let s: HashSet<_> = seed.pairs().iter().collect();
        assert!(test.pairs().iter().all(|p| !s.contains(p)));
    }

    #[test]
    fn split_is_reproducible() {
        assert_eq!(
            split_seed(&ten(), 0.3, 42).unwrap(),
            split_seed(&ten(), 0.3, 42).unwrap()
        );
    }

    #[test]
    fn split_rejects_closed_bounds() {
        assert!(split_seed(&ten(), 1.0, 0).is_err());
        assert!(split_seed(&ten(), 0.0, 0).is_err());
    }

    #[test]
    fn duplicate_target_rejected() {
        let err = AlignmentSet::new(vec![(0, 1), (2, 1)], AlignmentRole::Full).unwrap_err();
        assert!(err.to_string().contains("violates 1-to-1"));
    }
}
