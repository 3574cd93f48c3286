use rand::Rng;

use super::config::PartitionerConfig;
use super::metis::metis_partition;
use super::BatchAssignment;
use crate::error::Result;
use crate::eval::hungarian;
use crate::kg::{AlignmentSet, WeightedAdjacency};

/// Uniform random batches; each seed pair draws one label for both members.
pub fn vps<R: Rng>(
    seed: &AlignmentSet,
    n_source: usize,
    n_target: usize,
    k: usize,
    rng: &mut R,
) -> Result<BatchAssignment> {
    let k = k.max(1);
    let mut ls: Vec<usize> = (0..n_source).map(|_| rng.random_range(0..k)).collect();
    let mut lt: Vec<usize> = (0..n_target).map(|_| rng.random_range(0..k)).collect();
    for &(s, t) in seed.pairs() {
        let l = rng.random_range(0..k);
        ls[s] = l;
        lt[t] = l;
    }
    BatchAssignment::new(k, ls, lt)
}

/// Expected overlap of [`vps`] over a reference whose `seed_fraction` part is
/// seed pairs.
pub fn vps_expected_overlap(seed_fraction: f64, k: usize) -> f64 {
    seed_fraction + (1.0 - seed_fraction) / k as f64
}

/// Partition both graphs independently, the target one with heavy seed
/// vertices, then rename target parts to the source labels their seeds vote
/// for (maximum-weight matching) and pin every seed target to its source's
/// label.
pub fn metis_cps(
    adj_s: &WeightedAdjacency,
    adj_t: &WeightedAdjacency,
    seed: &AlignmentSet,
    cfg: &PartitionerConfig,
) -> Result<BatchAssignment> {
    cfg.validate()?;
    let k = cfg.k;
    let ls = metis_partition(adj_s, k, None)?;
    let mut w = vec![1.0; adj_t.num_nodes()];
    for t in seed.targets() {
        w[t] = cfg.seed_vertex_weight;
    }
    let lt = metis_partition(adj_t, k, Some(&w))?;

    let mut votes = ndarray::Array2::<f64>::zeros((k, k));
    for &(s, t) in seed.pairs() {
        votes[[lt[t], ls[s]]] += 1.0;
    }
    let rename = hungarian(votes.view())?.columns;
    let mut lt: Vec<usize> = lt.into_iter().map(|p| rename[p]).collect();
    for &(s, t) in seed.pairs() {
        lt[t] = ls[s];
    }
    BatchAssignment::new(k, ls, lt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{AlignmentRole, KnowledgeGraph};
    use crate::sampler::overlap;

    #[test]
    fn vps_seed_pairs_co_batched() {
        let seed = AlignmentSet::new(
            (0..30).map(|i| (i, (i * 7) % 30)).collect(),
            AlignmentRole::Seed,
        )
        .unwrap();
        let a = vps(&seed, 100, 90, 5, &mut crate::seeded_rng(1)).unwrap();
        assert_eq!(overlap(&a, &seed), 1.0);
        let one = vps(&seed, 100, 90, 1, &mut crate::seeded_rng(1)).unwrap();
        assert!(one.source_labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn vps_monte_carlo_mean() {
        // 30% seeds over 1000 pairs, K = 4: expectation 0.3 + 0.7 / 4
        let pairs: Vec<(usize, usize)> = (0..1000).map(|i| (i, i)).collect();
        let seed = AlignmentSet::new(pairs[..300].to_vec(), AlignmentRole::Seed).unwrap();
        let all = AlignmentSet::new(pairs, AlignmentRole::Full).unwrap();
        let mut rng = crate::seeded_rng(2);
        let runs = 200;
        let mean: f64 = (0..runs)
            .map(|_| overlap(&vps(&seed, 1000, 1000, 4, &mut rng).unwrap(), &all))
            .sum::<f64>()
            / runs as f64;
        let p = 0.25f64;
        let sd = (700.0 * p * (1.0 - p)).sqrt() / 1000.0 / (runs as f64).sqrt();
        let expect = vps_expected_overlap(0.3, 4);
        assert!((mean - expect).abs() < 3.0 * sd, "{mean} vs {expect}");
    }

    fn twin_cliques(prefix: &str, count: usize, size: usize) -> KnowledgeGraph {
        let mut b = KnowledgeGraph::builder();
        for c in 0..count {
            for i in 0..size {
                for j in i + 1..size {
                    b.triple(
                        &format!("{prefix}{c}_{i}"),
                        "r",
                        &format!("{prefix}{c}_{j}"),
                    );
                }
            }
        }
        b.build()
    }

    #[test]
    fn metis_cps_twin_cliques() {
        let gs = twin_cliques("s", 4, 8);
        let gt = twin_cliques("t", 4, 8);
        let all = AlignmentSet::new(
            (0..32)
                .map(|i| {
                    (
                        i,
                        gt.entity_id(&gs.entity_label(i).replacen('s', "t", 1))
                            .unwrap(),
                    )
                })
                .collect(),
            AlignmentRole::Full,
        )
        .unwrap();
        let seed = AlignmentSet::new(
            all.pairs().iter().step_by(3).copied().collect(),
            AlignmentRole::Seed,
        )
        .unwrap();
        let cfg = PartitionerConfig {
            k: 4,
            ..Default::default()
        };
        let a = metis_cps(
            &WeightedAdjacency::build(&gs),
            &WeightedAdjacency::build(&gt),
            &seed,
            &cfg,
        )
        .unwrap();
        assert_eq!(overlap(&a, &all), 1.0);
        let one = metis_cps(
            &WeightedAdjacency::build(&gs),
            &WeightedAdjacency::build(&gt),
            &seed,
            &PartitionerConfig {
                k: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(overlap(&one, &all), 1.0);
    }
}
