//! Twin knowledge graphs derived from one preferential-attachment base graph.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::kg::{AlignmentRole, AlignmentSet, KnowledgeGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_entities: usize,
    pub n_relations: usize,
    /// Mean total degree of the base graph.
    pub avg_degree: f64,
    /// Probability that a side drops a base triple.
    pub edge_dropout: f64,
    /// Probability that a side replaces a triple's relation by a random one.
    pub relation_remap_prob: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_entities: 5000,
            n_relations: 40,
            avg_degree: 6.0,
            edge_dropout: 0.15,
            relation_remap_prob: 0.05,
            rng_seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_entities < 10 {
            return Err(Error::invalid("synthetic graphs need at least 10 entities"));
        }
        if self.n_relations == 0 {
            return Err(Error::invalid(
                "synthetic graphs need at least one relation",
            ));
        }
        if !(self.avg_degree >= 1.0) {
            return Err(Error::invalid("average degree must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.edge_dropout) {
            return Err(Error::invalid("edge dropout must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.relation_remap_prob) {
            return Err(Error::invalid(
                "relation remap probability must lie in [0, 1]",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub source: KnowledgeGraph,
    pub target: KnowledgeGraph,
    /// Every base entity, as `(source id, target id)`.
    pub alignment: AlignmentSet,
    /// Triples in the base graph before per-side noise.
    pub base_triples: usize,
}

/// Base triples by preferential attachment: each new entity links to
/// `round(avg_degree / 2)` distinct earlier entities picked proportionally to
/// degree; relations follow a Zipf law and edge directions are random.
fn base_graph<R: Rng>(spec: &SyntheticSpec, rng: &mut R) -> Vec<(usize, usize, usize)> {
    let n = spec.n_entities;
    let m = ((spec.avg_degree / 2.0).round() as usize).clamp(1, n - 1);
    let zipf = Zipf::new(spec.n_relations as f64, 1.1).expect("n_relations >= 1");
    let mut endpoints: Vec<usize> = Vec::with_capacity(2 * n * m);
    let mut edges = Vec::with_capacity(n * m);
    let mut push = |u: usize, v: usize, rng: &mut R, endpoints: &mut Vec<usize>| {
        let r = zipf.sample(rng) as usize - 1;
        let (h, t) = if rng.random::<bool>() { (u, v) } else { (v, u) };
        edges.push((h, r, t));
        endpoints.push(u);
        endpoints.push(v);
    };
    // small clique to start from
    for u in 0..=m {
        for v in 0..u {
            push(u, v, rng, &mut endpoints);
        }
    }
    let mut chosen = HashSet::with_capacity(m);
    for u in m + 1..n {
        chosen.clear();
        while chosen.len() < m {
            chosen.insert(endpoints[rng.random_range(0..endpoints.len())]);
        }
        let mut picks: Vec<usize> = chosen.iter().copied().collect();
        picks.sort_unstable();
        for v in picks {
            push(u, v, rng, &mut endpoints);
        }
    }
    edges
}

fn side<R: Rng>(
    spec: &SyntheticSpec,
    prefix: &str,
    base: &[(usize, usize, usize)],
    rng: &mut R,
) -> KnowledgeGraph {
    let mut order: Vec<usize> = (0..spec.n_entities).collect();
    order.shuffle(rng);
    let mut b = KnowledgeGraph::builder();
    for e in order {
        b.entity(&format!("{prefix}{e}"));
    }
    for r in 0..spec.n_relations {
        b.relation(&format!("r{r}"));
    }
    for &(h, r, t) in base {
        if rng.random::<f64>() < spec.edge_dropout {
            continue;
        }
        let r = if rng.random::<f64>() < spec.relation_remap_prob {
            rng.random_range(0..spec.n_relations)
        } else {
            r
        };
        b.triple(
            &format!("{prefix}{h}"),
            &format!("r{r}"),
            &format!("{prefix}{t}"),
        );
    }
    b.build()
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticPair> {
    spec.validate()?;
    let mut rng = crate::seeded_rng(spec.rng_seed);
    let base = base_graph(spec, &mut rng);
    let source = side(spec, "s/", &base, &mut rng);
    let target = side(spec, "t/", &base, &mut rng);
    if source.triples().is_empty() || target.triples().is_empty() {
        return Err(Error::invalid("synthetic side ended up without triples"));
    }
    let pairs = (0..spec.n_entities)
        .map(|e| {
            let s = source.entity_id(&format!("s/{e}")).expect("registered");
            let t = target.entity_id(&format!("t/{e}")).expect("registered");
            (s, t)
        })
        .collect();
    Ok(SyntheticPair {
        source,
        target,
        alignment: AlignmentSet::new(pairs, AlignmentRole::Full)?,
        base_triples: base.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn spec(n: usize, p: f64, remap: f64) -> SyntheticSpec {
        SyntheticSpec {
            n_entities: n,
            edge_dropout: p,
            relation_remap_prob: remap,
            rng_seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn no_noise_gives_isomorphic_twins() {
        let pair = generate_synthetic(&spec(300, 0.0, 0.0)).unwrap();
        let to_target: Vec<usize> = {
            let mut m = vec![0; 300];
            for &(s, t) in pair.alignment.pairs() {
                m[s] = t;
            }
            m
        };
        let rel = |kg: &KnowledgeGraph, r: usize| kg.relation_label(r).to_owned();
        let mapped: HashSet<(usize, String, usize)> = pair
            .source
            .triples()
            .iter()
            .map(|t| {
                (
                    to_target[t.head],
                    rel(&pair.source, t.relation),
                    to_target[t.tail],
                )
            })
            .collect();
        let target: HashSet<(usize, String, usize)> = pair
            .target
            .triples()
            .iter()
            .map(|t| (t.head, rel(&pair.target, t.relation), t.tail))
            .collect();
        assert_eq!(mapped, target);
        // ids are shuffled independently
        assert!(pair.alignment.pairs().iter().any(|&(s, t)| s != t));
    }

    #[test]
    fn dropout_keeps_binomial_share() {
        let pair = generate_synthetic(&spec(3000, 0.2, 0.0)).unwrap();
        let n = pair.base_triples as f64;
        let sd = (n * 0.2 * 0.8).sqrt();
        for kg in [&pair.source, &pair.target] {
            let kept = kg.triples().len() as f64;
            assert!((kept - 0.8 * n).abs() < 3.0 * sd, "{kept} of {n}");
        }
    }

    #[test]
    fn alignment_covers_every_entity() {
        let pair = generate_synthetic(&spec(500, 0.15, 0.1)).unwrap();
        assert_eq!(pair.alignment.len(), 500);
        assert_eq!(pair.source.num_entities(), 500);
        assert_eq!(pair.target.num_entities(), 500);
    }

    #[test]
    fn heavy_tailed_degrees() {
        let pair = generate_synthetic(&spec(3000, 0.0, 0.0)).unwrap();
        let mut deg = vec![0usize; 3000];
        for t in pair.source.triples() {
            deg[t.head] += 1;
            deg[t.tail] += 1;
        }
        let mean = deg.iter().sum::<usize>() as f64 / 3000.0;
        let max = *deg.iter().max().unwrap() as f64;
        assert!(max > 10.0 * mean, "max {max} mean {mean}");
    }

    #[test]
    fn deterministic_and_validated() {
        let a = generate_synthetic(&spec(200, 0.1, 0.1)).unwrap();
        let b = generate_synthetic(&spec(200, 0.1, 0.1)).unwrap();
        assert_eq!(a.source.triples(), b.source.triples());
        assert_eq!(a.alignment, b.alignment);
        assert!(generate_synthetic(&spec(5, 0.1, 0.0)).is_err());
        assert!(generate_synthetic(&spec(100, 1.0, 0.0)).is_err());
    }
}
