use std::collections::BTreeMap;

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kg::AlignmentSet;
use crate::sparse::SparseSimMatrix;

/// 1-based rank of `t` in row `s`: entries strictly greater, plus equal
/// entries at a lower column id, come first. `None` if `(s, t)` is absent.
pub fn rank_of(m: &SparseSimMatrix, s: usize, t: usize) -> Option<usize> {
    let v = m.get(s, t)?;
    let (cols, vals) = m.row(s);
    let ahead = cols
        .iter()
        .zip(vals)
        .filter(|&(&c, &x)| x > v || (x == v && (c as usize) < t))
        .count();
    Some(ahead + 1)
}

fn ranks(m: &SparseSimMatrix, test: &AlignmentSet) -> Vec<Option<usize>> {
    test.pairs()
        .par_iter()
        .map(|&(s, t)| rank_of(m, s, t))
        .collect()
}

/// Fraction of test pairs whose target ranks within the top `n`.
pub fn hits_at_n(m: &SparseSimMatrix, test: &AlignmentSet, n: usize) -> f64 {
    assert!(n >= 1);
    if test.is_empty() {
        return 0.0;
    }
    let hit = ranks(m, test)
        .into_iter()
        .filter(|r| r.is_some_and(|r| r <= n))
        .count();
    hit as f64 / test.len() as f64
}

/// Mean reciprocal rank; absent targets contribute zero.
pub fn mrr(m: &SparseSimMatrix, test: &AlignmentSet) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let s: f64 = ranks(m, test)
        .into_iter()
        .map(|r| r.map_or(0.0, |r| 1.0 / r as f64))
        .sum();
    s / test.len() as f64
}

/// Hits@1 of taking each row's argmax (lowest column on ties) as the match.
pub fn greedy_top1(m: &SparseSimMatrix, test: &AlignmentSet) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let hit = test
        .pairs()
        .iter()
        .filter(|&&(s, t)| {
            let (cols, vals) = m.row(s);
            let mut best: Option<(u32, f64)> = None;
            for (&c, &v) in cols.iter().zip(vals) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((c, v));
                }
            }
            best.is_some_and(|(c, _)| c as usize == t)
        })
        .count();
    hit as f64 / test.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub hits: BTreeMap<usize, f64>,
    pub mrr: f64,
}

pub fn rank_metrics(m: &SparseSimMatrix, test: &AlignmentSet, hits: &[usize]) -> RankMetrics {
    RankMetrics {
        hits: hits.iter().map(|&n| (n, hits_at_n(m, test, n))).collect(),
        mrr: mrr(m, test),
    }
}

/// Ranking metrics of a dense dot-product similarity between `source` and
/// `target` rows, without materializing the matrix. Same tie rule as the
/// sparse ranking.
pub fn dense_rank_metrics(
    source: ArrayView2<'_, f32>,
    target: ArrayView2<'_, f32>,
    test: &AlignmentSet,
    hits: &[usize],
) -> RankMetrics {
    const BLOCK: usize = 256;
    let ranks: Vec<usize> = test
        .pairs()
        .par_chunks(BLOCK)
        .flat_map_iter(|chunk| {
            let idx: Vec<usize> = chunk.iter().map(|p| p.0).collect();
            let sims = source.select(Axis(0), &idx).dot(&target.t());
            chunk
                .iter()
                .enumerate()
                .map(|(k, &(_, t))| {
                    let row = sims.row(k);
                    let v = row[t];
                    1 + row
                        .iter()
                        .enumerate()
                        .filter(|&(c, &x)| x > v || (x == v && c < t))
                        .count()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let n = test.len().max(1) as f64;
    RankMetrics {
        hits: hits
            .iter()
            .map(|&h| (h, ranks.iter().filter(|&&r| r <= h).count() as f64 / n))
            .collect(),
        mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
    }
}

/// Accuracy, cost and sampler diagnostics of one pipeline run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub hits: BTreeMap<usize, f64>,
    pub mrr: f64,
    /// Wall time per stage, in pipeline order.
    pub stage_seconds: Vec<(String, f64)>,
    /// Allocator high-water mark; zero when not tracked.
    pub peak_memory_bytes: u64,
    pub overlaps: Vec<(String, f64)>,
    /// Extra named metrics (baselines, ablations).
    pub extra: BTreeMap<String, f64>,
}

impl EvalReport {
    /// `key=value` lines; floats in shortest round-trip form.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (n, v) in &self.hits {
            out += &format!("hits@{n}={v}\n");
        }
        out += &format!("mrr={}\n", self.mrr);
        for (name, v) in &self.overlaps {
            out += &format!("overlap.{name}={v}\n");
        }
        for (name, v) in &self.extra {
            out += &format!("{name}={v}\n");
        }
        for (stage, s) in &self.stage_seconds {
            out += &format!("seconds.{stage}={s:.3}\n");
        }
        out += &format!("peak_memory_bytes={}\n", self.peak_memory_bytes);
        out
    }

    /// The accuracy part only; used to compare runs.
    pub fn metrics(
        &self,
    ) -> (
        BTreeMap<usize, f64>,
        f64,
        Vec<(String, f64)>,
        BTreeMap<String, f64>,
    ) {
        (
            self.hits.clone(),
            self.mrr,
            self.overlaps.clone(),
            self.extra.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::AlignmentRole;
    use ndarray::Array2;
    use rand::Rng;

    fn identity_pairs(n: usize) -> AlignmentSet {
        AlignmentSet::new((0..n).map(|i| (i, i)).collect(), AlignmentRole::Test).unwrap()
    }

    #[test]
    fn identity_matrix_is_perfect() {
        let m = SparseSimMatrix::from_dense(Array2::<f64>::eye(4).view());
        assert_eq!(hits_at_n(&m, &identity_pairs(4), 1), 1.0);
        assert_eq!(mrr(&m, &identity_pairs(4)), 1.0);
        assert_eq!(greedy_top1(&m, &identity_pairs(4)), 1.0);
    }

    #[test]
    fn absent_target_is_a_miss() {
        let m = SparseSimMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(hits_at_n(&m, &identity_pairs(2), 10), 0.5);
        assert_eq!(rank_of(&m, 0, 0), None);
    }

    #[test]
    fn rank_two_gives_half() {
        let m = SparseSimMatrix::from_triplets(1, 2, vec![(0, 0, 0.5), (0, 1, 0.9)]).unwrap();
        let test = AlignmentSet::new(vec![(0, 0)], AlignmentRole::Test).unwrap();
        assert_eq!(mrr(&m, &test), 0.5);
    }

    #[test]
    fn ties_break_toward_lower_column() {
        let m = SparseSimMatrix::from_triplets(1, 3, vec![(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)])
            .unwrap();
        assert_eq!(rank_of(&m, 0, 0), Some(1));
        assert_eq!(rank_of(&m, 0, 2), Some(3));
    }

    #[test]
    fn hub_column_defeats_greedy() {
        let n = 6;
        let mut d = Array2::from_elem((n, n), 0.1);
        d.column_mut(0).fill(0.9);
        let m = SparseSimMatrix::from_dense(d.view());
        // shuffled alignment: row i's truth is column (i + 1) % n
        let test = AlignmentSet::new(
            (0..n).map(|i| (i, (i + 1) % n)).collect(),
            AlignmentRole::Test,
        )
        .unwrap();
        assert!(greedy_top1(&m, &test) <= 1.0 / n as f64);
    }

    #[test]
    fn random_instances_match_exhaustive_sort() {
        let mut rng = crate::seeded_rng(9);
        for _ in 0..20 {
            let d = Array2::from_shape_simple_fn((5, 5), || {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    (rng.random_range(0..6) as f64) / 5.0 - 0.4
                }
            });
            let m = SparseSimMatrix::from_dense(d.view());
            let test = AlignmentSet::new(
                (0..5).map(|i| (i, (i * 3) % 5)).collect(),
                AlignmentRole::Test,
            )
            .unwrap();
            let (mut h1, mut h3, mut rr) = (0.0, 0.0, 0.0);
            for &(s, t) in test.pairs() {
                if d[[s, t]] == 0.0 {
                    continue;
                }
                // sort present candidates by (value desc, column asc)
                let mut cand: Vec<(f64, usize)> = (0..5)
                    .filter(|&c| d[[s, c]] != 0.0)
                    .map(|c| (d[[s, c]], c))
                    .collect();
                cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                let r = cand.iter().position(|&(_, c)| c == t).unwrap() + 1;
                h1 += (r <= 1) as u8 as f64;
                h3 += (r <= 3) as u8 as f64;
                rr += 1.0 / r as f64;
            }
            assert_eq!(hits_at_n(&m, &test, 1), h1 / 5.0);
            assert_eq!(hits_at_n(&m, &test, 3), h3 / 5.0);
            assert!((mrr(&m, &test) - rr / 5.0).abs() < 1e-12);
            assert_eq!(greedy_top1(&m, &test), hits_at_n(&m, &test, 1));
            assert!(mrr(&m, &test) >= hits_at_n(&m, &test, 1));
        }
    }

    #[test]
    fn dense_ranking_agrees_with_sparse() {
        let mut rng = crate::seeded_rng(2);
        let s = Array2::from_shape_simple_fn((7, 3), || rng.random_range(-1.0f32..1.0));
        let t = Array2::from_shape_simple_fn((7, 3), || rng.random_range(-1.0f32..1.0));
        let sims = s.dot(&t.t()).mapv(|v| v as f64);
        let m = SparseSimMatrix::from_dense(sims.view());
        let test = identity_pairs(7);
        let a = dense_rank_metrics(s.view(), t.view(), &test, &[1, 3]);
        let b = rank_metrics(&m, &test, &[1, 3]);
        assert_eq!(a.hits, b.hits);
        assert!((a.mrr - b.mrr).abs() < 1e-12);
    }
}
