//! Fan-out limited neighborhood sampling.

use rand::seq::index;

use crate::kg::WeightedAdjacency;
use crate::real::Real;
use crate::tensor::SparseRows;

/// One message-passing layer restricted to a sampled subgraph.
///
/// `src_nodes` lists global node ids feeding the layer; the first
/// `num_dst` of them are the nodes the layer produces output for.
/// `agg` maps `src` rows to `dst` rows with weights normalized to a mean.
#[derive(Debug, Clone)]
pub struct BlockLayer<T> {
    pub src_nodes: Vec<usize>,
    pub num_dst: usize,
    pub agg: SparseRows<T>,
}

impl<T: Real> BlockLayer<T> {
    pub fn dst_nodes(&self) -> &[usize] {
        &self.src_nodes[..self.num_dst]
    }

    /// Global ids of the in-neighbors kept for local destination `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let r = self.agg.row_ptr[i]..self.agg.row_ptr[i + 1];
        self.agg.cols[r].iter().map(|&c| self.src_nodes[c])
    }
}

/// Layers ordered from input to output; layer `k`'s `src_nodes` equal
/// layer `k - 1`'s destination nodes, and the last layer's destinations are
/// the requested targets in order.
#[derive(Debug, Clone)]
pub struct SampledBlock<T> {
    pub layers: Vec<BlockLayer<T>>,
}

impl<T: Real> SampledBlock<T> {
    pub fn input_nodes(&self) -> &[usize] {
        &self.layers[0].src_nodes
    }

    pub fn targets(&self) -> &[usize] {
        self.layers.last().unwrap().dst_nodes()
    }
}

/// Sample a block for `targets` (distinct global ids).
///
/// Every destination keeps its self-loop plus at most `fanout` other
/// in-neighbors drawn uniformly without replacement from its adjacency row.
/// Aggregation weights are the original `a_vu` rescaled to sum to one.
pub fn neighborhood_sample<T: Real>(
    adj: &WeightedAdjacency,
    targets: &[usize],
    fanout: usize,
    layers: usize,
    rng: &mut impl rand::Rng,
) -> SampledBlock<T> {
    assert!(!targets.is_empty(), "neighborhood_sample needs targets");
    assert!(fanout >= 1 && layers >= 1);
    let n = adj.num_nodes();
    let mut local = vec![usize::MAX; n];
    let mut frontier: Vec<usize> = targets.to_vec();
    let mut out = Vec::with_capacity(layers);
    for _ in 0..layers {
        let num_dst = frontier.len();
        let mut src = frontier;
        for (i, &v) in src.iter().enumerate() {
            assert_eq!(local[v], usize::MAX, "duplicate target {v}");
            local[v] = i;
        }
        let mut row_ptr = Vec::with_capacity(num_dst + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut picked: Vec<(usize, f64)> = Vec::with_capacity(fanout + 1);
        for i in 0..num_dst {
            let v = src[i];
            let (ncols, nw) = adj.row(v);
            picked.clear();
            let mut self_w = 0.0;
            let others: Vec<usize> = (0..ncols.len()).filter(|&k| ncols[k] != v).collect();
            if let Ok(k) = ncols.binary_search(&v) {
                self_w = nw[k];
            }
            if self_w > 0.0 {
                picked.push((v, self_w));
            }
            if others.len() <= fanout {
                picked.extend(others.iter().map(|&k| (ncols[k], nw[k])));
            } else {
                let mut chosen = index::sample(rng, others.len(), fanout).into_vec();
                chosen.sort_unstable();
                picked.extend(chosen.iter().map(|&c| (ncols[others[c]], nw[others[c]])));
            }
            let total: f64 = picked.iter().map(|p| p.1).sum();
            for &(u, w) in &picked {
                if local[u] == usize::MAX {
                    local[u] = src.len();
                    src.push(u);
                }
                cols.push(local[u]);
                vals.push(T::of(if total > 0.0 { w / total } else { 0.0 }));
            }
            row_ptr.push(cols.len());
        }
        for &u in &src {
            local[u] = usize::MAX;
        }
        let n_cols = src.len();
        frontier = src.clone();
        out.push(BlockLayer {
            src_nodes: src,
            num_dst,
            agg: SparseRows {
                row_ptr,
                cols,
                vals,
                n_cols,
            },
        });
    }
    out.reverse();
    SampledBlock { layers: out }
}

/// The unsampled block over every node, used for final inference.
pub fn full_block<T: Real>(adj: &WeightedAdjacency, layers: usize) -> SampledBlock<T> {
    let n = adj.num_nodes();
    let norm = adj.row_normalized();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut cols = Vec::with_capacity(norm.nnz());
    let mut vals = Vec::with_capacity(norm.nnz());
    for i in 0..n {
        let (c, w) = norm.row(i);
        cols.extend_from_slice(c);
        vals.extend(w.iter().map(|&x| T::of(x)));
        row_ptr.push(cols.len());
    }
    let layer = BlockLayer {
        src_nodes: (0..n).collect(),
        num_dst: n,
        agg: SparseRows {
            row_ptr,
            cols,
            vals,
            n_cols: n,
        },
    };
    SampledBlock {
        layers: vec![layer; layers],
    }
}

/// Uniformly pick `k` distinct items from `pool` (all of it when `k >= len`).
pub(crate) fn pick_distinct<R: rand::Rng>(rng: &mut R, pool: &[usize], k: usize) -> Vec<usize> {
    if k >= pool.len() {
        return pool.to_vec();
    }
    index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::KnowledgeGraph;

    fn star(leaves: usize) -> WeightedAdjacency {
        let mut b = KnowledgeGraph::builder();
        for i in 0..leaves {
            b.triple("hub", &format!("r{}", i % 3), &format!("leaf{i}"));
        }
        b.entity("alone");
        WeightedAdjacency::build(&b.build())
    }

    #[test]
    fn fanout_caps_neighbors() {
        let adj = star(20);
        let mut rng = crate::seeded_rng(1);
        let block: SampledBlock<f64> = neighborhood_sample(&adj, &[0], 8, 1, &mut rng);
        let l = &block.layers[0];
        let others = l.neighbors(0).filter(|&u| u != 0).count();
        assert_eq!(others, 8);
        let w: f64 = l.agg.vals.iter().sum();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_neighborhood_kept_whole() {
        let adj = star(3);
        let mut rng = crate::seeded_rng(1);
        let block: SampledBlock<f64> = neighborhood_sample(&adj, &[0], 8, 2, &mut rng);
        let last = block.layers.last().unwrap();
        assert_eq!(last.neighbors(0).filter(|&u| u != 0).count(), 3);
        assert_eq!(block.targets(), &[0]);
        assert_eq!(block.layers[1].src_nodes, block.layers[0].dst_nodes());
    }

    #[test]
    fn isolated_node_keeps_only_self_loop() {
        let adj = star(3);
        let alone = adj.num_nodes() - 1;
        let mut rng = crate::seeded_rng(1);
        let block: SampledBlock<f64> = neighborhood_sample(&adj, &[alone], 8, 2, &mut rng);
        for l in &block.layers {
            assert_eq!(l.neighbors(0).collect::<Vec<_>>(), vec![alone]);
        }
    }
}
