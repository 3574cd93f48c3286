use std::collections::HashSet;

use super::KnowledgeGraph;

/// Row-compressed influence matrix `A` over one graph's entities.
///
/// `a_ij` sums `ifun(r)` over triples `(e_i, r, e_j)` and `fun(r)` over
/// triples `(e_j, r, e_i)`, so the support (ignoring the diagonal) is the
/// undirected support of the triple set. Every entity carries an extra
/// unit self-loop. Columns within a row are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdjacency {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    fun: Vec<f64>,
    ifun: Vec<f64>,
}

pub const SELF_LOOP_WEIGHT: f64 = 1.0;

impl WeightedAdjacency {
    pub fn build(kg: &KnowledgeGraph) -> Self {
        let n_rel = kg.num_relations();
        let mut count = vec![0usize; n_rel];
        let mut heads: Vec<HashSet<usize>> = vec![HashSet::new(); n_rel];
        let mut tails: Vec<HashSet<usize>> = vec![HashSet::new(); n_rel];
        for t in kg.triples() {
            count[t.relation] += 1;
            heads[t.relation].insert(t.head);
            tails[t.relation].insert(t.tail);
        }
        let ratio = |distinct: usize, total: usize| {
            if total == 0 {
                1.0
            } else {
                distinct as f64 / total as f64
            }
        };
        let fun: Vec<f64> = (0..n_rel)
            .map(|r| ratio(heads[r].len(), count[r]))
            .collect();
        let ifun: Vec<f64> = (0..n_rel)
            .map(|r| ratio(tails[r].len(), count[r]))
            .collect();

        let n = kg.num_entities();
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * kg.triples().len() + n);
        for t in kg.triples() {
            entries.push((t.head, t.tail, ifun[t.relation]));
            entries.push((t.tail, t.head, fun[t.relation]));
        }
        entries.extend((0..n).map(|i| (i, i, SELF_LOOP_WEIGHT)));
        Self::from_entries(n, entries, fun, ifun)
    }

    fn from_entries(
        n: usize,
        mut entries: Vec<(usize, usize, f64)>,
        fun: Vec<f64>,
        ifun: Vec<f64>,
    ) -> Self {
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut weights: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, w) in entries {
            if last == Some((i, j)) {
                *weights.last_mut().unwrap() += w;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            cols.push(j);
            weights.push(w);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        WeightedAdjacency {
            row_ptr,
            cols,
            weights,
            fun,
            ifun,
        }
    }

    /// Block-diagonal union: `other`'s nodes are shifted by `self.num_nodes()`.
    pub fn disjoint_union(&self, other: &WeightedAdjacency) -> WeightedAdjacency {
        let offset = self.num_nodes();
        let mut row_ptr = self.row_ptr.clone();
        let base = *row_ptr.last().unwrap();
        row_ptr.extend(other.row_ptr[1..].iter().map(|p| p + base));
        let mut cols = self.cols.clone();
        cols.extend(other.cols.iter().map(|c| c + offset));
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        let mut fun = self.fun.clone();
        fun.extend_from_slice(&other.fun);
        let mut ifun = self.ifun.clone();
        ifun.extend_from_slice(&other.ifun);
        WeightedAdjacency {
            row_ptr,
            cols,
            weights,
            fun,
            ifun,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Columns and weights of row `i`, self-loop included.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.weights[r])
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (cols, w) = self.row(i);
        cols.binary_search(&j).map(|k| w[k]).unwrap_or(0.0)
    }

    /// Number of neighbors other than `i` itself.
    pub fn degree(&self, i: usize) -> usize {
        self.row(i).0.iter().filter(|&&j| j != i).count()
    }

    pub fn fun(&self) -> &[f64] {
        &self.fun
    }

    pub fn ifun(&self) -> &[f64] {
        &self.ifun
    }

    /// Row-normalized copy: each row's weights sum to one.
    pub fn row_normalized(&self) -> WeightedAdjacency {
        let mut out = self.clone();
        for i in 0..self.num_nodes() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let s: f64 = self.weights[r.clone()].iter().sum();
            if s > 0.0 {
                for w in &mut out.weights[r] {
                    *w /= s;
                }
            }
        }
        out
    }
}
