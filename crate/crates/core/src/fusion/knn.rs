use ndarray::{s, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::SparseSimMatrix;

const QUERY_BLOCK: usize = 256;

/// Top-`k` base rows per query row by dot product, best first.
/// Ties go to the lower base index.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbors {
    k: usize,
    n_base: usize,
    idx: Vec<u32>,
    sim: Vec<f32>,
}

impl Neighbors {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_queries(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.idx.len() / self.k
        }
    }

    pub fn n_base(&self) -> usize {
        self.n_base
    }

    pub fn row(&self, q: usize) -> (&[u32], &[f32]) {
        let r = q * self.k..(q + 1) * self.k;
        (&self.idx[r.clone()], &self.sim[r])
    }
}

/// Exact k-NN: blocked matrix products with a per-row partial selection.
/// `k` is clamped to the number of base rows.
pub fn top_k_dot(queries: ArrayView2<'_, f32>, base: ArrayView2<'_, f32>, k: usize) -> Neighbors {
    let k = k.min(base.nrows());
    let nq = queries.nrows();
    let starts: Vec<usize> = (0..nq).step_by(QUERY_BLOCK).collect();
    let blocks: Vec<(Vec<u32>, Vec<f32>)> = starts
        .par_iter()
        .map(|&lo| {
            let hi = (lo + QUERY_BLOCK).min(nq);
            let sims = queries.slice(s![lo..hi, ..]).dot(&base.t());
            let sims = sims.as_standard_layout();
            let mut idx = Vec::with_capacity((hi - lo) * k);
            let mut val = Vec::with_capacity((hi - lo) * k);
            let mut order: Vec<u32> = Vec::with_capacity(base.nrows());
            for row in sims.outer_iter() {
                let row = row.as_slice().expect("standard layout");
                order.clear();
                order.extend(0..row.len() as u32);
                let cmp =
                    |a: &u32, b: &u32| row[*b as usize].total_cmp(&row[*a as usize]).then(a.cmp(b));
                if k > 0 && k < order.len() {
                    order.select_nth_unstable_by(k - 1, cmp);
                }
                order.truncate(k);
                order.sort_unstable_by(cmp);
                idx.extend_from_slice(&order);
                val.extend(order.iter().map(|&j| row[j as usize]));
            }
            (idx, val)
        })
        .collect();
    let (idx, sim): (Vec<Vec<u32>>, Vec<Vec<f32>>) = blocks.into_iter().unzip();
    Neighbors {
        k,
        n_base: base.nrows(),
        idx: idx.concat(),
        sim: sim.concat(),
    }
}

/// `kNN(f_s -> f_t) + kNN(f_t -> f_s)^T`; pairs found in both directions
/// carry the sum of both dot products.
pub fn topk_global(
    f_s: ArrayView2<'_, f32>,
    f_t: ArrayView2<'_, f32>,
    k_r: usize,
) -> Result<SparseSimMatrix> {
    if f_s.ncols() != f_t.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "embedding widths {} and {}",
            f_s.ncols(),
            f_t.ncols()
        )));
    }
    let st = top_k_dot(f_s, f_t, k_r);
    let ts = top_k_dot(f_t, f_s, k_r);
    topk_from_neighbors(&st, &ts, k_r)
}

/// [`topk_global`] from precomputed neighbor lists holding at least `k_r`
/// entries per row (or every base row).
pub fn topk_from_neighbors(st: &Neighbors, ts: &Neighbors, k_r: usize) -> Result<SparseSimMatrix> {
    let (n_s, n_t) = (st.n_queries(), ts.n_queries());
    if st.n_base() != n_t || ts.n_base() != n_s {
        return Err(Error::DimensionMismatch(
            "neighbor lists are not transposes of each other".into(),
        ));
    }
    let (k1, k2) = (k_r.min(st.k()), k_r.min(ts.k()));
    let mut t = Vec::with_capacity(n_s * k1 + n_t * k2);
    for s in 0..n_s {
        let (idx, sim) = st.row(s);
        t.extend((0..k1).map(|j| (s as u32, idx[j], sim[j] as f64)));
    }
    for tt in 0..n_t {
        let (idx, sim) = ts.row(tt);
        t.extend((0..k2).map(|j| (idx[j], tt as u32, sim[j] as f64)));
    }
    SparseSimMatrix::from_triplets(n_s, n_t, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn random(n: usize, d: usize, rng: &mut crate::Rng) -> Array2<f32> {
        Array2::from_shape_simple_fn((n, d), || rng.random_range(-1.0f32..1.0))
    }

    #[test]
    fn matches_brute_force_sort() {
        let mut rng = crate::seeded_rng(5);
        let q = random(300, 6, &mut rng);
        let b = random(40, 6, &mut rng);
        let nn = top_k_dot(q.view(), b.view(), 7);
        let full = q.dot(&b.t());
        for i in 0..q.nrows() {
            let mut order: Vec<usize> = (0..b.nrows()).collect();
            order.sort_by(|&x, &y| full[[i, y]].total_cmp(&full[[i, x]]).then(x.cmp(&y)));
            let got: Vec<usize> = nn.row(i).0.iter().map(|&j| j as usize).collect();
            assert_eq!(got, order[..7]);
        }
    }

    #[test]
    fn ties_prefer_lower_index() {
        let q = array![[1.0f32]];
        let b = array![[1.0f32], [2.0], [2.0], [1.0]];
        let nn = top_k_dot(q.view(), b.view(), 3);
        assert_eq!(nn.row(0).0, &[1, 2, 0]);
    }

    #[test]
    fn k_clamped_to_base() {
        let q = array![[1.0f32], [2.0]];
        let b = array![[1.0f32], [3.0]];
        let nn = top_k_dot(q.view(), b.view(), 10);
        assert_eq!(nn.k(), 2);
        let m = topk_global(q.view(), b.view(), 10).unwrap();
        assert_eq!(m.nnz(), 4);
    }

    #[test]
    fn row_counts_and_doubling() {
        let mut rng = crate::seeded_rng(9);
        let fs = random(60, 5, &mut rng);
        let ft = random(50, 5, &mut rng);
        let k = 4;
        let m = topk_global(fs.view(), ft.view(), k).unwrap();
        let st = top_k_dot(fs.view(), ft.view(), k);
        let ts = top_k_dot(ft.view(), fs.view(), k);
        for s in 0..60 {
            let n = m.row(s).0.len();
            assert!(n >= k, "row {s} has {n}");
            for &t in st.row(s).0 {
                let t = t as usize;
                let dot: f32 = fs.row(s).dot(&ft.row(t));
                let mutual = ts.row(t).0.contains(&(s as u32));
                let v = m.get(s, t).unwrap();
                let expect = if mutual { 2.0 * dot as f64 } else { dot as f64 };
                assert!((v - expect).abs() < 1e-5, "({s},{t}) {v} vs {expect}");
            }
        }
        assert!(m.nnz() <= k * (60 + 50));
        for t in 0..50 {
            for &s in ts.row(t).0 {
                assert!(m.get(s as usize, t).is_some());
            }
        }
    }
}
