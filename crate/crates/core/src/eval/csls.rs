use ndarray::{Array2, ArrayView1, ArrayView2};

/// Mean of the `k` largest entries.
pub(crate) fn top_k_mean(v: ArrayView1<'_, f64>, k: usize) -> f64 {
    let mut xs: Vec<f64> = v.to_vec();
    let k = k.min(xs.len());
    xs.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    xs[..k].iter().sum::<f64>() / k as f64
}

/// Textbook CSLS over a dense similarity matrix:
/// `2 sim(s, t) - r_S(t) - r_T(s)` where `r_T(s)` is the mean of row `s`'s
/// `k` largest values and `r_S(t)` the same for column `t`.
pub fn dense_csls(sim: ArrayView2<'_, f64>, k: usize) -> Array2<f64> {
    assert!(k >= 1 && k <= sim.nrows().min(sim.ncols()));
    let r_t: Vec<f64> = sim.rows().into_iter().map(|r| top_k_mean(r, k)).collect();
    let r_s: Vec<f64> = sim
        .columns()
        .into_iter()
        .map(|c| top_k_mean(c, k))
        .collect();
    Array2::from_shape_fn(sim.raw_dim(), |(i, j)| 2.0 * sim[[i, j]] - r_s[j] - r_t[i])
}
