use ndarray::ArrayView2;

use super::knn::{top_k_dot, Neighbors};
use crate::error::{Error, Result};
use crate::sparse::SparseSimMatrix;

/// Mean of the top-`K_n` dot products of every entity against the other side:
/// `source[s] = r_T(s)`, `target[t] = r_S(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CslsRadii {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
}

impl CslsRadii {
    pub fn constant(n_source: usize, n_target: usize, c: f64) -> Self {
        CslsRadii {
            source: vec![c; n_source],
            target: vec![c; n_target],
        }
    }

    /// Radii from neighbor lists holding at least `k_n` entries per row.
    pub fn from_neighbors(st: &Neighbors, ts: &Neighbors, k_n: usize) -> Self {
        let mean = |nn: &Neighbors| -> Vec<f64> {
            let k = k_n.min(nn.k());
            (0..nn.n_queries())
                .map(|q| {
                    let sims = &nn.row(q).1[..k];
                    sims.iter().map(|&v| v as f64).sum::<f64>() / k.max(1) as f64
                })
                .collect()
        };
        CslsRadii {
            source: mean(st),
            target: mean(ts),
        }
    }
}

pub fn csls_radii(f_s: ArrayView2<'_, f32>, f_t: ArrayView2<'_, f32>, k_n: usize) -> CslsRadii {
    let st = top_k_dot(f_s, f_t, k_n);
    let ts = top_k_dot(f_t, f_s, k_n);
    CslsRadii::from_neighbors(&st, &ts, k_n)
}

/// Sparse CSLS: every stored `v` becomes `2v - r_S(t) - r_T(s)`, then all
/// stored values are min-max scaled to `[0, 1]`. The support never changes,
/// so the minimum stays stored as an explicit `0.0`. If every adjusted value
/// is equal, all of them become `1.0`.
pub fn sp_csls(m: &SparseSimMatrix, radii: &CslsRadii) -> Result<SparseSimMatrix> {
    let (n_s, n_t) = m.shape();
    if radii.source.len() != n_s || radii.target.len() != n_t {
        return Err(Error::DimensionMismatch(format!(
            "radii for {} x {}, matrix {n_s} x {n_t}",
            radii.source.len(),
            radii.target.len()
        )));
    }
    if m.nnz() == 0 {
        return Err(Error::invalid(
            "sparse CSLS needs at least one stored value",
        ));
    }
    let adjusted = m.map_values(|s, t, v| 2.0 * v - radii.target[t] - radii.source[s]);
    let (lo, hi) = adjusted
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::NonFinite("sparse CSLS"));
    }
    let span = hi - lo;
    Ok(adjusted.map_values(|_, _, v| if span > 0.0 { (v - lo) / span } else { 1.0 }))
}

/// `sp_csls(M_L + M_G)`.
pub fn fuse_final(
    m_l: &SparseSimMatrix,
    m_g: &SparseSimMatrix,
    radii: &CslsRadii,
) -> Result<SparseSimMatrix> {
    sp_csls(&m_l.add(m_g)?, radii)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::dense_csls;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn random_sparse(rng: &mut crate::Rng, n: usize, m: usize, density: f64) -> SparseSimMatrix {
        let mut t = Vec::new();
        for r in 0..n {
            for c in 0..m {
                if rng.random::<f64>() < density {
                    t.push((r as u32, c as u32, rng.random_range(0.01..1.0)));
                }
            }
        }
        SparseSimMatrix::from_triplets(n, m, t).unwrap()
    }

    #[test]
    fn constant_radii_preserve_row_ranking() {
        let mut rng = crate::seeded_rng(2);
        let m = random_sparse(&mut rng, 30, 25, 0.3);
        let out = sp_csls(&m, &CslsRadii::constant(30, 25, 0.37)).unwrap();
        for r in 0..30 {
            let (c1, v1) = m.row(r);
            let (c2, v2) = out.row(r);
            assert_eq!(c1, c2);
            for i in 0..v1.len() {
                for j in 0..v1.len() {
                    assert_eq!(v1[i] < v1[j], v2[i] < v2[j]);
                }
            }
        }
    }

    #[test]
    fn endpoints_attained_and_support_kept() {
        let mut rng = crate::seeded_rng(3);
        let m = random_sparse(&mut rng, 20, 20, 0.25);
        let radii = CslsRadii {
            source: (0..20).map(|_| rng.random_range(0.0..0.5)).collect(),
            target: (0..20).map(|_| rng.random_range(0.0..0.5)).collect(),
        };
        let out = sp_csls(&m, &radii).unwrap();
        assert_eq!(out.nnz(), m.nnz());
        assert!(m
            .iter()
            .zip(out.iter())
            .all(|(a, b)| (a.0, a.1) == (b.0, b.1)));
        let vals = out.values();
        assert!(vals.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(vals.contains(&0.0) && vals.contains(&1.0));
    }

    #[test]
    fn degenerate_all_equal_becomes_one() {
        let m = SparseSimMatrix::from_dense(array![[0.5, 0.0], [0.0, 0.5]].view());
        let out = sp_csls(&m, &CslsRadii::constant(2, 2, 0.1)).unwrap();
        assert_eq!(out.values(), &[1.0, 1.0]);
        assert!(sp_csls(
            &SparseSimMatrix::empty(2, 2),
            &CslsRadii::constant(2, 2, 0.0)
        )
        .is_err());
    }

    #[test]
    fn dense_input_orders_like_dense_csls() {
        let mut rng = crate::seeded_rng(11);
        let (n, d, k) = (12, 4, 3);
        let fs = Array2::from_shape_simple_fn((n, d), || rng.random_range(-1.0f32..1.0));
        let ft = Array2::from_shape_simple_fn((n, d), || rng.random_range(-1.0f32..1.0));
        let sim = fs.dot(&ft.t()).mapv(|v| v as f64);
        let m = SparseSimMatrix::from_dense(sim.view());
        assert_eq!(m.nnz(), n * n);
        let out = sp_csls(&m, &csls_radii(fs.view(), ft.view(), k))
            .unwrap()
            .to_dense();
        let oracle = dense_csls(sim.view(), k);
        let (lo, hi) = oracle
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        for (a, b) in out.iter().zip(oracle.iter()) {
            assert!((a - (b - lo) / (hi - lo)).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn fuse_final_support_is_union() {
        let mut rng = crate::seeded_rng(4);
        let ml = random_sparse(&mut rng, 10, 10, 0.3);
        let mg = random_sparse(&mut rng, 10, 10, 0.3);
        let radii = CslsRadii::constant(10, 10, 0.2);
        let mf = fuse_final(&ml, &mg, &radii).unwrap();
        assert_eq!(mf.nnz(), ml.add(&mg).unwrap().nnz());
        let only_l = fuse_final(&ml, &SparseSimMatrix::empty(10, 10), &radii).unwrap();
        assert_eq!(only_l, sp_csls(&ml, &radii).unwrap());
    }
}
