use ndarray::{Array2, Axis};
use rayon::prelude::*;

use super::{sinkhorn, FusionConfig};
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::sampler::BatchAssignment;
use crate::sparse::SparseSimMatrix;

/// Dot products between the source members and target members of one batch.
pub fn batch_local_sim(
    emb: &EmbeddingMatrix,
    sources: &[usize],
    targets: &[usize],
) -> Result<Array2<f32>> {
    if sources.is_empty() || targets.is_empty() {
        return Err(Error::invalid("batch has an empty side"));
    }
    let s = emb.source().select(Axis(0), sources);
    let t = emb.target().select(Axis(0), targets);
    Ok(s.dot(&t.t()))
}

/// Sum of per-batch Sinkhorn outputs at global coordinates.
pub fn assemble_local(
    assignment: &BatchAssignment,
    emb: &EmbeddingMatrix,
    cfg: &FusionConfig,
) -> Result<SparseSimMatrix> {
    if assignment.source_labels().len() != emb.n_source()
        || assignment.target_labels().len() != emb.n_target()
    {
        return Err(Error::DimensionMismatch(format!(
            "assignment covers {} x {} entities, embeddings {} x {}",
            assignment.source_labels().len(),
            assignment.target_labels().len(),
            emb.n_source(),
            emb.n_target()
        )));
    }
    assemble_local_batches(&assignment.batches(), emb, cfg)
}

/// [`assemble_local`] over explicit member lists. Batches with an empty side
/// contribute nothing; overlapping batches are a [`Error::Collision`].
pub fn assemble_local_batches(
    batches: &[(Vec<usize>, Vec<usize>)],
    emb: &EmbeddingMatrix,
    cfg: &FusionConfig,
) -> Result<SparseSimMatrix> {
    cfg.validate()?;
    let parts = batches
        .par_iter()
        .map(|(bs, bt)| -> Result<Vec<(u32, u32, f64)>> {
            if bs.is_empty() || bt.is_empty() {
                return Ok(Vec::new());
            }
            let local = batch_local_sim(emb, bs, bt)?;
            let p = sinkhorn(local.view(), cfg.sinkhorn_iters, cfg.tau)?;
            let mut out = Vec::with_capacity(bs.len() * bt.len());
            for (row, &s) in p.outer_iter().zip(bs) {
                for (&v, &t) in row.iter().zip(bt) {
                    out.push((s as u32, t as u32, v as f64));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let triplets = parts.concat();
    SparseSimMatrix::from_unique_triplets(emb.n_source(), emb.n_target(), triplets)
}

/// `M_C + M_I(s->t) + M_I(t->s)^T`.
pub fn fuse_local(
    m_c: &SparseSimMatrix,
    m_i_st: &SparseSimMatrix,
    m_i_ts: &SparseSimMatrix,
) -> Result<SparseSimMatrix> {
    m_c.add(m_i_st)?.add(&m_i_ts.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn emb(s: Array2<f32>, t: Array2<f32>) -> EmbeddingMatrix {
        let n = s.nrows();
        EmbeddingMatrix::new(ndarray::concatenate![Axis(0), s, t], n).unwrap()
    }

    #[test]
    fn hand_set_dot_products() {
        let e = emb(
            array![[1.0, 2.0], [0.5, -1.0]],
            array![[3.0, 0.0], [1.0, 1.0]],
        );
        let m = batch_local_sim(&e, &[0, 1], &[0, 1]).unwrap();
        assert_eq!(m, array![[3.0, 3.0], [1.5, -0.5]]);
        assert_eq!(batch_local_sim(&e, &[1], &[1]).unwrap(), array![[-0.5]]);
        assert!(batch_local_sim(&e, &[], &[1]).is_err());
    }

    #[test]
    fn orthonormal_gives_identity() {
        let eye = Array2::<f32>::eye(4);
        let e = emb(eye.clone(), eye);
        let m = batch_local_sim(&e, &[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap();
        assert_eq!(m, Array2::eye(4));
    }

    fn random_emb(ns: usize, nt: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = crate::seeded_rng(seed);
        let data = Array2::from_shape_simple_fn((ns + nt, 8), || rng.random_range(-0.3f32..0.3));
        EmbeddingMatrix::new(data, ns).unwrap()
    }

    #[test]
    fn single_batch_matches_dense_sinkhorn() {
        let e = random_emb(6, 5, 1);
        let cfg = FusionConfig::default();
        let m = assemble_local(&BatchAssignment::single(6, 5), &e, &cfg).unwrap();
        let dense = e.source().dot(&e.target().t());
        let p = sinkhorn(dense.view(), cfg.sinkhorn_iters, cfg.tau).unwrap();
        assert_eq!(m.nnz(), 30);
        for (r, c, v) in m.iter() {
            assert_eq!(v, p[[r, c]] as f64);
        }
    }

    #[test]
    fn nnz_is_sum_of_batch_products() {
        let e = random_emb(9, 7, 2);
        let a = BatchAssignment::new(
            3,
            vec![0, 1, 2, 0, 1, 2, 0, 0, 1],
            vec![2, 2, 1, 0, 0, 1, 2],
        )
        .unwrap();
        let m = assemble_local(&a, &e, &FusionConfig::default()).unwrap();
        let (hs, ht) = a.histogram();
        let expect: usize = hs.iter().zip(&ht).map(|(x, y)| x * y).sum();
        assert_eq!(m.nnz(), expect);
        assert!(m.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        for (r, c, _) in m.iter() {
            assert_eq!(a.source_labels()[r], a.target_labels()[c]);
        }
    }

    #[test]
    fn overlapping_batches_collide() {
        let e = random_emb(3, 3, 3);
        let batches = vec![(vec![0, 1], vec![0, 1]), (vec![1, 2], vec![1, 2])];
        match assemble_local_batches(&batches, &e, &FusionConfig::default()) {
            Err(Error::Collision { row: 1, col: 1 }) => {}
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn fuse_local_sums_with_transpose() {
        let mc = SparseSimMatrix::from_dense(array![[0.5, 0.0, 0.0], [0.0, 0.25, 0.0]].view());
        let e = SparseSimMatrix::empty(2, 3);
        let et = SparseSimMatrix::empty(3, 2);
        assert_eq!(fuse_local(&mc, &e, &et).unwrap(), mc);

        let ts = SparseSimMatrix::from_dense(array![[0.0, 0.0], [0.0, 0.0], [0.125, 0.0]].view());
        let ml = fuse_local(&mc, &mc, &ts).unwrap();
        assert_eq!(ml.get(0, 0), Some(1.0));
        assert_eq!(ml.get(0, 2), Some(0.125));
        assert!(fuse_local(&mc, &mc, &mc).is_err());
    }

    #[test]
    fn identical_permutation_matrices_triple() {
        let perm = array![[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
        let p = SparseSimMatrix::from_dense(perm.view());
        let ml = fuse_local(&p, &p, &p.transpose()).unwrap();
        assert_eq!(ml.to_dense(), perm * 3.0);
    }
}
