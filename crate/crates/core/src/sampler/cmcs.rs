use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};

use super::classifier::train_classifier;
use super::config::PartitionerConfig;
use super::kmeans::kmeans;
use super::BatchAssignment;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::kg::AlignmentSet;

/// Column means and standard deviations of the rows in `fit`.
fn zscore_fit(x: ArrayView2<'_, f64>) -> (Array1<f64>, Array1<f64>) {
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let std = x
        .std_axis(Axis(0), 0.0)
        .mapv(|s| if s > 0.0 { s } else { 1.0 });
    (mean, std)
}

fn side_features(f: ArrayView2<'_, f32>, fit_rows: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let all = f.mapv(|v| v as f64);
    let (mean, std) = zscore_fit(all.select(Axis(0), fit_rows).view());
    let z = (all - &mean) / &std;
    let train = z.select(Axis(0), fit_rows);
    (z, train)
}

/// Mapping-based sampler: k-means over the concatenated standardized seed
/// embeddings, then one classifier per side extends the labels to every
/// entity. Seed entities keep their cluster label, so every seed pair ends up
/// in one batch.
pub fn cmcs(
    emb: &EmbeddingMatrix,
    seed: &AlignmentSet,
    cfg: &PartitionerConfig,
) -> Result<BatchAssignment> {
    cfg.validate()?;
    let k = cfg.k;
    if seed.len() < k {
        return Err(Error::invalid(format!(
            "{} seed pairs cannot fill {k} batches",
            seed.len()
        )));
    }
    if k == 1 {
        return Ok(BatchAssignment::single(emb.n_source(), emb.n_target()));
    }
    let src: Vec<usize> = seed.sources().collect();
    let tgt: Vec<usize> = seed.targets().collect();
    let (zs, train_s) = side_features(emb.source(), &src);
    let (zt, train_t) = side_features(emb.target(), &tgt);
    let joint = concatenate![Axis(1), train_s, train_t];
    let mut rng = crate::seeded_rng(cfg.rng_seed);
    let clusters = kmeans(
        joint.view(),
        k,
        cfg.kmeans_max_iter,
        cfg.kmeans_tol,
        &mut rng,
    )?
    .labels;

    let (ls, lt) = rayon::join(
        || train_classifier(cfg.classifier, train_s.view(), &clusters, k, zs.view()),
        || train_classifier(cfg.classifier, train_t.view(), &clusters, k, zt.view()),
    );
    let (mut ls, mut lt) = (ls?, lt?);
    for (i, (&s, &t)) in src.iter().zip(&tgt).enumerate() {
        ls[s] = clusters[i];
        lt[t] = clusters[i];
    }
    BatchAssignment::new(k, ls, lt)
}
