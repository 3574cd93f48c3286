use ndarray::{Array2, ArrayView2};

use super::config::{Direction, PartitionerConfig};
use super::metis::metis_partition;
use super::BatchAssignment;
use crate::embed::{glorot, Adam, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, WeightedAdjacency};
use crate::tensor::{CustomOp, SparseRows, Tape};

#[derive(Debug, Clone)]
pub struct IscsOutcome {
    pub assignment: BatchAssignment,
    /// Fraction of labeled entities the node classifier fits.
    pub train_accuracy: f64,
    /// Batches that had no labeled entity on the classified side.
    pub unlabeled_classes: Vec<usize>,
}

/// Structure-based sampler. The partitioned side is cut into `k` parts; seed
/// pairs carry those labels across, and a two-layer GCN trained on them
/// labels every entity of the other side. `TargetToSource` partitions the
/// target graph and classifies the source graph.
pub fn iscs(
    adj_s: &WeightedAdjacency,
    adj_t: &WeightedAdjacency,
    emb: &EmbeddingMatrix,
    seed: &AlignmentSet,
    cfg: &PartitionerConfig,
    direction: Direction,
) -> Result<IscsOutcome> {
    cfg.validate()?;
    if adj_s.num_nodes() != emb.n_source() || adj_t.num_nodes() != emb.n_target() {
        return Err(Error::DimensionMismatch(
            "graph sizes differ from embedding sides".into(),
        ));
    }
    match direction {
        Direction::SourceToTarget => iscs_forward(adj_s, adj_t, emb.target(), seed, cfg),
        Direction::TargetToSource => {
            let out = iscs_forward(adj_t, adj_s, emb.source(), &seed.reversed(), cfg)?;
            Ok(IscsOutcome {
                assignment: out.assignment.swapped(),
                ..out
            })
        }
    }
}

fn iscs_forward(
    partitioned: &WeightedAdjacency,
    classified: &WeightedAdjacency,
    features: ArrayView2<'_, f32>,
    seed: &AlignmentSet,
    cfg: &PartitionerConfig,
) -> Result<IscsOutcome> {
    let k = cfg.k;
    let n = classified.num_nodes();
    let source_labels = metis_partition(partitioned, k, None)?;
    if k == 1 {
        return Ok(IscsOutcome {
            assignment: BatchAssignment::new(1, source_labels, vec![0; n])?,
            train_accuracy: 1.0,
            unlabeled_classes: Vec::new(),
        });
    }
    // compact the classes that actually have labeled entities
    let mut present = vec![false; k];
    for s in seed.sources() {
        present[source_labels[s]] = true;
    }
    let classes: Vec<usize> = (0..k).filter(|&c| present[c]).collect();
    let unlabeled_classes: Vec<usize> = (0..k).filter(|&c| !present[c]).collect();
    if classes.is_empty() {
        return Err(Error::invalid("no seed pairs to train the node classifier"));
    }
    let mut compact = vec![usize::MAX; k];
    for (i, &c) in classes.iter().enumerate() {
        compact[c] = i;
    }
    let train: Vec<(usize, usize)> = seed
        .pairs()
        .iter()
        .map(|&(s, t)| (t, compact[source_labels[s]]))
        .collect();
    let (pred, train_accuracy) =
        gcn_node_classifier(classified, features, &train, classes.len(), cfg)?;
    let target_labels = pred.into_iter().map(|c| classes[c]).collect();
    Ok(IscsOutcome {
        assignment: BatchAssignment::new(k, source_labels, target_labels)?,
        train_accuracy,
        unlabeled_classes,
    })
}

/// Mean cross-entropy of the softmax over `rows` of the logits.
struct SoftmaxCrossEntropy<'a> {
    labeled: &'a [(usize, usize)],
}

impl SoftmaxCrossEntropy<'_> {
    fn probs(&self, logits: &Array2<f32>, node: usize) -> Vec<f64> {
        let row = logits.row(node);
        let mx = row.fold(f32::NEG_INFINITY, |a, &b| a.max(b)) as f64;
        let e: Vec<f64> = row.iter().map(|&v| (v as f64 - mx).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }
}

impl CustomOp<f32> for SoftmaxCrossEntropy<'_> {
    fn forward(&self, inputs: &[&Array2<f32>]) -> Array2<f32> {
        let logits = inputs[0];
        let loss: f64 = self
            .labeled
            .iter()
            .map(|&(node, c)| -self.probs(logits, node)[c].max(1e-300).ln())
            .sum();
        Array2::from_elem((1, 1), (loss / self.labeled.len() as f64) as f32)
    }

    fn backward(
        &self,
        inputs: &[&Array2<f32>],
        _: &Array2<f32>,
        grad: &Array2<f32>,
    ) -> Vec<Array2<f32>> {
        let logits = inputs[0];
        let scale = grad[[0, 0]] as f64 / self.labeled.len() as f64;
        let mut d = Array2::zeros(logits.raw_dim());
        for &(node, c) in self.labeled {
            let p = self.probs(logits, node);
            for (j, pj) in p.into_iter().enumerate() {
                let y = if j == c { 1.0 } else { 0.0 };
                d[[node, j]] += ((pj - y) * scale) as f32;
            }
        }
        vec![d]
    }
}

fn to_sparse_rows(adj: &WeightedAdjacency) -> SparseRows<f32> {
    let norm = adj.row_normalized();
    let mut row_ptr = vec![0];
    let mut cols = Vec::with_capacity(norm.nnz());
    let mut vals = Vec::with_capacity(norm.nnz());
    for i in 0..norm.num_nodes() {
        let (c, w) = norm.row(i);
        cols.extend_from_slice(c);
        vals.extend(w.iter().map(|&x| x as f32));
        row_ptr.push(cols.len());
    }
    SparseRows {
        row_ptr,
        cols,
        vals,
        n_cols: norm.num_nodes(),
    }
}

fn gcn_forward<'t>(
    tape: &mut Tape<'t, f32>,
    a: &'t SparseRows<f32>,
    ax: &Array2<f32>,
    params: &[Array2<f32>],
) -> (Vec<crate::tensor::Var>, crate::tensor::Var) {
    let x = tape.leaf(ax.clone());
    let vars: Vec<_> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let h1 = tape.matmul(x, vars[0]);
    let h1 = tape.add_row(h1, vars[1]);
    let h1 = tape.relu(h1);
    let z = tape.matmul(h1, vars[2]);
    let z = tape.sp_matmul(a, z);
    let z = tape.add_row(z, vars[3]);
    (vars, z)
}

/// Full-graph two-layer GCN, `softmax(A relu(A X W1 + b1) W2 + b2)` with the
/// row-normalized adjacency `A`, trained with Adam on `(node, class)` pairs.
/// Returns the predicted class of every node and the training accuracy.
pub fn gcn_node_classifier(
    adj: &WeightedAdjacency,
    features: ArrayView2<'_, f32>,
    labeled: &[(usize, usize)],
    n_classes: usize,
    cfg: &PartitionerConfig,
) -> Result<(Vec<usize>, f64)> {
    let n = adj.num_nodes();
    if features.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows for {n} nodes",
            features.nrows()
        )));
    }
    if labeled.is_empty() || n_classes == 0 {
        return Err(Error::invalid("node classifier needs labeled nodes"));
    }
    if let Some(&(node, c)) = labeled
        .iter()
        .find(|&&(node, c)| node >= n || c >= n_classes)
    {
        return Err(Error::invalid(format!("bad training pair ({node}, {c})")));
    }
    let a = to_sparse_rows(adj);
    let ax = a.matmul(features);
    let mut rng = crate::seeded_rng(cfg.rng_seed ^ 0x6c1a_55f1);
    let d = features.ncols();
    let h = cfg.gcn_hidden;
    let mut params: Vec<Array2<f32>> = vec![
        glorot(d, h, &mut rng),
        Array2::zeros((1, h)),
        glorot(h, n_classes, &mut rng),
        Array2::zeros((1, n_classes)),
    ];
    let mut adam = Adam::new(&params.iter().collect::<Vec<_>>(), cfg.gcn_classifier_lr);
    let loss_op = SoftmaxCrossEntropy { labeled };

    for epoch in 0..cfg.gcn_classifier_epochs {
        let mut tape = Tape::new();
        let (vars, logits) = gcn_forward(&mut tape, &a, &ax, &params);
        let loss = tape.custom(&[logits], SoftmaxCrossEntropy { labeled });
        let value = tape.value(loss)[[0, 0]];
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: 0,
                loss: value as f64,
            });
        }
        let mut grads = tape.backward(loss);
        let g: Vec<_> = vars.iter().map(|&v| grads.take(v)).collect();
        adam.step(params.iter_mut().collect(), g);
    }

    let mut tape = Tape::new();
    let (_, logits) = gcn_forward(&mut tape, &a, &ax, &params);
    let logits = tape.value(logits);
    let pred: Vec<usize> = logits
        .outer_iter()
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    let hits = loss_op
        .labeled
        .iter()
        .filter(|&&(node, c)| pred[node] == c)
        .count();
    Ok((pred, hits as f64 / labeled.len() as f64))
}
