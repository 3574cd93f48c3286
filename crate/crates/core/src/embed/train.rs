use std::sync::mpsc;

use ndarray::Array2;

use super::batch::{epoch_batches, TrainingBatch};
use super::block::{full_block, neighborhood_sample, SampledBlock};
use super::encoder::{Activation, GcnEncoder};
use super::loss::NhsmBatch;
use super::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, KnowledgeGraph, WeightedAdjacency};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub layers: usize,
    pub fanout: usize,
    /// Seed pairs per batch (`N_p`).
    pub n_pairs: usize,
    /// Negatives per side per batch (`N_n`).
    pub n_neg: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub rng_seed: u64,
    pub activation: Activation,
    pub residual: bool,
    /// Hold the loss's z-score statistics constant in the backward pass.
    pub detach_stats: bool,
    /// Sample batches on the training thread instead of a prefetch thread.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            layers: 2,
            fanout: 8,
            n_pairs: 2000,
            n_neg: 4000,
            gamma: 1.0,
            lambda: 2.0,
            epochs: 50,
            learning_rate: 0.005,
            rng_seed: 0,
            activation: Activation::Tanh,
            residual: false,
            detach_stats: true,
            deterministic: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_owned()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.layers == 0 {
            return bad("layers must be positive");
        }
        if self.fanout == 0 {
            return bad("fan-out must be at least 1");
        }
        if self.n_pairs == 0 {
            return bad("N_p must be at least 1");
        }
        if !(self.lambda > 0.0) {
            return bad("lambda must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Vec<Array2<T>>,
    v: Vec<Array2<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(params: &[&Array2<T>], lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.iter().map(|p| Array2::zeros(p.raw_dim())).collect(),
            v: params.iter().map(|p| Array2::zeros(p.raw_dim())).collect(),
        }
    }

    /// Apply one update; parameters without a gradient see a zero gradient.
    pub fn step(&mut self, params: Vec<&mut Array2<T>>, grads: Vec<Option<Array2<T>>>) {
        self.step += 1;
        let b1 = T::of(self.beta1);
        let b2 = T::of(self.beta2);
        let one = T::one();
        let c1 = T::of(1.0 - self.beta1.powi(self.step));
        let c2 = T::of(1.0 - self.beta2.powi(self.step));
        let lr = T::of(self.lr);
        let eps = T::of(self.eps);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            match g {
                Some(g) => {
                    ndarray::Zip::from(&mut *m)
                        .and(&mut *v)
                        .and(&g)
                        .for_each(|m, v, &g| {
                            *m = b1 * *m + (one - b1) * g;
                            *v = b2 * *v + (one - b2) * g * g;
                        });
                }
                None => {
                    m.mapv_inplace(|x| b1 * x);
                    v.mapv_inplace(|x| b2 * x);
                }
            }
            ndarray::Zip::from(p)
                .and(&*m)
                .and(&*v)
                .for_each(|p, &m, &v| {
                    *p -= lr * (m / c1) / ((v / c2).sqrt() + eps);
                });
        }
    }
}

/// Result of [`train_embeddings_with_history`].
pub struct TrainOutcome {
    pub embeddings: EmbeddingMatrix,
    pub encoder: GcnEncoder<f32>,
    /// Mean per-pair loss of every epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn train_embeddings(
    kg_s: &KnowledgeGraph,
    kg_t: &KnowledgeGraph,
    seed: &AlignmentSet,
    cfg: &TrainConfig,
) -> Result<EmbeddingMatrix> {
    Ok(train_embeddings_with_history(kg_s, kg_t, seed, cfg)?.embeddings)
}

struct Prepared {
    epoch: usize,
    index: usize,
    batch: TrainingBatch,
    block: SampledBlock<f32>,
}

/// Draw every batch and block of the run in order. Sampling has its own
/// generator so prefetching does not change the sequence.
fn produce(
    adj: &WeightedAdjacency,
    seed: &AlignmentSet,
    n_source: usize,
    n_target: usize,
    cfg: &TrainConfig,
    mut emit: impl FnMut(Prepared) -> bool,
) {
    let mut rng = crate::seeded_rng(cfg.rng_seed ^ 0x5eed_ba7c);
    let n_pairs = cfg.n_pairs.min(seed.len());
    for epoch in 0..cfg.epochs {
        let batches = epoch_batches(seed, n_source, n_target, n_pairs, cfg.n_neg, &mut rng);
        for (index, batch) in batches.into_iter().enumerate() {
            let targets: Vec<usize> = batch
                .source
                .iter()
                .copied()
                .chain(batch.target.iter().map(|&t| t + n_source))
                .collect();
            let block = neighborhood_sample(adj, &targets, cfg.fanout, cfg.layers, &mut rng);
            if !emit(Prepared {
                epoch,
                index,
                batch,
                block,
            }) {
                return;
            }
        }
    }
}

/// Train the Siamese encoder over both graphs and infer all embeddings.
///
/// Batches larger than the seed alignment are clamped to it. Final
/// embeddings come from a full-neighborhood pass over every entity.
pub fn train_embeddings_with_history(
    kg_s: &KnowledgeGraph,
    kg_t: &KnowledgeGraph,
    seed: &AlignmentSet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if seed.is_empty() {
        return Err(Error::invalid("training needs a non-empty seed alignment"));
    }
    let (n_s, n_t) = (kg_s.num_entities(), kg_t.num_entities());
    let adj = WeightedAdjacency::build(kg_s).disjoint_union(&WeightedAdjacency::build(kg_t));
    let mut rng = crate::seeded_rng(cfg.rng_seed);
    let mut enc = GcnEncoder::<f32>::glorot(
        n_s + n_t,
        cfg.dim,
        cfg.layers,
        cfg.activation,
        cfg.residual,
        &mut rng,
    );
    let mut adam = Adam::new(&enc.params(), cfg.learning_rate);
    let mut epoch_sum = vec![0.0f64; cfg.epochs];

    let mut consume = |p: Prepared| -> Result<()> {
        let pairs = (0..p.batch.num_pairs).map(|k| (k, k)).collect();
        let nhsm = NhsmBatch {
            n_source: p.batch.source.len(),
            pairs,
            gamma: cfg.gamma,
            lambda: cfg.lambda,
            detach_stats: cfg.detach_stats,
        };
        let mut tape = crate::tensor::Tape::new();
        let (vars, out) = enc.forward(&mut tape, &p.block)?;
        let loss = nhsm.record(&mut tape, out)?;
        let value = tape.value(loss)[[0, 0]].as_f64();
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: p.epoch,
                batch: p.index,
                loss: value,
            });
        }
        epoch_sum[p.epoch] += value;
        let mut grads = tape.backward(loss);
        let g: Vec<_> = vars.vars.iter().map(|&v| grads.take(v)).collect();
        adam.step(enc.params_mut(), g);
        Ok(())
    };

    if cfg.deterministic {
        let mut result = Ok(());
        produce(&adj, seed, n_s, n_t, cfg, |p| {
            result = consume(p);
            result.is_ok()
        });
        result?;
    } else {
        std::thread::scope(|scope| -> Result<()> {
            let (tx, rx) = mpsc::sync_channel::<Prepared>(2);
            let adj = &adj;
            scope.spawn(move || produce(adj, seed, n_s, n_t, cfg, |p| tx.send(p).is_ok()));
            for p in rx {
                consume(p)?;
            }
            Ok(())
        })?;
    }

    let epoch_losses = epoch_sum
        .into_iter()
        .map(|s| s / seed.len() as f64)
        .collect();
    let data = enc.infer(&full_block(&adj, cfg.layers))?;
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("trained embeddings"));
    }
    Ok(TrainOutcome {
        embeddings: EmbeddingMatrix::new(data, n_s)?,
        encoder: enc,
        epoch_losses,
    })
}
