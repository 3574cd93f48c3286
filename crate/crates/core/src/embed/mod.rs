//! Siamese GCN training with neighborhood sampling and the NHSM loss.
//!
//! Both graphs share one encoder. Their adjacencies are joined
//! block-diagonally, so target entity `t` is node `n_source + t`.

mod batch;
mod block;
mod encoder;
mod gradcheck;
mod io;
mod loss;
mod train;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

pub use batch::{sample_training_batch, TrainingBatch};
pub use block::{full_block, neighborhood_sample, BlockLayer, SampledBlock};
pub(crate) use encoder::glorot;
pub use encoder::{Activation, GcnEncoder, ParamVars};
pub use gradcheck::{
    analytic_gradients, gradient_check, max_relative_error, numeric_gradients, GradCheckBatch,
};
pub use io::{read_embeddings, write_embeddings, EMBEDDING_MAGIC};
pub use loss::{log_sum_exp, NhsmBatch, NhsmStats};
pub use train::{train_embeddings, train_embeddings_with_history, Adam, TrainConfig, TrainOutcome};

use crate::error::{Error, Result};

/// One row per entity: source entities first, then target entities.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Array2<f32>,
    n_source: usize,
}

impl EmbeddingMatrix {
    pub fn new(data: Array2<f32>, n_source: usize) -> Result<Self> {
        if n_source > data.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{n_source} source rows requested from a {}-row matrix",
                data.nrows()
            )));
        }
        Ok(EmbeddingMatrix { data, n_source })
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.data.nrows() - self.n_source
    }

    pub fn as_array(&self) -> &Array2<f32> {
        &self.data
    }

    pub fn source(&self) -> ArrayView2<'_, f32> {
        self.data.view().split_at(Axis(0), self.n_source).0
    }

    pub fn target(&self) -> ArrayView2<'_, f32> {
        self.data.view().split_at(Axis(0), self.n_source).1
    }

    pub fn source_row(&self, e: usize) -> ArrayView1<'_, f32> {
        self.data.row(e)
    }

    pub fn target_row(&self, e: usize) -> ArrayView1<'_, f32> {
        self.data.row(self.n_source + e)
    }

    /// Rows scaled to unit L2 norm (zero rows stay zero).
    pub fn l2_normalized(&self) -> EmbeddingMatrix {
        let mut data = self.data.clone();
        for mut r in data.outer_iter_mut() {
            let n = r.dot(&r).sqrt();
            if n > 0.0 {
                r /= n;
            }
        }
        EmbeddingMatrix {
            data,
            n_source: self.n_source,
        }
    }

    /// Source and target sides swapped.
    pub fn swapped(&self) -> EmbeddingMatrix {
        let data = ndarray::concatenate(Axis(0), &[self.target(), self.source()]).unwrap();
        EmbeddingMatrix {
            data,
            n_source: self.n_target(),
        }
    }
}
