use ndarray::Array2;

use super::block::SampledBlock;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::{Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            _ => Err(Error::invalid(format!("unknown activation {s:?}"))),
        }
    }
}

/// Weighted-mean GCN layer stack over a learnable embedding table.
///
/// Layer `k` computes `act(W_k * mean_a(h_u^{k-1}) + b_k)`, plus
/// `h_v^{k-1}` when `residual` is set. The mean is over the block's
/// in-neighbors (self-loop included) weighted by the adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnEncoder<T> {
    pub embeddings: Array2<T>,
    pub weights: Vec<Array2<T>>,
    pub biases: Vec<Array2<T>>,
    pub activation: Activation,
    pub residual: bool,
}

/// Tape handles for the encoder's parameters, in [`GcnEncoder::params`] order.
pub struct ParamVars {
    pub vars: Vec<Var>,
}

pub(crate) fn glorot<T: Real>(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Array2<T> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || T::of(rng.random_range(-limit..limit)))
}

impl<T: Real> GcnEncoder<T> {
    /// Glorot-initialized table and weights, zero biases.
    pub fn glorot(
        n_nodes: usize,
        dim: usize,
        layers: usize,
        activation: Activation,
        residual: bool,
        rng: &mut impl rand::Rng,
    ) -> Self {
        let embeddings = glorot(n_nodes, dim, rng);
        let weights = (0..layers).map(|_| glorot(dim, dim, rng)).collect();
        let biases = (0..layers).map(|_| Array2::zeros((1, dim))).collect();
        GcnEncoder {
            embeddings,
            weights,
            biases,
            activation,
            residual,
        }
    }

    pub fn dim(&self) -> usize {
        self.embeddings.ncols()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn params(&self) -> Vec<&Array2<T>> {
        let mut p = vec![&self.embeddings];
        for (w, b) in self.weights.iter().zip(&self.biases) {
            p.push(w);
            p.push(b);
        }
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Array2<T>> {
        let mut p = vec![&mut self.embeddings];
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            p.push(w);
            p.push(b);
        }
        p
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Record a forward pass; returns parameter handles and the output
    /// (one row per block target, in target order).
    pub fn forward<'a>(
        &self,
        tape: &mut Tape<'a, T>,
        block: &'a SampledBlock<T>,
    ) -> Result<(ParamVars, Var)> {
        if block.layers.len() != self.num_layers() {
            return Err(Error::DimensionMismatch(format!(
                "block has {} layers, encoder has {}",
                block.layers.len(),
                self.num_layers()
            )));
        }
        let vars: Vec<Var> = self
            .params()
            .into_iter()
            .map(|p| tape.leaf(p.clone()))
            .collect();
        let mut h = tape.gather(vars[0], block.input_nodes());
        for (k, layer) in block.layers.iter().enumerate() {
            if layer.agg.n_cols != tape.value(h).nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {k} expects {} inputs, got {}",
                    layer.agg.n_cols,
                    tape.value(h).nrows()
                )));
            }
            let agg = tape.sp_matmul(&layer.agg, h);
            let lin = tape.matmul(agg, vars[1 + 2 * k]);
            let lin = tape.add_row(lin, vars[2 + 2 * k]);
            let act = match self.activation {
                Activation::Tanh => tape.tanh(lin),
                Activation::Relu => tape.relu(lin),
                Activation::Identity => lin,
            };
            h = if self.residual {
                let prev = tape.head(h, layer.num_dst);
                tape.add(act, prev)
            } else {
                act
            };
        }
        Ok((ParamVars { vars }, h))
    }

    /// Forward pass without recording gradients.
    pub fn infer(&self, block: &SampledBlock<T>) -> Result<Array2<T>> {
        let mut tape = Tape::new();
        let (_, out) = self.forward(&mut tape, block)?;
        Ok(tape.value(out).clone())
    }
}
