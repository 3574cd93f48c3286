//! Finite-difference verification of the encoder + NHSM gradients.

use ndarray::Array2;

use super::block::SampledBlock;
use super::encoder::GcnEncoder;
use super::loss::{NhsmBatch, NhsmStats};
use crate::error::Result;
use crate::tensor::Tape;

/// Magnitudes below this are compared absolutely rather than relatively.
const RELATIVE_FLOOR: f64 = 1e-7;

/// A fixed block plus the loss layout over its targets.
#[derive(Debug, Clone)]
pub struct GradCheckBatch {
    pub block: SampledBlock<f64>,
    pub loss: NhsmBatch,
}

fn loss_value(
    model: &GcnEncoder<f64>,
    batch: &GradCheckBatch,
    stats: Option<&NhsmStats<f64>>,
) -> Result<f64> {
    let out = model.infer(&batch.block)?;
    match stats {
        Some(s) => batch.loss.loss_with_stats(&out, s),
        None => batch.loss.loss(&out),
    }
}

/// Reverse-mode gradients in [`GcnEncoder::params`] order.
pub fn analytic_gradients(
    model: &GcnEncoder<f64>,
    batch: &GradCheckBatch,
) -> Result<Vec<Array2<f64>>> {
    let mut tape = Tape::new();
    let (vars, out) = model.forward(&mut tape, &batch.block)?;
    let loss = batch.loss.record(&mut tape, out)?;
    let mut grads = tape.backward(loss);
    Ok(model
        .params()
        .iter()
        .zip(&vars.vars)
        .map(|(p, &v)| grads.take(v).unwrap_or_else(|| Array2::zeros(p.raw_dim())))
        .collect())
}

/// Central differences `(L(p + eps) - L(p - eps)) / 2 eps`, one entry at a time.
///
/// When the loss detaches its z-score statistics they are held at their
/// values for the unperturbed model, matching what the backward pass sees.
pub fn numeric_gradients(
    model: &GcnEncoder<f64>,
    batch: &GradCheckBatch,
    eps: f64,
) -> Result<Vec<Array2<f64>>> {
    let frozen = if batch.loss.detach_stats {
        Some(batch.loss.stats(&model.infer(&batch.block)?)?)
    } else {
        None
    };
    let frozen = frozen.as_ref();
    let mut work = model.clone();
    let shapes: Vec<_> = model.params().iter().map(|p| p.raw_dim()).collect();
    let mut out = Vec::with_capacity(shapes.len());
    for (pi, shape) in shapes.into_iter().enumerate() {
        let mut g = Array2::zeros(shape);
        for k in 0..g.len() {
            let orig = work.params()[pi].as_slice().unwrap()[k];
            work.params_mut()[pi].as_slice_mut().unwrap()[k] = orig + eps;
            let plus = loss_value(&work, batch, frozen)?;
            work.params_mut()[pi].as_slice_mut().unwrap()[k] = orig - eps;
            let minus = loss_value(&work, batch, frozen)?;
            work.params_mut()[pi].as_slice_mut().unwrap()[k] = orig;
            g.as_slice_mut().unwrap()[k] = (plus - minus) / (2.0 * eps);
        }
        out.push(g);
    }
    Ok(out)
}

/// `max |a - n| / max(|a|, |n|, 1e-7)` over every entry.
pub fn max_relative_error(analytic: &[Array2<f64>], numeric: &[Array2<f64>]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .flat_map(|(a, n)| a.iter().zip(n.iter()))
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(RELATIVE_FLOOR))
        .fold(0.0, f64::max)
}

/// Maximum relative error between reverse-mode and finite-difference gradients.
pub fn gradient_check(model: &GcnEncoder<f64>, batch: &GradCheckBatch, eps: f64) -> Result<f64> {
    let a = analytic_gradients(model, batch)?;
    let n = numeric_gradients(model, batch, eps)?;
    Ok(max_relative_error(&a, &n))
}
