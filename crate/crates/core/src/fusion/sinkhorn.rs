use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::real::Real;

/// Entropic Sinkhorn normalization of a similarity matrix.
///
/// The kernel is `exp((sim - rowmax) / tau)`; each round scales rows, then
/// columns. Targets are uniform marginals carrying total mass `min(m, n)`,
/// so square inputs approach a doubly stochastic matrix and rectangular ones
/// saturate their shorter side at one.
pub fn sinkhorn<T: Real>(sim: ArrayView2<'_, T>, iters: usize, tau: f64) -> Result<Array2<T>> {
    sinkhorn_impl(sim, iters, tau, None)
}

/// [`sinkhorn`] plus the row-marginal L1 violation after every round.
pub fn sinkhorn_with_trace<T: Real>(
    sim: ArrayView2<'_, T>,
    iters: usize,
    tau: f64,
) -> Result<(Array2<T>, Vec<f64>)> {
    let mut trace = Vec::with_capacity(iters);
    let out = sinkhorn_impl(sim, iters, tau, Some(&mut trace))?;
    Ok((out, trace))
}

/// `sum_i |rowsum_i - r| + sum_j |colsum_j - c|` against the uniform targets.
pub fn marginal_violation<T: Real>(p: ArrayView2<'_, T>) -> f64 {
    let (rt, ct) = targets(p.nrows(), p.ncols());
    let rows: f64 = p
        .sum_axis(Axis(1))
        .iter()
        .map(|&s| (s.as_f64() - rt).abs())
        .sum();
    let cols: f64 = p
        .sum_axis(Axis(0))
        .iter()
        .map(|&s| (s.as_f64() - ct).abs())
        .sum();
    rows + cols
}

fn targets(m: usize, n: usize) -> (f64, f64) {
    let mass = m.min(n) as f64;
    (mass / m as f64, mass / n as f64)
}

fn sinkhorn_impl<T: Real>(
    sim: ArrayView2<'_, T>,
    iters: usize,
    tau: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<Array2<T>> {
    if iters == 0 {
        return Err(Error::invalid("sinkhorn needs at least one round"));
    }
    let (m, n) = sim.dim();
    if m == 0 || n == 0 {
        return Ok(Array2::zeros((m, n)));
    }
    if sim.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sinkhorn input"));
    }
    let inv_tau = T::of(1.0 / tau);
    let mut p = sim.to_owned();
    for mut row in p.outer_iter_mut() {
        let mx = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        row.mapv_inplace(|v| ((v - mx) * inv_tau).exp());
    }
    let (rt, ct) = targets(m, n);
    let (rt, ct) = (T::of(rt), T::of(ct));
    let mut col = vec![T::zero(); n];
    for _ in 0..iters {
        for mut row in p.outer_iter_mut() {
            let s = row.sum();
            if s > T::zero() {
                row *= rt / s;
            }
        }
        col.iter_mut().for_each(|c| *c = T::zero());
        for row in p.outer_iter() {
            for (c, &v) in col.iter_mut().zip(row.iter()) {
                *c += v;
            }
        }
        for c in col.iter_mut() {
            *c = if *c > T::zero() { ct / *c } else { T::zero() };
        }
        for mut row in p.outer_iter_mut() {
            for (v, &c) in row.iter_mut().zip(col.iter()) {
                *v *= c;
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(marginal_violation(p.view()));
        }
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sinkhorn output"));
    }
    Ok(p)
}
