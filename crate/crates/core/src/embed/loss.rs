//! Normalized hard sample mining loss.
//!
//! For a seed pair `(s, t)` in a batch the candidate set is
//! `x_k = gamma - sim(s, t) + sim(s, k)` for every `k` in the target side of
//! the batch (the positive included, where `x = gamma`). `sim` is the dot
//! product, so `x_k` is the margin violation of candidate `k`. The set is
//! z-scored with the population standard deviation and the pair contributes
//! `logsumexp(lambda * z)`. The same term is added in the target-to-source
//! direction.
//!
//! With `detach_stats` the mean and deviation of each candidate set are
//! constants of the backward pass, which makes the gradient a
//! softmax-weighted margin gradient. Differentiating through them instead
//! rewards any single outlying candidate, including a hard negative.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::{CustomOp, Tape, Var};

/// Loss hyper-parameters plus the batch layout.
///
/// The loss input has `n_source` rows for the source side of the batch
/// followed by the target side; `pairs` index into those two blocks.
#[derive(Debug, Clone)]
pub struct NhsmBatch {
    pub n_source: usize,
    pub pairs: Vec<(usize, usize)>,
    pub gamma: f64,
    pub lambda: f64,
    /// Treat the z-score mean and deviation as constants when differentiating.
    pub detach_stats: bool,
}

/// Per-pair `(mean, deviation)` of the candidate sets in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct NhsmStats<T> {
    pub source_to_target: Vec<(T, T)>,
    pub target_to_source: Vec<(T, T)>,
}

struct DirectionCache<T> {
    z: Array2<T>,
    stats: Vec<(T, T)>,
    lse: Array1<T>,
}

/// One direction: anchors `a` (rows of `anchors` picked by `idx`) against all
/// `candidates`; `pos[p]` is the positive's candidate index. `fixed` replaces
/// the per-pair statistics.
#[allow(clippy::too_many_arguments)]
fn direction<T: Real>(
    anchors: ArrayView2<'_, T>,
    candidates: ArrayView2<'_, T>,
    idx: &[usize],
    pos: &[usize],
    gamma: T,
    lambda: T,
    fixed: Option<&[(T, T)]>,
) -> Result<DirectionCache<T>> {
    let a = anchors.select(Axis(0), idx);
    let sims = a.dot(&candidates.t());
    let n = T::of_usize(candidates.nrows());
    let mut z = Array2::zeros(sims.raw_dim());
    let mut stats = Vec::with_capacity(idx.len());
    let mut lse = Array1::zeros(idx.len());
    for (p, row) in sims.outer_iter().enumerate() {
        let sp = row[pos[p]];
        let x = row.mapv(|s| gamma - sp + s);
        let (mu, sd) = match fixed {
            Some(f) => f[p],
            None => {
                let mu = x.sum() / n;
                let var = x.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / n;
                (mu, var.sqrt())
            }
        };
        if !(sd > T::zero()) || !sd.is_finite() {
            return Err(Error::DegenerateBatch);
        }
        let zr = x.mapv(|v| (v - mu) / sd);
        lse[p] = log_sum_exp(zr.view(), lambda);
        stats.push((mu, sd));
        z.row_mut(p).assign(&zr);
    }
    Ok(DirectionCache { z, stats, lse })
}

/// `log(sum(exp(lambda * z)))` with max subtraction.
pub fn log_sum_exp<T: Real>(z: ArrayView1<'_, T>, lambda: T) -> T {
    let m = z.iter().fold(T::neg_infinity(), |m, &v| m.max(lambda * v));
    let s: T = z.iter().map(|&v| (lambda * v - m).exp()).sum();
    m + s.ln()
}

/// Gradient of one direction with respect to `anchors` and `candidates`.
#[allow(clippy::too_many_arguments)]
fn direction_backward<T: Real>(
    anchors: ArrayView2<'_, T>,
    candidates: ArrayView2<'_, T>,
    idx: &[usize],
    pos: &[usize],
    cache: &DirectionCache<T>,
    lambda: T,
    upstream: T,
    detach: bool,
    d_anchors: &mut Array2<T>,
    d_candidates: &mut Array2<T>,
) {
    let n = T::of_usize(candidates.nrows());
    let mut d_sims = Array2::zeros(cache.z.raw_dim());
    for (p, z) in cache.z.outer_iter().enumerate() {
        // d lse / d z = lambda * softmax(lambda z)
        let m = z.iter().fold(T::neg_infinity(), |m, &v| m.max(lambda * v));
        let e = z.mapv(|v| {
            let a = lambda * v - m;
            // below this the weight is zero at any precision we use; letting
            // it through fills the gradient with subnormals
            if a < T::of(-60.0) {
                T::zero()
            } else {
                a.exp()
            }
        });
        let tot = e.sum();
        let g = e.mapv(|v| upstream * lambda * v / tot);
        let g_mean = g.sum() / n;
        let gz_mean = g.iter().zip(z.iter()).map(|(&a, &b)| a * b).sum::<T>() / n;
        let sd = cache.stats[p].1;
        let mut row = d_sims.row_mut(p);
        let mut dx_sum = T::zero();
        for k in 0..z.len() {
            let dx = if detach {
                g[k] / sd
            } else {
                (g[k] - g_mean - z[k] * gz_mean) / sd
            };
            dx_sum += dx;
            row[k] = dx;
        }
        row[pos[p]] -= dx_sum;
    }
    let a = anchors.select(Axis(0), idx);
    let da = d_sims.dot(&candidates);
    for (p, &i) in idx.iter().enumerate() {
        let mut r = d_anchors.row_mut(i);
        r += &da.row(p);
    }
    *d_candidates += &d_sims.t().dot(&a);
}

impl NhsmBatch {
    fn split<'v, T: Real>(&self, out: &'v Array2<T>) -> (ArrayView2<'v, T>, ArrayView2<'v, T>) {
        out.view().split_at(Axis(0), self.n_source)
    }

    fn sides(&self) -> (Vec<usize>, Vec<usize>) {
        self.pairs.iter().copied().unzip()
    }

    fn caches<T: Real>(
        &self,
        out: &Array2<T>,
        fixed: Option<&NhsmStats<T>>,
    ) -> Result<(DirectionCache<T>, DirectionCache<T>)> {
        self.check(out)?;
        if let Some(f) = fixed {
            let p = self.pairs.len();
            if f.source_to_target.len() != p || f.target_to_source.len() != p {
                return Err(Error::invalid("statistics do not match the pair count"));
            }
        }
        let (hs, ht) = self.split(out);
        let (ps, pt) = self.sides();
        let (g, l) = (T::of(self.gamma), T::of(self.lambda));
        let st = direction(
            hs,
            ht,
            &ps,
            &pt,
            g,
            l,
            fixed.map(|f| &f.source_to_target[..]),
        )?;
        let ts = direction(
            ht,
            hs,
            &pt,
            &ps,
            g,
            l,
            fixed.map(|f| &f.target_to_source[..]),
        )?;
        Ok((st, ts))
    }

    /// Loss value; errors on a degenerate candidate set.
    pub fn loss<T: Real>(&self, out: &Array2<T>) -> Result<T> {
        let (st, ts) = self.caches(out, None)?;
        Ok(st.lse.sum() + ts.lse.sum())
    }

    /// Candidate-set statistics at `out`.
    pub fn stats<T: Real>(&self, out: &Array2<T>) -> Result<NhsmStats<T>> {
        let (st, ts) = self.caches(out, None)?;
        Ok(NhsmStats {
            source_to_target: st.stats,
            target_to_source: ts.stats,
        })
    }

    /// Loss with every candidate set normalized by the given statistics.
    pub fn loss_with_stats<T: Real>(&self, out: &Array2<T>, stats: &NhsmStats<T>) -> Result<T> {
        let (st, ts) = self.caches(out, Some(stats))?;
        Ok(st.lse.sum() + ts.lse.sum())
    }

    fn check<T: Real>(&self, out: &Array2<T>) -> Result<()> {
        let n_t = out.nrows().saturating_sub(self.n_source);
        if self.n_source < 2 || n_t < 2 {
            return Err(Error::invalid(
                "NHSM needs at least two entities per side of the batch",
            ));
        }
        if self
            .pairs
            .iter()
            .any(|&(s, t)| s >= self.n_source || t >= n_t)
        {
            return Err(Error::invalid("seed pair outside the batch"));
        }
        Ok(())
    }

    /// Record the loss on `tape` as a function of the batch output `out`.
    pub fn record<'a, T: Real>(&'a self, tape: &mut Tape<'a, T>, out: Var) -> Result<Var> {
        self.loss(tape.value(out))?;
        Ok(tape.custom(&[out], NhsmOp { batch: self }))
    }
}

struct NhsmOp<'a> {
    batch: &'a NhsmBatch,
}

impl<T: Real> CustomOp<T> for NhsmOp<'_> {
    fn forward(&self, inputs: &[&Array2<T>]) -> Array2<T> {
        let v = self
            .batch
            .loss(inputs[0])
            .expect("validated before recording");
        Array2::from_elem((1, 1), v)
    }

    fn backward(&self, inputs: &[&Array2<T>], _: &Array2<T>, grad: &Array2<T>) -> Vec<Array2<T>> {
        let b = self.batch;
        let out = inputs[0];
        let (hs, ht) = b.split(out);
        let (ps, pt) = b.sides();
        let l = T::of(b.lambda);
        let up = grad[[0, 0]];
        let (st, ts) = b.caches(out, None).expect("validated");
        let mut ds = Array2::zeros(hs.raw_dim());
        let mut dt = Array2::zeros(ht.raw_dim());
        let d = b.detach_stats;
        direction_backward(hs, ht, &ps, &pt, &st, l, up, d, &mut ds, &mut dt);
        direction_backward(ht, hs, &pt, &ps, &ts, l, up, d, &mut dt, &mut ds);
        vec![ndarray::concatenate(Axis(0), &[ds.view(), dt.view()]).unwrap()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_candidate_closed_form() {
        let out = array![[0.3, 0.9], [-0.4, 0.2], [0.7, 0.1], [0.5, -0.6]];
        for lambda in [0.5, 1.0, 3.0, 20.0] {
            let b = NhsmBatch {
                n_source: 2,
                pairs: vec![(0, 0)],
                gamma: 1.0,
                lambda,
                detach_stats: true,
            };
            let l: f64 = b.loss(&out).unwrap();
            let expect = 2.0 * (2.0 * lambda.cosh()).ln();
            assert!((l - expect).abs() < 1e-9, "{l} vs {expect}");
        }
    }

    #[test]
    fn equal_similarities_are_degenerate() {
        let out = array![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]];
        let b = NhsmBatch {
            n_source: 2,
            pairs: vec![(0, 0)],
            gamma: 1.0,
            lambda: 1.0,
            detach_stats: true,
        };
        assert!(matches!(b.loss(&out), Err(Error::DegenerateBatch)));
    }

    #[test]
    fn positive_scaling_leaves_loss_unchanged() {
        let out = array![
            [0.3, 0.9, -0.2],
            [-0.4, 0.2, 0.8],
            [0.1, 0.1, 0.5],
            [0.7, 0.1, -0.3],
            [0.5, -0.6, 0.2],
            [0.0, 0.3, 0.9]
        ];
        let b = NhsmBatch {
            n_source: 3,
            pairs: vec![(0, 1), (2, 0)],
            gamma: 0.7,
            lambda: 4.0,
            detach_stats: true,
        };
        let base: f64 = b.loss(&out).unwrap();
        for c in [0.01f64, 0.5, 3.0, 100.0] {
            // similarities are bilinear, so scaling sides by sqrt(c) scales sims by c
            let scaled = &out * c.sqrt();
            let l: f64 = b.loss(&scaled).unwrap();
            assert!((l - base).abs() < 1e-9, "c={c}: {l} vs {base}");
        }
    }

    fn grad_of(b: &NhsmBatch, out: &Array2<f64>) -> Array2<f64> {
        let mut tape = Tape::new();
        let x = tape.leaf(out.clone());
        let l = b.record(&mut tape, x).unwrap();
        tape.backward(l).take(x).unwrap()
    }

    #[test]
    fn frozen_stats_reproduce_the_loss() {
        let out = array![
            [0.3, 0.9],
            [-0.4, 0.2],
            [0.1, 0.5],
            [0.7, 0.1],
            [0.5, -0.6],
            [0.0, 0.3]
        ];
        let b = NhsmBatch {
            n_source: 3,
            pairs: vec![(0, 1), (2, 0)],
            gamma: 1.0,
            lambda: 5.0,
            detach_stats: true,
        };
        let st = b.stats(&out).unwrap();
        let a: f64 = b.loss(&out).unwrap();
        let f = b.loss_with_stats(&out, &st).unwrap();
        assert!((a - f).abs() < 1e-12);
        let short = NhsmStats {
            source_to_target: vec![(0.0, 1.0)],
            target_to_source: vec![(0.0, 1.0)],
        };
        assert!(b.loss_with_stats(&out, &short).is_err());
    }

    #[test]
    fn descent_pulls_pairs_together() {
        // free embeddings: a few detached steps must raise every positive's rank
        let mut rng = crate::seeded_rng(3);
        let n = 12;
        let mut out =
            Array2::from_shape_fn((2 * n, 4), |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
        let b = NhsmBatch {
            n_source: n,
            pairs: (0..n).map(|i| (i, i)).collect(),
            gamma: 1.0,
            lambda: 10.0,
            detach_stats: true,
        };
        let before: f64 = b.loss(&out).unwrap();
        for _ in 0..200 {
            let g = grad_of(&b, &out);
            out.scaled_add(-0.01, &g);
        }
        assert!(b.loss(&out).unwrap() < before);
        let (hs, ht) = out.view().split_at(Axis(0), n);
        let sims = hs.dot(&ht.t());
        for i in 0..n {
            let best = (0..n)
                .max_by(|&a, &c| sims[[i, a]].total_cmp(&sims[[i, c]]))
                .unwrap();
            assert_eq!(best, i, "row {i}");
        }
    }
}
