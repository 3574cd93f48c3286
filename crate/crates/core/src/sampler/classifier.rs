//! Supervised labelers used to extend seed batch labels to every entity.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::config::ClassifierKind;
use crate::error::{Error, Result};

pub trait Classifier {
    /// Fit on `(train_x, train_y)` and predict a class in `0..n_classes` for
    /// every row of `x`. Every class must occur in `train_y`.
    fn fit_predict(
        &self,
        train_x: ArrayView2<'_, f64>,
        train_y: &[usize],
        n_classes: usize,
        x: ArrayView2<'_, f64>,
    ) -> Result<Vec<usize>>;
}

/// Validates inputs, handles the trivial cases and dispatches on `kind`.
pub fn train_classifier(
    kind: ClassifierKind,
    train_x: ArrayView2<'_, f64>,
    train_y: &[usize],
    n_classes: usize,
    x: ArrayView2<'_, f64>,
) -> Result<Vec<usize>> {
    match kind {
        ClassifierKind::LogReg => {
            LogisticRegression::default().fit_predict(train_x, train_y, n_classes, x)
        }
        ClassifierKind::Gbt => {
            GradientBoosting::default().fit_predict(train_x, train_y, n_classes, x)
        }
    }
}

/// Shared checks. `Ok(Some(_))` is a prediction that needs no model.
fn precheck(
    train_x: ArrayView2<'_, f64>,
    train_y: &[usize],
    n_classes: usize,
    x: ArrayView2<'_, f64>,
) -> Result<Option<Vec<usize>>> {
    if train_x.nrows() != train_y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} training rows, {} labels",
            train_x.nrows(),
            train_y.len()
        )));
    }
    if x.nrows() > 0 && x.ncols() != train_x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "trained on {} features, asked about {}",
            train_x.ncols(),
            x.ncols()
        )));
    }
    if n_classes == 0 {
        return Err(Error::invalid("classifier needs at least one class"));
    }
    let mut seen = vec![false; n_classes];
    for &y in train_y {
        if y >= n_classes {
            return Err(Error::invalid(format!("label {y} outside 0..{n_classes}")));
        }
        seen[y] = true;
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(Error::MissingClass(c));
    }
    if x.nrows() == 0 {
        return Ok(Some(Vec::new()));
    }
    if n_classes == 1 {
        return Ok(Some(vec![0; x.nrows()]));
    }
    Ok(None)
}

fn argmax_rows(scores: &Array2<f64>) -> Vec<usize> {
    scores
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
        .collect()
}

fn softmax_rows(logits: &mut Array2<f64>) {
    for mut r in logits.outer_iter_mut() {
        let mx = r.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        r.mapv_inplace(|v| (v - mx).exp());
        let s = r.sum();
        r /= s;
    }
}

/// Multinomial logistic regression, full-batch Adam from a zero start.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
}

impl Default for LogisticRegression {
    fn default() -> Self {
        LogisticRegression {
            epochs: 300,
            lr: 0.05,
            l2: 1e-4,
        }
    }
}

impl Classifier for LogisticRegression {
    fn fit_predict(
        &self,
        train_x: ArrayView2<'_, f64>,
        train_y: &[usize],
        n_classes: usize,
        x: ArrayView2<'_, f64>,
    ) -> Result<Vec<usize>> {
        if let Some(p) = precheck(train_x, train_y, n_classes, x)? {
            return Ok(p);
        }
        let (n, d) = train_x.dim();
        let mut w = Array2::<f64>::zeros((d, n_classes));
        let mut b = Array1::<f64>::zeros(n_classes);
        let mut onehot = Array2::<f64>::zeros((n, n_classes));
        for (i, &y) in train_y.iter().enumerate() {
            onehot[[i, y]] = 1.0;
        }
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut mw, mut vw) = (w.clone(), w.clone());
        let (mut mb, mut vb) = (b.clone(), b.clone());
        for step in 1..=self.epochs {
            let mut p = train_x.dot(&w) + &b;
            softmax_rows(&mut p);
            let g = (p - &onehot) / n as f64;
            let gw = train_x.t().dot(&g) + &w * self.l2;
            let gb = g.sum_axis(Axis(0));
            let c1 = 1.0 - b1.powi(step as i32);
            let c2 = 1.0 - b2.powi(step as i32);
            ndarray::Zip::from(&mut w)
                .and(&mut mw)
                .and(&mut vw)
                .and(&gw)
                .for_each(|w, m, v, &g| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *w -= self.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
            ndarray::Zip::from(&mut b)
                .and(&mut mb)
                .and(&mut vb)
                .and(&gb)
                .for_each(|w, m, v, &g| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *w -= self.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
        }
        Ok(argmax_rows(&(x.dot(&w) + &b)))
    }
}

/// Softmax gradient boosting over depth-limited regression trees on
/// quantile-binned features.
#[derive(Debug, Clone)]
pub struct GradientBoosting {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub max_bins: usize,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    pub min_child_weight: f64,
}

impl Default for GradientBoosting {
    fn default() -> Self {
        GradientBoosting {
            rounds: 30,
            learning_rate: 0.3,
            max_depth: 3,
            max_bins: 32,
            lambda: 1.0,
            min_child_weight: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
enum TreeNode {
    Leaf(f64),
    Split {
        feature: usize,
        /// Rows with bin `<= bin` go left.
        bin: u8,
        left: usize,
        right: usize,
    },
}

struct Binned {
    /// Row-major `n x d`.
    bins: Vec<u8>,
    d: usize,
}

impl Binned {
    fn get(&self, row: usize, f: usize) -> u8 {
        self.bins[row * self.d + f]
    }
}

/// Per-feature upper cut points from the training distribution.
fn cut_points(x: ArrayView2<'_, f64>, max_bins: usize) -> Vec<Vec<f64>> {
    x.axis_iter(Axis(1))
        .map(|col| {
            let mut v: Vec<f64> = col.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            if v.len() <= max_bins {
                // midpoints between consecutive distinct values
                v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
            } else {
                (1..max_bins)
                    .map(|q| v[q * v.len() / max_bins])
                    .collect::<Vec<_>>()
            }
        })
        .collect()
}

fn bin_rows(x: ArrayView2<'_, f64>, cuts: &[Vec<f64>]) -> Binned {
    let d = x.ncols();
    let mut bins = Vec::with_capacity(x.nrows() * d);
    for row in x.outer_iter() {
        for (f, &v) in row.iter().enumerate() {
            bins.push(cuts[f].partition_point(|&c| c < v) as u8);
        }
    }
    Binned { bins, d }
}

impl GradientBoosting {
    fn grow(
        &self,
        data: &Binned,
        n_bins: &[usize],
        grad: &[f64],
        hess: &[f64],
        rows: Vec<usize>,
        depth: usize,
        nodes: &mut Vec<TreeNode>,
    ) -> usize {
        let g: f64 = rows.iter().map(|&i| grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| hess[i]).sum();
        let id = nodes.len();
        nodes.push(TreeNode::Leaf(-g / (h + self.lambda) * self.learning_rate));
        if depth == self.max_depth || rows.len() < 2 {
            return id;
        }
        let parent = g * g / (h + self.lambda);
        let mut best: Option<(f64, usize, u8)> = None;
        let mut hg = Vec::new();
        let mut hh = Vec::new();
        for f in 0..data.d {
            let nb = n_bins[f];
            if nb < 2 {
                continue;
            }
            hg.clear();
            hg.resize(nb, 0.0);
            hh.clear();
            hh.resize(nb, 0.0);
            for &i in &rows {
                let b = data.get(i, f) as usize;
                hg[b] += grad[i];
                hh[b] += hess[i];
            }
            let (mut gl, mut hl) = (0.0, 0.0);
            for b in 0..nb - 1 {
                gl += hg[b];
                hl += hh[b];
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.min_child_weight || hr < self.min_child_weight {
                    continue;
                }
                let gain = gl * gl / (hl + self.lambda) + gr * gr / (hr + self.lambda) - parent;
                if gain > 1e-12 && best.is_none_or(|(bg, _, _)| gain > bg) {
                    best = Some((gain, f, b as u8));
                }
            }
        }
        let Some((_, feature, bin)) = best else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| data.get(i, feature) <= bin);
        let left = self.grow(data, n_bins, grad, hess, l, depth + 1, nodes);
        let right = self.grow(data, n_bins, grad, hess, r, depth + 1, nodes);
        nodes[id] = TreeNode::Split {
            feature,
            bin,
            left,
            right,
        };
        id
    }
}

fn eval_tree(nodes: &[TreeNode], data: &Binned, row: usize) -> f64 {
    let mut at = 0;
    loop {
        match nodes[at] {
            TreeNode::Leaf(v) => return v,
            TreeNode::Split {
                feature,
                bin,
                left,
                right,
            } => {
                at = if data.get(row, feature) <= bin {
                    left
                } else {
                    right
                }
            }
        }
    }
}

impl Classifier for GradientBoosting {
    fn fit_predict(
        &self,
        train_x: ArrayView2<'_, f64>,
        train_y: &[usize],
        n_classes: usize,
        x: ArrayView2<'_, f64>,
    ) -> Result<Vec<usize>> {
        if let Some(p) = precheck(train_x, train_y, n_classes, x)? {
            return Ok(p);
        }
        let max_bins = self.max_bins.clamp(2, 256);
        let cuts = cut_points(train_x, max_bins);
        let n_bins: Vec<usize> = cuts.iter().map(|c| c.len() + 1).collect();
        let train = bin_rows(train_x, &cuts);
        let test = bin_rows(x, &cuts);
        let n = train_x.nrows();
        let mut f_train = Array2::<f64>::zeros((n, n_classes));
        let mut f_test = Array2::<f64>::zeros((x.nrows(), n_classes));
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for _ in 0..self.rounds {
            let mut p = f_train.clone();
            softmax_rows(&mut p);
            for c in 0..n_classes {
                for i in 0..n {
                    let y = if train_y[i] == c { 1.0 } else { 0.0 };
                    grad[i] = p[[i, c]] - y;
                    hess[i] = (p[[i, c]] * (1.0 - p[[i, c]])).max(1e-6);
                }
                let mut nodes = Vec::new();
                self.grow(
                    &train,
                    &n_bins,
                    &grad,
                    &hess,
                    (0..n).collect(),
                    0,
                    &mut nodes,
                );
                for i in 0..n {
                    f_train[[i, c]] += eval_tree(&nodes, &train, i);
                }
                for i in 0..x.nrows() {
                    f_test[[i, c]] += eval_tree(&nodes, &test, i);
                }
            }
        }
        Ok(argmax_rows(&f_test))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::kmeans::tests::blobs;

    fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
        pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
    }

    #[test]
    fn separable_blobs_fit() {
        let (x, y) = blobs(
            &[&[0.0, 0.0, 0.0], &[3.0, 0.0, 1.0], &[0.0, 3.0, -1.0]],
            50,
            7,
        );
        for kind in [ClassifierKind::LogReg, ClassifierKind::Gbt] {
            let pred = train_classifier(kind, x.view(), &y, 3, x.view()).unwrap();
            assert!(accuracy(&pred, &y) >= 0.95, "{kind:?}");
        }
    }

    #[test]
    fn generalizes_to_fresh_points() {
        let centers: &[&[f64]] = &[&[0.0, 0.0], &[2.0, 2.0]];
        let (x, y) = blobs(centers, 40, 1);
        let (xt, yt) = blobs(centers, 40, 2);
        for kind in [ClassifierKind::LogReg, ClassifierKind::Gbt] {
            let pred = train_classifier(kind, x.view(), &y, 2, xt.view()).unwrap();
            assert!(accuracy(&pred, &yt) >= 0.95, "{kind:?}");
        }
    }

    #[test]
    fn single_class_and_empty_input() {
        let (x, _) = blobs(&[&[0.0, 0.0]], 5, 3);
        let y = vec![0; 5];
        let pred = train_classifier(ClassifierKind::LogReg, x.view(), &y, 1, x.view()).unwrap();
        assert_eq!(pred, vec![0; 5]);
        let empty = Array2::<f64>::zeros((0, 2));
        let pred = train_classifier(ClassifierKind::Gbt, x.view(), &y, 1, empty.view()).unwrap();
        assert!(pred.is_empty());
    }

    #[test]
    fn absent_class_is_reported() {
        let (x, _) = blobs(&[&[0.0, 0.0]], 4, 3);
        let y = vec![0, 2, 0, 2];
        match train_classifier(ClassifierKind::LogReg, x.view(), &y, 3, x.view()) {
            Err(Error::MissingClass(1)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shape_checks() {
        let x = Array2::<f64>::zeros((3, 2));
        assert!(train_classifier(ClassifierKind::LogReg, x.view(), &[0, 1], 2, x.view()).is_err());
        let wide = Array2::<f64>::zeros((1, 3));
        assert!(
            train_classifier(ClassifierKind::LogReg, x.view(), &[0, 1, 0], 2, wide.view()).is_err()
        );
    }
}
