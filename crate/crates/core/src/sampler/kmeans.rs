use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

const MAX_RESEEDS: usize = 10;

#[derive(Debug, Clone)]
pub struct KMeans {
    pub labels: Vec<usize>,
    /// Mean of the points carrying each label.
    pub centroids: Array2<f64>,
    pub iterations: usize,
}

/// Lloyd iterations from a k-means++ start. Stops after `max_iter` rounds or
/// once no centroid moves by `tol` or more (euclidean).
pub fn kmeans<R: Rng>(
    points: ArrayView2<'_, f64>,
    k: usize,
    max_iter: usize,
    tol: f64,
    rng: &mut R,
) -> Result<KMeans> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "k-means with k = {k} on {n} points"
        )));
    }
    let sq_norms: Array1<f64> = points.map_axis(Axis(1), |r| r.dot(&r));
    let mut centroids = plus_plus_init(points, &sq_norms, k, rng);
    let mut labels = vec![0; n];
    let mut dist = vec![0.0; n];
    let mut reseeds = 0;
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        assign(points, &sq_norms, &centroids, &mut labels, &mut dist);
        fill_empty(points, &mut centroids, &mut labels, &mut dist, &mut reseeds)?;
        let next = means(points, &labels, k);
        let shift = (&next - &centroids)
            .outer_iter()
            .map(|d| d.dot(&d).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < tol {
            break;
        }
    }
    assign(points, &sq_norms, &centroids, &mut labels, &mut dist);
    fill_empty(points, &mut centroids, &mut labels, &mut dist, &mut reseeds)?;
    let centroids = means(points, &labels, k);
    Ok(KMeans {
        labels,
        centroids,
        iterations,
    })
}

fn plus_plus_init<R: Rng>(
    points: ArrayView2<'_, f64>,
    sq_norms: &Array1<f64>,
    k: usize,
    rng: &mut R,
) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points, sq_norms, i, centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, sq_norms, i, centroids.row(c)));
        }
    }
    centroids
}

fn sq_dist(
    points: ArrayView2<'_, f64>,
    sq_norms: &Array1<f64>,
    i: usize,
    c: ndarray::ArrayView1<'_, f64>,
) -> f64 {
    (sq_norms[i] - 2.0 * points.row(i).dot(&c) + c.dot(&c)).max(0.0)
}

fn assign(
    points: ArrayView2<'_, f64>,
    sq_norms: &Array1<f64>,
    centroids: &Array2<f64>,
    labels: &mut [usize],
    dist: &mut [f64],
) {
    let cross = points.dot(&centroids.t());
    let c_norms: Vec<f64> = centroids.outer_iter().map(|c| c.dot(&c)).collect();
    for (i, row) in cross.outer_iter().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (j, &x) in row.iter().enumerate() {
            let d = (sq_norms[i] - 2.0 * x + c_norms[j]).max(0.0);
            if d < best.0 {
                best = (d, j);
            }
        }
        labels[i] = best.1;
        dist[i] = best.0;
    }
}

/// Moves the point farthest from its centroid into each empty cluster.
fn fill_empty(
    points: ArrayView2<'_, f64>,
    centroids: &mut Array2<f64>,
    labels: &mut [usize],
    dist: &mut [f64],
    reseeds: &mut usize,
) -> Result<()> {
    let k = centroids.nrows();
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return Ok(());
        };
        *reseeds += 1;
        let far = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        match far {
            Some(i) if *reseeds <= MAX_RESEEDS => {
                centroids.row_mut(empty).assign(&points.row(i));
                labels[i] = empty;
                dist[i] = 0.0;
            }
            _ => return Err(Error::EmptyCluster(empty)),
        }
    }
}

fn means(points: ArrayView2<'_, f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let mut sums = Array2::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (row, &l) in points.outer_iter().zip(labels) {
        sums.row_mut(l).scaled_add(1.0, &row);
        counts[l] += 1;
    }
    for (mut row, &c) in sums.outer_iter_mut().zip(&counts) {
        if c > 0 {
            row /= c as f64;
        }
    }
    sums
}
