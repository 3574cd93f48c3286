//! Kuhn–Munkres maximum-weight perfect matching, O(n^3).

use ndarray::ArrayView2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `columns[r]` is the column matched to row `r`.
    pub columns: Vec<usize>,
    pub total: f64,
}

/// Maximum total-similarity perfect matching of a square matrix.
pub fn hungarian(sim: ArrayView2<'_, f64>) -> Result<Assignment> {
    let (n, m) = sim.dim();
    if n != m {
        return Err(Error::invalid(format!(
            "hungarian needs a square matrix, got {n} x {m}"
        )));
    }
    if sim.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("hungarian input"));
    }
    if n == 0 {
        return Ok(Assignment {
            columns: vec![],
            total: 0.0,
        });
    }
    // Shortest augmenting path with potentials on cost = -sim, 1-based.
    let cost = |i: usize, j: usize| -sim[[i - 1, j - 1]];
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut columns = vec![0; n];
    for j in 1..=n {
        columns[p[j] - 1] = j - 1;
    }
    let total = columns.iter().enumerate().map(|(r, &c)| sim[[r, c]]).sum();
    Ok(Assignment { columns, total })
}

/// Exhaustive search over all `n!` permutations; oracle for small `n`.
pub fn brute_force_assignment(sim: ArrayView2<'_, f64>) -> Assignment {
    let n = sim.nrows();
    assert_eq!(n, sim.ncols());
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = Assignment {
        columns: perm.clone(),
        total: f64::NEG_INFINITY,
    };
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let score = |p: &[usize]| {
        p.iter()
            .enumerate()
            .map(|(r, &col)| sim[[r, col]])
            .sum::<f64>()
    };
    let consider = |p: &[usize], best: &mut Assignment| {
        let s = score(p);
        if s > best.total {
            *best = Assignment {
                columns: p.to_vec(),
                total: s,
            };
        }
    };
    consider(&perm, &mut best);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            consider(&perm, &mut best);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}
