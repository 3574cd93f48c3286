//! Row-major sorted coordinate matrices for similarity values.
//!
//! Duplicate coordinates are coalesced by summation on construction, which
//! is what doubles the value of pairs found in both k-NN directions.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const SPARSE_MAGIC: &[u8; 8] = b"KGSPCOO1";

/// `n_rows x n_cols` sparse matrix, coordinates unique and sorted row-major.
///
/// Construction drops exact zeros; [`SparseSimMatrix::map_values`] keeps the
/// support fixed even when a mapped value becomes zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSimMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSimMatrix {
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        SparseSimMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Sort, sum duplicates, drop zeros.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(u32, u32, f64)>,
    ) -> Result<Self> {
        for &(r, c, v) in &triplets {
            if r as usize >= n_rows || c as usize >= n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "({r}, {c}) outside a {n_rows} x {n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite("sparse similarity value"));
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        Ok(Self::from_sorted(n_rows, n_cols, triplets.into_iter()))
    }

    /// Like [`Self::from_triplets`], but a repeated coordinate is an error
    /// instead of being summed.
    pub fn from_unique_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(u32, u32, f64)>,
    ) -> Result<Self> {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        if let Some(w) = triplets
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::Collision {
                row: w[0].0 as usize,
                col: w[0].1 as usize,
            });
        }
        Self::from_triplets(n_rows, n_cols, triplets)
    }

    /// Sorted (duplicates allowed) input; sums duplicates and drops zeros.
    fn from_sorted(
        n_rows: usize,
        n_cols: usize,
        it: impl Iterator<Item = (u32, u32, f64)>,
    ) -> Self {
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut rows: Vec<u32> = Vec::new();
        let mut cols = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        for (r, c, v) in it {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut k = 0;
        for i in 0..rows.len() {
            if vals[i] != 0.0 {
                rows[k] = rows[i];
                cols[k] = cols[i];
                vals[k] = vals[i];
                k += 1;
            }
        }
        rows.truncate(k);
        cols.truncate(k);
        vals.truncate(k);
        for &r in &rows {
            row_ptr[r as usize + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSimMatrix {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Dense row-major values; zeros are dropped.
    pub fn from_dense(dense: ndarray::ArrayView2<'_, f64>) -> Self {
        let (n, m) = dense.dim();
        let it = dense
            .indexed_iter()
            .map(|((r, c), &v)| (r as u32, c as u32, v));
        Self::from_sorted(n, m, it)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Columns and values of row `r`.
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[range.clone()], &self.vals[range])
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let (cols, vals) = self.row(r);
        cols.binary_search(&(c as u32)).ok().map(|k| vals[k])
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (c, v) = self.row(r);
            c.iter().zip(v).map(move |(&c, &v)| (r, c as usize, v))
        })
    }

    pub fn transpose(&self) -> SparseSimMatrix {
        let mut t: Vec<(u32, u32, f64)> = self
            .iter()
            .map(|(r, c, v)| (c as u32, r as u32, v))
            .collect();
        t.sort_by_key(|&(r, c, _)| (r, c));
        Self::from_sorted(self.n_cols, self.n_rows, t.into_iter())
    }

    /// Coalesced sum.
    pub fn add(&self, other: &SparseSimMatrix) -> Result<SparseSimMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut merged = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.n_rows {
            let (ac, av) = self.row(r);
            let (bc, bv) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ac.len() || j < bc.len() {
                let take_a = j >= bc.len() || (i < ac.len() && ac[i] <= bc[j]);
                if take_a {
                    merged.push((r as u32, ac[i], av[i]));
                    i += 1;
                } else {
                    merged.push((r as u32, bc[j], bv[j]));
                    j += 1;
                }
            }
        }
        Ok(Self::from_sorted(
            self.n_rows,
            self.n_cols,
            merged.into_iter(),
        ))
    }

    /// Apply `f(row, col, value)` to every stored entry, keeping the support.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> SparseSimMatrix {
        let mut out = self.clone();
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.vals[k] = f(r, self.cols[k] as usize, self.vals[k]);
            }
        }
        out
    }

    pub fn to_dense(&self) -> ndarray::Array2<f64> {
        let mut d = ndarray::Array2::zeros((self.n_rows, self.n_cols));
        for (r, c, v) in self.iter() {
            d[[r, c]] = v;
        }
        d
    }

    /// Text format: `#shape\trows\tcols\tnnz` then `row\tcol\tvalue` lines.
    /// Values print in shortest round-trip form.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(
            w,
            "#shape\t{}\t{}\t{}",
            self.n_rows,
            self.n_cols,
            self.nnz()
        )
        .map_err(io)?;
        for (r, c, v) in self.iter() {
            writeln!(w, "{r}\t{c}\t{v}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_text(path: impl AsRef<Path>) -> Result<SparseSimMatrix> {
        let path = path.as_ref();
        let bad = |line: usize, m: &str| Error::Parse {
            path: path.to_owned(),
            line,
            message: m.to_owned(),
        };
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(f).lines();
        let header = lines
            .next()
            .ok_or_else(|| bad(1, "missing shape header"))?
            .map_err(|e| Error::io(path, e))?;
        let h: Vec<&str> = header.split('\t').collect();
        if h.len() != 4 || h[0] != "#shape" {
            return Err(bad(1, "expected #shape\\trows\\tcols\\tnnz"));
        }
        let num = |s: &str, line| s.parse::<usize>().map_err(|_| bad(line, "bad integer"));
        let (n_rows, n_cols, nnz) = (num(h[1], 1)?, num(h[2], 1)?, num(h[3], 1)?);
        let mut t = Vec::with_capacity(nnz);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(bad(i + 2, "expected row\\tcol\\tvalue"));
            }
            let v: f64 = f[2].parse().map_err(|_| bad(i + 2, "bad value"))?;
            t.push((num(f[0], i + 2)? as u32, num(f[1], i + 2)? as u32, v));
        }
        if t.len() != nnz {
            return Err(bad(1, "entry count disagrees with header"));
        }
        Self::from_stored(n_rows, n_cols, t, path)
    }

    /// Binary format, little-endian: magic `KGSPCOO1`, `rows`, `cols`, `nnz`
    /// as `u64`, then `nnz` row indices (`u32`), `nnz` column indices
    /// (`u32`) and `nnz` values (`f64`).
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        w.write_all(SPARSE_MAGIC).map_err(io)?;
        for v in [self.n_rows, self.n_cols, self.nnz()] {
            w.write_all(&(v as u64).to_le_bytes()).map_err(io)?;
        }
        for (r, _, _) in self.iter() {
            w.write_all(&(r as u32).to_le_bytes()).map_err(io)?;
        }
        for c in &self.cols {
            w.write_all(&c.to_le_bytes()).map_err(io)?;
        }
        for v in &self.vals {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<SparseSimMatrix> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut buf = Vec::new();
        File::open(path)
            .map_err(io)?
            .read_to_end(&mut buf)
            .map_err(io)?;
        let bad = |m: &str| Error::Format {
            path: path.to_owned(),
            message: m.to_owned(),
        };
        if buf.len() < 32 || &buf[..8] != SPARSE_MAGIC {
            return Err(bad("bad magic or truncated header"));
        }
        let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap()) as usize;
        let (n_rows, n_cols, nnz) = (u64_at(8), u64_at(16), u64_at(24));
        if buf.len() != 32 + nnz * 16 {
            return Err(bad("length disagrees with header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
        let (rb, cb, vb) = (32, 32 + 4 * nnz, 32 + 8 * nnz);
        let t = (0..nnz)
            .map(|k| {
                (
                    u32_at(rb + 4 * k),
                    u32_at(cb + 4 * k),
                    f64::from_le_bytes(buf[vb + 8 * k..vb + 8 * k + 8].try_into().unwrap()),
                )
            })
            .collect();
        Self::from_stored(n_rows, n_cols, t, path)
    }

    /// Rebuild from persisted entries without dropping stored zeros.
    fn from_stored(
        n_rows: usize,
        n_cols: usize,
        t: Vec<(u32, u32, f64)>,
        path: &Path,
    ) -> Result<SparseSimMatrix> {
        let bad = |m: &str| Error::Format {
            path: path.to_owned(),
            message: m.to_owned(),
        };
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut prev: Option<(u32, u32)> = None;
        for &(r, c, v) in &t {
            if r as usize >= n_rows || c as usize >= n_cols {
                return Err(bad("coordinate out of range"));
            }
            if prev.is_some_and(|p| p >= (r, c)) {
                return Err(bad("coordinates not strictly row-major"));
            }
            if !v.is_finite() {
                return Err(bad("non-finite value"));
            }
            prev = Some((r, c));
            row_ptr[r as usize + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseSimMatrix {
            n_rows,
            n_cols,
            row_ptr,
            cols: t.iter().map(|x| x.1).collect(),
            vals: t.iter().map(|x| x.2).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_sum_and_zeros_drop() {
        let m = SparseSimMatrix::from_triplets(
            2,
            3,
            vec![
                (1, 2, 1.0),
                (0, 1, 2.0),
                (1, 2, 0.5),
                (0, 0, 0.0),
                (0, 2, 1.0),
                (0, 2, -1.0),
            ],
        )
        .unwrap();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(0, 1, 2.0), (1, 2, 1.5)]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(SparseSimMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        assert!(SparseSimMatrix::from_triplets(2, 2, vec![(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn map_values_keeps_zero_entries() {
        let m = SparseSimMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, 2.0)]).unwrap();
        let z = m.map_values(|_, _, v| v - 1.0);
        assert_eq!(z.nnz(), 2);
        assert_eq!(z.get(0, 0), Some(0.0));
    }

    #[test]
    fn add_rejects_shape_mismatch() {
        let a = SparseSimMatrix::empty(2, 3);
        let b = SparseSimMatrix::empty(3, 2);
        assert!(a.add(&b).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = SparseSimMatrix> {
        (1usize..8, 1usize..8).prop_flat_map(|(n, m)| {
            proptest::collection::vec((0..n as u32, 0..m as u32, -5.0f64..5.0), 0..40)
                .prop_map(move |t| SparseSimMatrix::from_triplets(n, m, t).unwrap())
        })
    }

    proptest! {
        #[test]
        fn sparse_ops_agree_with_dense(a in arb_matrix(), seed in 0u64..1000) {
            let (n, m) = a.shape();
            let b = a.map_values(|r, c, v| v * ((r * 7 + c + seed as usize) % 3) as f64);
            let b = SparseSimMatrix::from_triplets(n, m, b.iter().map(|(r, c, v)| (r as u32, c as u32, v)).collect()).unwrap();
            let sum = a.add(&b).unwrap();
            let dense = a.to_dense() + b.to_dense();
            prop_assert!((sum.to_dense() - &dense).iter().all(|d| d.abs() < 1e-12));
            prop_assert_eq!(a.transpose().to_dense(), a.to_dense().t().to_owned());
            prop_assert_eq!(a.transpose().transpose(), a.clone());
        }

        #[test]
        fn files_round_trip_bitwise(a in arb_matrix()) {
            let dir = tempfile::tempdir().unwrap();
            let a = a.map_values(|r, c, v| if (r + c) % 4 == 0 { 0.0 } else { v / 3.0 });
            a.write_text(dir.path().join("m.tsv")).unwrap();
            a.write_binary(dir.path().join("m.bin")).unwrap();
            prop_assert_eq!(SparseSimMatrix::read_text(dir.path().join("m.tsv")).unwrap(), a.clone());
            prop_assert_eq!(SparseSimMatrix::read_binary(dir.path().join("m.bin")).unwrap(), a);
        }
    }
}
