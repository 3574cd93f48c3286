use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::AlignmentSet;

/// Batch label per entity on each side. Batch `i` is the pair of sets
/// `{s : source_labels[s] = i}` and `{t : target_labels[t] = i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchAssignment {
    k: usize,
    source_labels: Vec<usize>,
    target_labels: Vec<usize>,
}

impl BatchAssignment {
    pub fn new(k: usize, source_labels: Vec<usize>, target_labels: Vec<usize>) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("batch count must be at least 1"));
        }
        if let Some(&l) = source_labels
            .iter()
            .chain(&target_labels)
            .find(|&&l| l >= k)
        {
            return Err(Error::invalid(format!(
                "batch label {l} out of range 0..{k}"
            )));
        }
        Ok(BatchAssignment {
            k,
            source_labels,
            target_labels,
        })
    }

    /// Everything in batch 0.
    pub fn single(n_source: usize, n_target: usize) -> Self {
        BatchAssignment {
            k: 1,
            source_labels: vec![0; n_source],
            target_labels: vec![0; n_target],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn source_labels(&self) -> &[usize] {
        &self.source_labels
    }

    pub fn target_labels(&self) -> &[usize] {
        &self.target_labels
    }

    /// Materialized `(B_s^i, B_t^i)` for `i in 0..k`, members in ascending id order.
    pub fn batches(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut out = vec![(Vec::new(), Vec::new()); self.k];
        for (e, &l) in self.source_labels.iter().enumerate() {
            out[l].0.push(e);
        }
        for (e, &l) in self.target_labels.iter().enumerate() {
            out[l].1.push(e);
        }
        out
    }

    /// Entities per batch on (source, target).
    pub fn histogram(&self) -> (Vec<usize>, Vec<usize>) {
        let mut s = vec![0; self.k];
        let mut t = vec![0; self.k];
        self.source_labels.iter().for_each(|&l| s[l] += 1);
        self.target_labels.iter().for_each(|&l| t[l] += 1);
        (s, t)
    }

    /// Roles of the two sides exchanged.
    pub fn swapped(&self) -> BatchAssignment {
        BatchAssignment {
            k: self.k,
            source_labels: self.target_labels.clone(),
            target_labels: self.source_labels.clone(),
        }
    }

    pub fn write_side(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        for (e, l) in labels.iter().enumerate() {
            writeln!(w, "{e}\t{l}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads `entity-id\tbatch-id` lines; every id in `0..n` must appear once.
    pub fn read_side(path: impl AsRef<Path>) -> Result<Vec<usize>> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse = || -> Option<(usize, usize)> {
                let (a, b) = line.trim().split_once('\t')?;
                Some((a.parse().ok()?, b.parse().ok()?))
            };
            pairs.push(parse().ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: "expected entity-id<TAB>batch-id".into(),
            })?);
        }
        let mut labels = vec![usize::MAX; pairs.len()];
        for (e, l) in pairs {
            if e >= labels.len() || labels[e] != usize::MAX {
                return Err(Error::Format {
                    path: path.to_owned(),
                    message: format!("entity id {e} missing, repeated or out of range"),
                });
            }
            labels[e] = l;
        }
        Ok(labels)
    }
}

/// Fraction of reference pairs whose two members share a batch.
pub fn overlap(assignment: &BatchAssignment, reference: &AlignmentSet) -> f64 {
    if reference.is_empty() {
        return 1.0;
    }
    let hit = reference
        .pairs()
        .iter()
        .filter(|&&(s, t)| assignment.source_labels[s] == assignment.target_labels[t])
        .count();
    hit as f64 / reference.len() as f64
}
