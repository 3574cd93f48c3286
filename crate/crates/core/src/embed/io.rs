//! Binary embedding files.
//!
//! Layout, all little-endian: 8-byte magic `KGEMB001`, `rows: u64`,
//! `dim: u64`, `n_source: u64`, then `rows * dim` `f32` values row-major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::EmbeddingMatrix;
use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 8] = b"KGEMB001";

pub fn write_embeddings(emb: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(EMBEDDING_MAGIC).map_err(io)?;
    for v in [emb.rows(), emb.dim(), emb.n_source()] {
        w.write_all(&(v as u64).to_le_bytes()).map_err(io)?;
    }
    for &x in emb.as_array().iter() {
        w.write_all(&x.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != EMBEDDING_MAGIC {
        return Err(Error::Format {
            path: path.to_owned(),
            message: "bad magic".into(),
        });
    }
    let mut header = [0u64; 3];
    for h in &mut header {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(io)?;
        *h = u64::from_le_bytes(b);
    }
    let [rows, dim, n_source] = header.map(|h| h as usize);
    let mut raw = vec![0u8; rows * dim * 4];
    r.read_exact(&mut raw).map_err(io)?;
    let vals: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let data = Array2::from_shape_vec((rows, dim), vals).map_err(|e| Error::Format {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    EmbeddingMatrix::new(data, n_source)
}
