//! Binary snapshot of every view's solver state.
//!
//! Layout, all integers `u64` and all floats `f64`, little-endian:
//!
//! ```text
//! "MOVCLUST1"
//! view count, iteration counter
//! per view: d, n, c, neighbor budget
//! per view: X, U, D, E, G, W, K1, K2, K3 (row-major), mu, converged (0 or 1)
//! ```

use std::fs;
use std::path::Path;

use super::state::ViewState;
use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;
use crate::numerics::DenseMatrix;

pub const CHECKPOINT_MAGIC: &[u8; 9] = b"MOVCLUST1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Outer iterations completed.
    pub iteration: usize,
    pub views: Vec<ViewState>,
}

pub fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    fs::write(path, encode(ck)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

fn encode(ck: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    let put = |out: &mut Vec<u8>, v: u64| out.extend_from_slice(&v.to_le_bytes());
    put(&mut out, ck.views.len() as u64);
    put(&mut out, ck.iteration as u64);
    for v in &ck.views {
        put(&mut out, v.dim() as u64);
        put(&mut out, v.n() as u64);
        put(&mut out, v.clusters() as u64);
        put(&mut out, v.w.neighbor_budget() as u64);
    }
    for v in &ck.views {
        for m in [
            &v.x,
            &v.u,
            &v.d,
            &v.e,
            &v.g,
            v.w.weights(),
            &v.k1,
            &v.k2,
            &v.k3,
        ] {
            for x in m.as_slice() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend_from_slice(&v.mu.to_le_bytes());
        out.extend_from_slice(&(if v.converged { 1.0f64 } else { 0.0 }).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, len: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<usize> {
        let b = self.take(8)?;
        let v = u64::from_le_bytes(b.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::Checkpoint(format!("size {v} too large")))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<DenseMatrix> {
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Checkpoint("matrix size overflows".into()))?;
        let raw = self.take(len.saturating_mul(8))?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        DenseMatrix::from_vec(rows, cols, data)
            .map_err(|e| Error::Checkpoint(format!("bad matrix: {e}")))
    }
}

fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(CHECKPOINT_MAGIC.len())? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("missing MOVCLUST1 header".into()));
    }
    let count = r.u64()?;
    let iteration = r.u64()?;
    let mut shapes = Vec::new();
    for _ in 0..count {
        shapes.push((r.u64()?, r.u64()?, r.u64()?, r.u64()?));
    }
    let mut views = Vec::with_capacity(shapes.len());
    for (d, n, c, s) in shapes {
        let x = r.matrix(d, n)?;
        let u = r.matrix(n, c)?;
        let dict = r.matrix(d, c)?;
        let e = r.matrix(d, n)?;
        let g = r.matrix(n, c)?;
        let w = r.matrix(n, n)?;
        let k1 = r.matrix(d, n)?;
        let k2 = r.matrix(n, c)?;
        let k3 = r.matrix(d, c)?;
        let mu = r.f64()?;
        let converged = r.f64()? != 0.0;
        views.push(ViewState {
            x,
            u,
            d: dict,
            e,
            g,
            w: SimilarityGraph::from_parts(w, s),
            k1,
            k2,
            k3,
            mu,
            converged,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(Checkpoint { iteration, views })
}
