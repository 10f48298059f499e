//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Eigenvalues in ascending order with matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Full spectrum of a symmetric matrix.
///
/// Symmetry is checked relative to the largest entry; the strictly upper
/// triangle is what the rotations actually read.
pub fn sym_eig(a: &DenseMatrix) -> Result<EigenPair> {
    if !a.is_square() {
        return Err(Error::contract(format!(
            "sym_eig needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.max_abs().max(1.0);
    if a.asymmetry() > SYMMETRY_TOL * scale {
        return Err(Error::contract(format!(
            "sym_eig input is not symmetric (max asymmetry {:e})",
            a.asymmetry()
        )));
    }
    if n == 0 {
        return Ok(EigenPair {
            values: vec![],
            vectors: DenseMatrix::zeros(0, 0),
        });
    }

    let mut m = a.clone();
    // Rows of `vt` are the eigenvectors; keeps rotation updates contiguous.
    let mut vt = DenseMatrix::identity(n);
    let total = a.frobenius_norm();

    for sweep in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&m);
        if off <= f64::EPSILON * total || off == 0.0 {
            break;
        }
        // Skip tiny pivots in the first sweeps to avoid wasted rotations.
        let threshold = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= threshold {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                if apq == 0.0 {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut vt, p, q, c, s, t, apq);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, k| vt[(order[k], r)]);
    Ok(EigenPair { values, vectors })
}

#[allow(clippy::too_many_arguments)]
fn rotate(
    m: &mut DenseMatrix,
    vt: &mut DenseMatrix,
    p: usize,
    q: usize,
    c: f64,
    s: f64,
    t: f64,
    apq: f64,
) {
    let n = m.rows();
    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        m[(k, p)] = new_p;
        m[(p, k)] = new_p;
        m[(k, q)] = new_q;
        m[(q, k)] = new_q;
    }
    let data = vt.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * n);
    let row_p = &mut lo[p * n..(p + 1) * n];
    let row_q = &mut hi[..n];
    for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let a = *vp;
        let b = *vq;
        *vp = c * a - s * b;
        *vq = s * a + c * b;
    }
}

fn off_diagonal_norm(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for (j, v) in m.row(i).iter().enumerate() {
            if i != j {
                s += v * v;
            }
        }
    }
    s.sqrt()
}
