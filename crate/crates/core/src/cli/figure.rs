//! Grayscale rendering of an affinity matrix with samples grouped by label.

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Sample order grouping equal labels, stable within a group.
pub fn label_order(labels: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    order
}

pub fn reorder(w: &DenseMatrix, order: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(order.len(), order.len(), |i, j| w[(order[i], order[j])])
}

/// Linear map of `[min, max]` onto `0..=255`. A constant matrix maps to 128.
pub fn to_gray(w: &DenseMatrix) -> Vec<u8> {
    let (lo, hi) = w
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(hi > lo) {
        return vec![128; w.as_slice().len()];
    }
    w.as_slice()
        .iter()
        .map(|&v| (255.0 * (v - lo) / (hi - lo)).round() as u8)
        .collect()
}

/// Binary PGM (P5) image bytes.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// The reordered matrix and its PGM rendering.
pub fn affinity_figure(w: &DenseMatrix, labels: &[usize]) -> Result<(DenseMatrix, Vec<u8>)> {
    if !w.is_square() || w.rows() != labels.len() {
        return Err(Error::contract(format!(
            "affinity is {}x{} but there are {} labels",
            w.rows(),
            w.cols(),
            labels.len()
        )));
    }
    let ordered = reorder(w, &label_order(labels));
    let pgm = encode_pgm(ordered.cols(), ordered.rows(), &to_gray(&ordered));
    Ok((ordered, pgm))
}

/// Mean gray level inside and outside the label blocks.
pub fn block_brightness(pixels: &[u8], labels: &[usize]) -> (f64, f64) {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let (mut intra, mut ni, mut inter, mut no) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..n {
        for j in 0..n {
            let p = f64::from(pixels[i * n + j]);
            if sorted[i] == sorted[j] {
                intra += p;
                ni += 1;
            } else {
                inter += p;
                no += 1;
            }
        }
    }
    let mean = |s: f64, k: usize| if k == 0 { 0.0 } else { s / k as f64 };
    (mean(intra, ni), mean(inter, no))
}
