use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::MultiViewDataset;
use crate::error::{Error, Result};
use crate::numerics::{dot, DenseMatrix};

/// Planted-cluster multi-view data.
///
/// Every view gets its own `c` centers at the vertices of a regular simplex
/// with edge length `separation`, randomly oriented in `R^{d_i}`, plus unit
/// Gaussian spread. All views share one balanced, shuffled label vector.
pub fn synth_multiview(
    n: usize,
    c: usize,
    dims: &[usize],
    separation: f64,
    seed: u64,
) -> Result<MultiViewDataset> {
    if dims.is_empty() {
        return Err(Error::contract("synth_multiview needs at least one view"));
    }
    if c == 0 || n < c {
        return Err(Error::contract(format!(
            "need 1 <= c <= n, got c={c}, n={n}"
        )));
    }
    if !(separation >= 0.0) {
        return Err(Error::contract("separation must be non-negative"));
    }
    if let Some(&d) = dims.iter().find(|&&d| d + 1 < c) {
        return Err(Error::contract(format!(
            "a {c}-vertex simplex does not fit in {d} dimensions"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    labels.shuffle(&mut rng);

    let simplex = simplex_coordinates(c, separation);
    let mut views = Vec::with_capacity(dims.len());
    for &d in dims {
        let basis = random_orthonormal_columns(d, c.saturating_sub(1), &mut rng);
        let centers = if c > 1 {
            simplex.matmul_t(&basis)?
        } else {
            DenseMatrix::zeros(1, d)
        };
        let x = DenseMatrix::from_fn(d, n, |f, i| {
            let z: f64 = rng.sample(StandardNormal);
            centers[(labels[i], f)] + z
        });
        views.push(x);
    }
    MultiViewDataset::unnamed(views, Some(labels))
}

/// `c x (c-1)` coordinates of a centered regular simplex with the given edge.
fn simplex_coordinates(c: usize, edge: f64) -> DenseMatrix {
    if c <= 1 {
        return DenseMatrix::zeros(c, 0);
    }
    // Scaled standard basis vertices, centered, then expressed in an
    // orthonormal basis of their (c-1)-dimensional span.
    let vertices =
        DenseMatrix::from_fn(c, c, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / c as f64);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..c {
        let mut v = vertices.row(i).to_vec();
        for b in &basis {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-9 && basis.len() < c - 1 {
            basis.push(v.iter().map(|x| x / norm).collect());
        }
    }
    let r = edge / std::f64::consts::SQRT_2;
    DenseMatrix::from_fn(c, c - 1, |i, k| r * dot(vertices.row(i), &basis[k]))
}

/// `d x k` matrix with orthonormal columns drawn from Gaussian noise.
fn random_orthonormal_columns(d: usize, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for b in &cols {
            let p = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            cols.push(v.iter().map(|x| x / norm).collect());
        }
    }
    DenseMatrix::from_fn(d, k, |i, j| cols[j][i])
}

/// Adds a uniform draw from `[lo, hi]` to exactly `⌊fraction · rows · cols⌋`
/// distinct entries chosen uniformly at random.
pub fn inject_sparse_noise(
    x: &DenseMatrix,
    fraction: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<DenseMatrix> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::contract(format!(
            "noise fraction {fraction} outside [0, 1]"
        )));
    }
    if !(lo < hi) {
        return Err(Error::contract(format!(
            "noise range [{lo}, {hi}] is empty"
        )));
    }
    let total = x.rows() * x.cols();
    let count = (fraction * total as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = index::sample(&mut rng, total, count);
    let mut out = x.clone();
    let data = out.as_mut_slice();
    for pos in positions.iter() {
        data[pos] += rng.gen_range(lo..=hi);
    }
    Ok(out)
}

/// Corrupts every view; view `i` draws from seed `seed + i`.
pub fn corrupt_dataset(
    ds: &MultiViewDataset,
    fraction: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<MultiViewDataset> {
    let views = ds
        .views()
        .iter()
        .enumerate()
        .map(|(i, v)| inject_sparse_noise(v, fraction, lo, hi, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    ds.with_views(views)
}
