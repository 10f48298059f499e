//! Lloyd k-means with k-means++ seeding and restarts.
//!
//! Every returned clustering has all `c` clusters non-empty: an empty cluster
//! takes the point farthest from its current centroid (drawn from a cluster
//! that can spare one).

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{squared_distance, DenseMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KMeansOptions {
    pub max_iters: usize,
    pub restarts: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iters: 300,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centroids: DenseMatrix,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
}

/// Clusters the rows of `points` into `c` groups.
pub fn kmeans(points: &DenseMatrix, c: usize, seed: u64) -> Result<Vec<usize>> {
    Ok(kmeans_with(points, c, seed, KMeansOptions::default())?.labels)
}

pub fn kmeans_with(
    points: &DenseMatrix,
    c: usize,
    seed: u64,
    opts: KMeansOptions,
) -> Result<KMeansFit> {
    let n = points.rows();
    if n == 0 {
        return Err(Error::contract("kmeans on empty input"));
    }
    if c == 0 || c > n {
        return Err(Error::contract(format!(
            "kmeans needs 1 <= c <= n, got c={c} with n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansFit> = None;
    for _ in 0..opts.restarts.max(1) {
        let fit = lloyd(points, c, opts.max_iters, &mut rng);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(points: &DenseMatrix, c: usize, max_iters: usize, rng: &mut ChaCha8Rng) -> KMeansFit {
    let n = points.rows();
    let mut centroids = seed_plus_plus(points, c, rng);
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for i in 0..n {
            let nearest = nearest_centroid(points.row(i), &centroids).0;
            if labels[i] != nearest {
                labels[i] = nearest;
                changed = true;
            }
        }
        repair_empty(points, &mut labels, &centroids, c);
        centroids = compute_centroids(points, &labels, c);
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| squared_distance(points.row(i), centroids.row(labels[i])))
        .sum();
    KMeansFit {
        labels,
        centroids,
        inertia,
    }
}

fn seed_plus_plus(points: &DenseMatrix, c: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = points.rows();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut dist: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), points.row(chosen[0])))
        .collect();
    while chosen.len() < c {
        let next = match WeightedIndex::new(&dist) {
            Ok(w) => w.sample(rng),
            // All remaining mass is zero: duplicates only, pick any unused row.
            Err(_) => {
                let unused: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                unused[rng.gen_range(0..unused.len())]
            }
        };
        chosen.push(next);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(squared_distance(points.row(i), points.row(next)));
        }
    }
    DenseMatrix::from_fn(c, points.cols(), |k, j| points[(chosen[k], j)])
}

fn nearest_centroid(x: &[f64], centroids: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for k in 0..centroids.rows() {
        let d = squared_distance(x, centroids.row(k));
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn compute_centroids(points: &DenseMatrix, labels: &[usize], c: usize) -> DenseMatrix {
    let mut sums = DenseMatrix::zeros(c, points.cols());
    let mut counts = vec![0usize; c];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, &v) in sums.row_mut(l).iter_mut().zip(points.row(i)) {
            *s += v;
        }
    }
    for (k, &count) in counts.iter().enumerate() {
        if count > 0 {
            for s in sums.row_mut(k) {
                *s /= count as f64;
            }
        }
    }
    sums
}

fn repair_empty(points: &DenseMatrix, labels: &mut [usize], centroids: &DenseMatrix, c: usize) {
    loop {
        let mut counts = vec![0usize; c];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&k| k == 0) else {
            return;
        };
        let donor = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                let da = squared_distance(points.row(a), centroids.row(labels[a]));
                let db = squared_distance(points.row(b), centroids.row(labels[b]));
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("n >= c guarantees a cluster with a spare point");
        labels[donor] = empty;
    }
}

/// Within-cluster sum of squares of an arbitrary labeling.
pub fn within_cluster_ss(points: &DenseMatrix, labels: &[usize], c: usize) -> f64 {
    let centroids = compute_centroids(points, labels, c);
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| squared_distance(points.row(i), centroids.row(l)))
        .sum()
}
