//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use movclust::cli::protocol::{NoiseSpec, Protocol};
use movclust::data::{synth_multiview, MultiViewDataset};
use movclust::graph::learn_graph;
use movclust::solver::{SolverConfig, ViewState};
use movclust::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ACCEPTANCE_SEED: u64 = 1;
pub const ACCEPTANCE_TRIALS: usize = 10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Three views (10, 15, 20 dims), n = 300, c = 3, separation 20.
pub fn acceptance_raw() -> MultiViewDataset {
    synth_multiview(300, 3, &[10, 15, 20], 20.0, ACCEPTANCE_SEED).unwrap()
}

/// One planted 15-dim view used twice; the protocol corrupts each copy with
/// its own noise draw.
pub fn two_view_raw() -> MultiViewDataset {
    let one = synth_multiview(300, 3, &[15], 20.0, ACCEPTANCE_SEED).unwrap();
    let v = one.views()[0].clone();
    MultiViewDataset::unnamed(vec![v.clone(), v], one.truth().map(<[usize]>::to_vec)).unwrap()
}

/// 20% of entries, additive uniform noise on [-5, 5], then normalization.
pub fn acceptance_protocol() -> Protocol {
    Protocol {
        noise: NoiseSpec::SPARSE_20,
        normalize: true,
        base_seed: ACCEPTANCE_SEED,
    }
}

pub fn acceptance_config() -> SolverConfig {
    SolverConfig {
        lambda1: 0.8,
        lambda2: 0.7,
        beta: 0.25,
        neighbors: 5,
        ..SolverConfig::with_clusters(3)
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

/// A view state with every variable random (G nonnegative, W a valid graph).
pub fn random_state(rng: &mut ChaCha8Rng, d: usize, n: usize, c: usize) -> ViewState {
    let s = 3.min(n - 1);
    let w = learn_graph(&random_matrix(rng, n, c, 1.0), 0.8, 0.7, s).unwrap();
    ViewState {
        x: random_matrix(rng, d, n, 1.0),
        u: random_matrix(rng, n, c, 1.0),
        d: random_matrix(rng, d, c, 1.0),
        e: random_matrix(rng, d, n, 0.5),
        g: random_matrix(rng, n, c, 1.0).map(f64::abs),
        w,
        k1: random_matrix(rng, d, n, 1.0),
        k2: random_matrix(rng, n, c, 1.0),
        k3: random_matrix(rng, d, c, 1.0),
        mu: rng.gen_range(0.1..5.0),
        converged: false,
    }
}

/// Unit-Frobenius-norm random direction scaled to `size`.
pub fn random_direction(rng: &mut ChaCha8Rng, rows: usize, cols: usize, size: f64) -> DenseMatrix {
    let m = random_matrix(rng, rows, cols, 1.0);
    let norm = m.frobenius_norm();
    m.scale(size / norm)
}

pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols(), b.rows());
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        let mut s = 0.0;
        for k in 0..a.cols() {
            s += a[(i, k)] * b[(k, j)];
        }
        s
    })
}

pub fn naive_sub(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] - b[(i, j)])
}

pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Gaussian elimination with partial pivoting, one right-hand side column
/// at a time.
pub fn gauss_solve(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let mut out = DenseMatrix::zeros(n, b.cols());
    for col in 0..b.cols() {
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = a.row(i).to_vec();
                r.push(b[(i, col)]);
                r
            })
            .collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
                .unwrap();
            m.swap(k, p);
            for i in (k + 1)..n {
                let f = m[i][k] / m[k][k];
                for j in k..=n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = m[i][n];
            for j in (i + 1)..n {
                s -= m[i][j] * out[(j, col)];
            }
            out[(i, col)] = s / m[i][i];
        }
    }
    out
}

/// Squared distances from row `j` to every row, by explicit loops.
pub fn loop_distances(u: &DenseMatrix, j: usize) -> Vec<f64> {
    (0..u.rows())
        .map(|k| {
            let mut s = 0.0;
            for c in 0..u.cols() {
                s += (u[(j, c)] - u[(k, c)]).powi(2);
            }
            s
        })
        .collect()
}

/// The `s` nearest rows to `j` (self excluded), ties to the lower index.
pub fn nearest_support(dist: &[f64], j: usize, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).filter(|&k| k != j).collect();
    idx.sort_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap().then(a.cmp(&b)));
    idx.truncate(s);
    idx
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projected-gradient minimizer of `Σ_k a_k w_k + λ₁ w_k²` over the simplex
/// supported on `support`.
pub fn simplex_qp_oracle(a: &[f64], lambda1: f64, support: &[usize], steps: usize) -> Vec<f64> {
    let s = support.len();
    let mut w = vec![1.0 / s as f64; s];
    let step = 0.5 / (2.0 * lambda1);
    for _ in 0..steps {
        let moved: Vec<f64> = (0..s)
            .map(|i| w[i] - step * (a[support[i]] + 2.0 * lambda1 * w[i]))
            .collect();
        let next = project_simplex(&moved);
        let change = next
            .iter()
            .zip(&w)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        w = next;
        if change < 1e-15 {
            break;
        }
    }
    let mut full = vec![0.0; a.len()];
    for (i, &k) in support.iter().enumerate() {
        full[k] = w[i];
    }
    full
}

/// Grid minimizer of `|e| + μ/2 (e − a)²`, refined three times.
pub fn scalar_prox_grid(a: f64, mu: f64) -> f64 {
    let f = |e: f64| e.abs() + 0.5 * mu * (e - a).powi(2);
    let (mut lo, mut hi) = (-(a.abs() + 1.0), a.abs() + 1.0);
    let points = 2001;
    let mut best = 0.0;
    for _ in 0..4 {
        let h = (hi - lo) / (points - 1) as f64;
        let mut best_val = f64::INFINITY;
        for i in 0..points {
            let e = lo + h * i as f64;
            let v = f(e);
            if v < best_val {
                best_val = v;
                best = e;
            }
        }
        lo = best - 2.0 * h;
        hi = best + 2.0 * h;
    }
    best
}

/// Block-constant affinity with a zero diagonal, and its block labels.
pub fn planted_blocks(sizes: &[usize], intra: f64, inter: f64) -> (DenseMatrix, Vec<usize>) {
    let truth: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = truth.len();
    let w = DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else if truth[i] == truth[j] {
            intra
        } else {
            inter
        }
    });
    (w, truth)
}
