//! Per-view similarity graphs learned over the rows of `U`.
//!
//! Row `j` of `W` solves
//!
//! ```text
//! min_w  Σ_k  λ₂/4 · ‖U(j,·) − U(k,·)‖² · w_k  +  λ₁ · w_k²
//! s.t.   w ≥ 0,  Σ_k w_k = 1,  support ⊆ the s nearest rows of j
//! ```
//!
//! which is the `W` block of the augmented Lagrangian (the trace term carries
//! a factor ½ from the Laplacian identity). Completing the square gives the
//! Euclidean projection of `−m` onto the simplex, `m_k = λ₂ d_k / (8λ₁)`.
//! Rows are stored as learned; symmetrization happens in [`laplacian`].

use crate::error::{Error, Result};
use crate::numerics::{squared_distance, DenseMatrix};

const ROW_SUM_TOL: f64 = 1e-9;

/// Row-stochastic weights with at most `neighbor_budget` nonzeros per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    weights: DenseMatrix,
    neighbor_budget: usize,
}

impl SimilarityGraph {
    /// An all-zero graph, used before the first row update.
    pub fn empty(n: usize, neighbor_budget: usize) -> Self {
        Self {
            weights: DenseMatrix::zeros(n, n),
            neighbor_budget,
        }
    }

    /// Wraps stored weights without re-validating them (checkpoint restore).
    pub(crate) fn from_parts(weights: DenseMatrix, neighbor_budget: usize) -> Self {
        Self {
            weights,
            neighbor_budget,
        }
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn neighbor_budget(&self) -> usize {
        self.neighbor_budget
    }

    pub fn n(&self) -> usize {
        self.weights.rows()
    }

    /// `(W + Wᵀ) / 2`.
    pub fn symmetrized(&self) -> DenseMatrix {
        self.weights
            .symmetrized()
            .expect("similarity graph is square")
    }
}

/// Graph Laplacian `Deg − (W + Wᵀ)/2` together with its degree vector.
#[derive(Debug, Clone)]
pub struct LaplacianView {
    pub laplacian: DenseMatrix,
    pub degree: Vec<f64>,
}

/// Squared Euclidean distances from row `j` of `u` to every row.
pub fn pairwise_row_distances(u: &DenseMatrix, j: usize) -> Result<Vec<f64>> {
    if j >= u.rows() {
        return Err(Error::contract(format!(
            "row index {j} out of range for {} rows",
            u.rows()
        )));
    }
    let anchor = u.row(j);
    Ok((0..u.rows())
        .map(|k| {
            if k == j {
                0.0
            } else {
                squared_distance(anchor, u.row(k))
            }
        })
        .collect())
}

/// Learns row `j` of `W` from the current `u`.
pub fn update_similarity_row(
    u: &DenseMatrix,
    j: usize,
    lambda1: f64,
    lambda2: f64,
    s: usize,
) -> Result<Vec<f64>> {
    let n = u.rows();
    if s == 0 || s >= n {
        return Err(Error::contract(format!(
            "neighbor count s={s} must satisfy 1 <= s < n={n}"
        )));
    }
    if !(lambda1 > 0.0) || lambda2 < 0.0 {
        return Err(Error::contract(format!(
            "row update needs lambda1 > 0 and lambda2 >= 0, got {lambda1}, {lambda2}"
        )));
    }
    let dist = pairwise_row_distances(u, j)?;
    let scale = lambda2 / (8.0 * lambda1);
    let mut candidates: Vec<(f64, usize)> = dist
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(k, &d)| (scale * d, k))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    candidates.truncate(s);

    // The projection is invariant to shifting m; anchoring at the nearest
    // neighbor keeps a lone survivor at exactly 1.
    let nearest = candidates[0].0;
    let m: Vec<f64> = candidates.iter().map(|c| c.0 - nearest).collect();
    let weights = project_negated_onto_simplex(&m);
    let mut row = vec![0.0; n];
    for (&(_, k), w) in candidates.iter().zip(weights) {
        row[k] = w;
    }
    Ok(row)
}

/// Euclidean projection of `−m` onto the probability simplex. `m` must be
/// sorted ascending. With every entry active this is exactly
/// `(1 + Σm)/s − m`; otherwise the largest `m` drop out and the level is
/// recomputed over the survivors.
fn project_negated_onto_simplex(m: &[f64]) -> Vec<f64> {
    let mut active = m.len();
    let mut level = 0.0;
    while active > 0 {
        let sum: f64 = m[..active].iter().sum();
        level = (1.0 + sum) / active as f64;
        if level - m[active - 1] > 0.0 {
            break;
        }
        active -= 1;
    }
    m.iter()
        .enumerate()
        .map(|(k, &mk)| if k < active { level - mk } else { 0.0 })
        .collect()
}

/// Refreshes every row of `W` from `u`.
pub fn learn_graph(
    u: &DenseMatrix,
    lambda1: f64,
    lambda2: f64,
    s: usize,
) -> Result<SimilarityGraph> {
    let rows = (0..u.rows())
        .map(|j| update_similarity_row(u, j, lambda1, lambda2, s))
        .collect::<Result<Vec<_>>>()?;
    assemble_graph(rows, s)
}

/// Stacks simplex rows into a graph after re-checking each row.
pub fn assemble_graph(rows: Vec<Vec<f64>>, neighbor_budget: usize) -> Result<SimilarityGraph> {
    let n = rows.len();
    for (j, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::contract(format!(
                "row {j} has length {}, expected {n}",
                row.len()
            )));
        }
        if let Some(k) = row.iter().position(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(Error::contract(format!(
                "row {j} entry {k} = {} outside [0, 1]",
                row[k]
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::contract(format!("row {j} sums to {sum}, not 1")));
        }
        let support = row.iter().filter(|&&w| w > 0.0).count();
        if support > neighbor_budget {
            return Err(Error::contract(format!(
                "row {j} has {support} nonzeros, budget is {neighbor_budget}"
            )));
        }
    }
    let weights = DenseMatrix::from_vec(n, n, rows.concat())?;
    Ok(SimilarityGraph {
        weights,
        neighbor_budget,
    })
}

pub fn laplacian(w: &SimilarityGraph) -> LaplacianView {
    laplacian_of(&w.symmetrized())
}

/// Laplacian of an already-symmetric weight matrix.
pub fn laplacian_of(sym: &DenseMatrix) -> LaplacianView {
    let n = sym.rows();
    let degree: Vec<f64> = (0..n).map(|i| sym.row(i).iter().sum()).collect();
    let mut laplacian = sym.scale(-1.0);
    for (i, &d) in degree.iter().enumerate() {
        laplacian[(i, i)] += d;
    }
    LaplacianView { laplacian, degree }
}

/// The `W`-row block of the augmented Lagrangian:
/// `Σ_k λ₂/4 · d_k w_k + λ₁ w_k²`.
pub fn row_block_objective(
    u: &DenseMatrix,
    j: usize,
    row: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    let dist = pairwise_row_distances(u, j)?;
    Ok(dist
        .iter()
        .zip(row)
        .map(|(&d, &w)| 0.25 * lambda2 * d * w + lambda1 * w * w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_u(n: usize, c: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn distances_degenerate_and_orthonormal() {
        let same = DenseMatrix::from_fn(4, 3, |_, j| j as f64);
        assert_eq!(pairwise_row_distances(&same, 2).unwrap(), vec![0.0; 4]);
        let basis = DenseMatrix::identity(2);
        assert_eq!(pairwise_row_distances(&basis, 0).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn distances_match_loop() {
        let u = random_u(10, 3, 2);
        for j in 0..10 {
            let d = pairwise_row_distances(&u, j).unwrap();
            for k in 0..10 {
                let mut s = 0.0;
                for c in 0..3 {
                    s += (u[(j, c)] - u[(k, c)]).powi(2);
                }
                assert!((d[k] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_rows_give_uniform_weights_on_lowest_indices() {
        let u = DenseMatrix::from_fn(8, 2, |_, _| 0.3);
        let row = update_similarity_row(&u, 4, 0.8, 0.7, 5).unwrap();
        assert_eq!(row, vec![0.2, 0.2, 0.2, 0.2, 0.0, 0.2, 0.0, 0.0]);
    }

    #[test]
    fn near_neighbor_dominates() {
        let u = DenseMatrix::from_rows(&[vec![0.0], vec![0.0], vec![50.0], vec![60.0]]).unwrap();
        let row = update_similarity_row(&u, 0, 0.8, 0.7, 2).unwrap();
        assert_eq!(row[1], 1.0);
        assert_eq!(row[2], 0.0);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_errors() {
        let u = random_u(4, 2, 1);
        assert!(update_similarity_row(&u, 0, 0.8, 0.7, 4).is_err());
        assert!(update_similarity_row(&u, 0, 0.8, 0.7, 0).is_err());
        assert!(update_similarity_row(&u, 0, 0.0, 0.7, 2).is_err());
    }

    #[test]
    fn two_nodes_single_neighbor() {
        let u = random_u(2, 2, 3);
        let g = learn_graph(&u, 0.8, 0.7, 1).unwrap();
        assert_eq!(g.weights().as_slice(), &[0.0, 1.0, 1.0, 0.0]);
        let l = laplacian(&g);
        assert_eq!(l.laplacian.as_slice(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn assemble_rejects_bad_rows() {
        assert!(assemble_graph(vec![vec![0.0, 0.5], vec![1.0, 0.0]], 1).is_err());
        assert!(assemble_graph(vec![vec![0.0, 1.0], vec![1.0, 0.0]], 1).is_ok());
        assert!(assemble_graph(vec![vec![0.5, 0.5], vec![1.0, 0.0]], 1).is_err());
        assert!(assemble_graph(vec![vec![-0.5, 1.5], vec![1.0, 0.0]], 2).is_err());
    }

    #[test]
    fn identical_rows_assemble_to_identical_rows() {
        let r = vec![0.0, 0.5, 0.5];
        let g = assemble_graph(vec![r.clone(), r.clone(), r.clone()], 2).unwrap();
        for j in 0..3 {
            assert_eq!(g.weights().row(j), r.as_slice());
        }
    }

    #[test]
    fn disconnected_blocks_have_one_zero_eigenvalue_each() {
        let u = DenseMatrix::from_fn(9, 1, |i, _| (i / 3) as f64 * 100.0);
        let g = learn_graph(&u, 0.8, 0.7, 2).unwrap();
        let l = laplacian(&g);
        let e = crate::numerics::sym_eig(&l.laplacian).unwrap();
        let zeros = e.values.iter().filter(|v| v.abs() < 1e-9).count();
        assert_eq!(zeros, 3);
        for i in 0..9 {
            for j in 0..9 {
                if i / 3 != j / 3 {
                    assert_eq!(l.laplacian[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn trace_identity_matches_double_sum() {
        let u = random_u(15, 3, 9);
        let g = learn_graph(&random_u(15, 2, 10), 0.8, 0.7, 4).unwrap();
        let l = laplacian(&g);
        let trace = u
            .t_matmul(&l.laplacian.matmul(&u).unwrap())
            .unwrap()
            .trace();
        let sym = g.symmetrized();
        let mut double_sum = 0.0;
        for j in 0..15 {
            for k in 0..15 {
                double_sum += squared_distance(u.row(j), u.row(k)) * sym[(j, k)];
            }
        }
        assert!((trace - 0.5 * double_sum).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn learned_rows_are_valid_and_rotation_invariant(
            seed in 0u64..1000,
            n in 3usize..30,
            s_frac in 0.0f64..1.0,
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let s = 1 + ((n - 2) as f64 * s_frac) as usize;
            let u = random_u(n, 2, seed);
            let g = learn_graph(&u, 0.8, 0.7, s).unwrap();
            let l = laplacian(&g);
            for j in 0..n {
                let row = g.weights().row(j);
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(row.iter().filter(|&&w| w > 0.0).count() <= s);
                prop_assert!(l.laplacian.row(j).iter().sum::<f64>().abs() < 1e-9);
            }
            prop_assert!(l.laplacian.asymmetry() < 1e-12);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lx = l.laplacian.mul_vec(&x).unwrap();
            prop_assert!(crate::numerics::dot(&x, &lx) >= -1e-9);

            let (c, s_) = (angle.cos(), angle.sin());
            let rot = DenseMatrix::from_rows(&[vec![c, -s_], vec![s_, c]]).unwrap();
            let rotated = u.matmul(&rot).unwrap();
            let g2 = learn_graph(&rotated, 0.8, 0.7, s).unwrap();
            prop_assert!(g.weights().sub(g2.weights()).unwrap().max_abs() < 1e-9);
        }
    }
}
