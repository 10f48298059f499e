//! Final partitioning by normalized cut, and the concatenated-features
//! baseline.

use crate::data::MultiViewDataset;
use crate::error::{Error, Result};
use crate::numerics::{kmeans, squared_distance, sym_eig, DenseMatrix};
use crate::solver::{run, IterationLog, SolveOutput, SolverConfig};

const DEGREE_FLOOR: f64 = 1e-12;
const BASELINE_NEIGHBORS: usize = 5;

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    /// Normalized cut of the aggregated graph.
    pub labels: Vec<usize>,
    /// k-means on the rows of the aggregated `U`.
    pub labels_u: Vec<usize>,
    pub u_aggregate: DenseMatrix,
    pub w_aggregate: DenseMatrix,
    pub per_view_u: Vec<DenseMatrix>,
    pub log: IterationLog,
}

/// Entry-wise sums; the graph sum is symmetrized.
pub fn aggregate(
    u_list: &[DenseMatrix],
    w_list: &[DenseMatrix],
) -> Result<(DenseMatrix, DenseMatrix)> {
    let (Some(u0), Some(w0)) = (u_list.first(), w_list.first()) else {
        return Err(Error::contract("aggregate needs at least one view"));
    };
    let mut u = DenseMatrix::zeros(u0.rows(), u0.cols());
    for m in u_list {
        u.add_scaled(1.0, m)?;
    }
    let mut w = DenseMatrix::zeros(w0.rows(), w0.cols());
    for m in w_list {
        w.add_scaled(1.0, m)?;
    }
    Ok((u, w.symmetrized()?))
}

/// `I − Deg^{-1/2} W Deg^{-1/2}`, degrees floored at 1e-12.
pub fn normalized_laplacian(w: &DenseMatrix) -> Result<DenseMatrix> {
    if !w.is_square() {
        return Err(Error::contract("affinity matrix must be square"));
    }
    if w.asymmetry() > 1e-9 * w.max_abs().max(1.0) {
        return Err(Error::contract("affinity matrix must be symmetric"));
    }
    if w.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::contract("affinity matrix must be nonnegative"));
    }
    if w.as_slice().iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateGraph);
    }
    let n = w.rows();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / w.row(i).iter().sum::<f64>().max(DEGREE_FLOOR).sqrt())
        .collect();
    let mut l = DenseMatrix::from_fn(n, n, |i, j| -inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]);
    l.add_diagonal(1.0);
    // exact symmetry for the eigensolver
    l.symmetrized()
}

/// Spectral embedding: the `c` eigenvectors of smallest eigenvalue of the
/// normalized Laplacian, sign-fixed, with rows scaled to unit length.
pub fn spectral_embedding(w: &DenseMatrix, c: usize) -> Result<DenseMatrix> {
    let n = w.rows();
    if c == 0 || c > n {
        return Err(Error::contract(format!(
            "cannot embed {n} samples into {c} dimensions"
        )));
    }
    let eig = sym_eig(&normalized_laplacian(w)?)?;
    let mut emb = eig.vectors.leading_columns(c);
    for k in 0..c {
        let col = emb.column(k);
        let pivot = col.iter().copied().fold(
            0.0f64,
            |best, v| if v.abs() > best.abs() { v } else { best },
        );
        if pivot < 0.0 {
            for i in 0..n {
                emb[(i, k)] = -emb[(i, k)];
            }
        }
    }
    for i in 0..n {
        let row = emb.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(emb)
}

pub fn normalized_cut(w: &DenseMatrix, c: usize, seed: u64) -> Result<Vec<usize>> {
    if c == 1 {
        normalized_laplacian(w)?;
        return Ok(vec![0; w.rows()]);
    }
    kmeans(&spectral_embedding(w, c)?, c, seed)
}

/// Runs the solver on `dataset`, cuts the summed graph, and clusters the
/// summed `U`.
pub fn cluster(dataset: &MultiViewDataset, cfg: &SolverConfig) -> Result<ClusteringResult> {
    partition(run(dataset, cfg)?, cfg)
}

/// Cuts the summed graph of a finished solve and clusters its summed `U`.
pub fn partition(out: SolveOutput, cfg: &SolverConfig) -> Result<ClusteringResult> {
    let labels = normalized_cut(&out.w_sum, cfg.clusters, cfg.seed)?;
    let labels_u = kmeans(&out.u_sum, cfg.clusters, cfg.seed)?;
    let per_view_u = out.per_view_u();
    Ok(ClusteringResult {
        labels,
        labels_u,
        u_aggregate: out.u_sum,
        w_aggregate: out.w_sum,
        per_view_u,
        log: out.log,
    })
}

/// Gaussian-kernel affinity on stacked features: bandwidth is the median
/// pairwise distance, each sample keeps its 5 nearest neighbors, and the
/// result is symmetrized.
pub fn concat_affinity(dataset: &MultiViewDataset) -> Result<DenseMatrix> {
    let n = dataset.n_samples();
    let total: usize = dataset.dims().iter().sum();
    let mut points = DenseMatrix::zeros(n, total);
    let mut offset = 0;
    for v in dataset.views() {
        for f in 0..v.rows() {
            for i in 0..n {
                points[(i, offset + f)] = v[(f, i)];
            }
        }
        offset += v.rows();
    }
    let sq = DenseMatrix::from_fn(n, n, |i, j| squared_distance(points.row(i), points.row(j)));
    let mut dists: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| sq[(i, j)].sqrt())
        .collect();
    let sigma = median(&mut dists).filter(|&s| s > 0.0).unwrap_or(1.0);

    let k = BASELINE_NEIGHBORS.min(n.saturating_sub(1));
    let mut knn = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| sq[(i, a)].total_cmp(&sq[(i, b)]).then(a.cmp(&b)));
        for &j in order.iter().take(k) {
            knn[(i, j)] = (-sq[(i, j)] / (2.0 * sigma * sigma)).exp();
        }
    }
    knn.symmetrized()
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    })
}

pub fn concat_spectral_baseline(
    dataset: &MultiViewDataset,
    c: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    normalized_cut(&concat_affinity(dataset)?, c, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::accuracy;

    fn blocks(sizes: &[usize], intra: f64, inter: f64) -> (DenseMatrix, Vec<usize>) {
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

    #[test]
    fn disconnected_cliques() {
        let (w, truth) = blocks(&[4, 6], 1.0, 0.0);
        let labels = normalized_cut(&w, 2, 0).unwrap();
        assert_eq!(accuracy(&labels, &truth).unwrap(), 1.0);
    }

    #[test]
    fn single_cluster_and_degenerate() {
        let (w, _) = blocks(&[5], 1.0, 0.0);
        assert_eq!(normalized_cut(&w, 1, 0).unwrap(), vec![0; 5]);
        assert!(matches!(
            normalized_cut(&DenseMatrix::zeros(4, 4), 2, 0),
            Err(Error::DegenerateGraph)
        ));
    }

    #[test]
    fn laplacian_spectrum_in_range() {
        let (w, _) = blocks(&[10, 12, 8], 0.9, 0.05);
        let eig = sym_eig(&normalized_laplacian(&w).unwrap()).unwrap();
        assert!(eig
            .values
            .iter()
            .all(|&v| (-1e-9..=2.0 + 1e-9).contains(&v)));
    }

    #[test]
    fn aggregate_identical_views_doubles() {
        let u = DenseMatrix::from_fn(4, 2, |i, j| (i + j) as f64);
        let w = DenseMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 0.25 });
        let (su, sw) = aggregate(&[u.clone(), u.clone()], &[w.clone(), w.clone()]).unwrap();
        assert_eq!(su, u.scale(2.0));
        assert_eq!(sw, w.scale(2.0));
        assert!(aggregate(&[u.clone(), DenseMatrix::zeros(3, 2)], &[w]).is_err());
    }
}
