use super::updates::orthonormalize_u;
use super::SolverConfig;
use crate::data::inject_sparse_noise;
use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;
use crate::numerics::{sym_eig, DenseMatrix};

/// Fraction of `E` entries seeded with noise at initialization.
const INIT_NOISE_FRACTION: f64 = 0.2;
const INIT_NOISE_RANGE: (f64, f64) = (-5.0, 5.0);

/// All per-view solver variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewState {
    /// Features, `d x n`.
    pub x: DenseMatrix,
    /// Clustered orthogonal projection, `n x c`.
    pub u: DenseMatrix,
    /// Dictionary, `d x c`.
    pub d: DenseMatrix,
    /// Sparse noise, `d x n`.
    pub e: DenseMatrix,
    /// Nonnegative copy of `u`, `n x c`.
    pub g: DenseMatrix,
    pub w: SimilarityGraph,
    /// Multiplier for `X = DUᵀ + E`, `d x n`.
    pub k1: DenseMatrix,
    /// Multiplier for `U = G`, `n x c`.
    pub k2: DenseMatrix,
    /// Multiplier for `D = XU`, `d x c`.
    pub k3: DenseMatrix,
    pub mu: f64,
    pub converged: bool,
}

impl ViewState {
    pub fn n(&self) -> usize {
        self.x.cols()
    }

    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn clusters(&self) -> usize {
        self.u.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite()
            && self.d.is_finite()
            && self.e.is_finite()
            && self.g.is_finite()
            && self.k1.is_finite()
            && self.k2.is_finite()
            && self.k3.is_finite()
            && self.mu.is_finite()
    }
}

/// Initial state for one view.
///
/// `U` starts from the leading `c` eigenvectors of `XᵀX`, snapped to scaled
/// cluster indicators. `D = XU` so the dictionary constraint holds at the
/// start; `W`, `G` and the multipliers are zero; `E` carries sparse uniform
/// noise on 20% of its entries.
pub fn init_view(x: &DenseMatrix, cfg: &SolverConfig, seed: u64) -> Result<ViewState> {
    let (d, n) = x.shape();
    let c = cfg.clusters;
    if n < c {
        return Err(Error::contract(format!(
            "view has {n} samples, fewer than {c} clusters"
        )));
    }
    if !x.is_finite() {
        return Err(Error::contract("view features contain non-finite values"));
    }
    let spectral = leading_gram_eigenvectors(x, c)?;
    let u = orthonormalize_u(&spectral, c, seed)?;
    let dict = x.matmul(&u)?;
    let (lo, hi) = INIT_NOISE_RANGE;
    let e = inject_sparse_noise(&DenseMatrix::zeros(d, n), INIT_NOISE_FRACTION, lo, hi, seed)?;
    Ok(ViewState {
        x: x.clone(),
        g: DenseMatrix::zeros(n, c),
        w: SimilarityGraph::empty(n, cfg.neighbors),
        k1: DenseMatrix::zeros(d, n),
        k2: DenseMatrix::zeros(n, c),
        k3: DenseMatrix::zeros(d, c),
        u,
        d: dict,
        e,
        mu: cfg.mu0,
        converged: false,
    })
}

/// Top-`c` eigenvectors of `XᵀX` (`n x c`, largest eigenvalue first).
///
/// When the feature dimension is below `n` the small `d x d` problem `XXᵀ`
/// is solved instead and lifted with `Xᵀv / σ`.
fn leading_gram_eigenvectors(x: &DenseMatrix, c: usize) -> Result<DenseMatrix> {
    let (d, n) = x.shape();
    if d < n && d >= c {
        let small = x.matmul_t(x)?;
        let eig = sym_eig(&small)?;
        let top = eig.values[d - 1].max(0.0);
        let usable = (0..c).all(|k| eig.values[d - 1 - k] > 1e-12 * top && top > 0.0);
        if usable {
            let mut v = DenseMatrix::zeros(d, c);
            for k in 0..c {
                let src = d - 1 - k;
                let norm = eig.values[src].sqrt();
                for f in 0..d {
                    v[(f, k)] = eig.vectors[(f, src)] / norm;
                }
            }
            return x.t_matmul(&v);
        }
    }
    let gram = x.t_matmul(x)?;
    let eig = sym_eig(&gram)?;
    Ok(DenseMatrix::from_fn(n, c, |i, k| {
        eig.vectors[(i, n - 1 - k)]
    }))
}
