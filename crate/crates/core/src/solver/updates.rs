//! Closed-form block updates for one view.

use super::state::ViewState;
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::graph::laplacian;
use crate::numerics::{
    cholesky, dot, hungarian, kmeans, soft_threshold_matrix, solve_general, solve_spd, sym_eig,
    DenseMatrix,
};

/// Result of a `U` solve before orthonormalization.
#[derive(Debug, Clone)]
pub struct USolve {
    pub u: DenseMatrix,
    /// Largest diagonal shift added to make a system solvable (0 if none).
    pub regularization: f64,
    /// Largest relative residual of the defining linear systems.
    pub system_residual: f64,
}

/// `(A, S)` with `A U = S` the full-matrix `U` system:
///
/// ```text
/// A = λ₂L + (μ + β(|V|−1))I − μXᵀX
/// S = βΣ_{j≠i}U_j + (K1ᵀ − μUDᵀ − μEᵀ)D + XᵀK3 + μXᵀXU
/// ```
///
/// `U` on the right-hand side is the current iterate.
pub fn u_full_system(
    view: &ViewState,
    others: &[&DenseMatrix],
    cfg: &SolverConfig,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = view.n();
    let mu = view.mu;
    let gram = view.x.t_matmul(&view.x)?;
    let lap = laplacian(&view.w).laplacian;

    let mut a = lap.scale(cfg.lambda2);
    a.add_scaled(-mu, &gram)?;
    a.add_diagonal(mu + cfg.beta * others.len() as f64);

    let mut s = DenseMatrix::zeros(n, view.clusters());
    for other in others {
        s.add_scaled(cfg.beta, other)?;
    }
    let dtd = view.d.t_matmul(&view.d)?;
    s.add_scaled(1.0, &view.k1.t_matmul(&view.d)?)?;
    s.add_scaled(-mu, &view.u.matmul(&dtd)?)?;
    s.add_scaled(-mu, &view.e.t_matmul(&view.d)?)?;
    s.add_scaled(1.0, &view.x.t_matmul(&view.k3)?)?;
    s.add_scaled(mu, &gram.matmul(&view.u)?)?;
    Ok((a, s))
}

pub fn update_u_full(
    view: &ViewState,
    others: &[&DenseMatrix],
    cfg: &SolverConfig,
) -> Result<USolve> {
    let (a, s) = u_full_system(view, others, cfg)?;
    let (u, regularization) = match solve_general(&a, &s) {
        Ok(u) => (u, 0.0),
        Err(Error::Singular { .. }) => {
            let eps = 1e-8 * (1.0 + a.max_abs());
            let mut shifted = a.clone();
            shifted.add_diagonal(eps);
            (solve_general(&shifted, &s)?, eps)
        }
        Err(e) => return Err(e),
    };
    let residual = a.matmul(&u)?.sub(&s)?.frobenius_norm() / s.frobenius_norm().max(1e-300);
    Ok(USolve {
        u,
        regularization,
        system_residual: if regularization > 0.0 {
            f64::NAN
        } else {
            residual
        },
    })
}

/// `(M, b)` with row `l` of `U` solving `M xᵀ = bᵀ`:
///
/// ```text
/// M = rI + DᵀD,   r = 1 + μ + Σ_k (λ₂L(k,l) − μ(XᵀX)(k,l))
/// b = X(·,l)ᵀK3 + μ(G(l,·) − E(·,l)ᵀD) − K2(l,·) − K1(·,l)ᵀD + βΣ_{j≠i}U_j(l,·)
/// ```
pub fn u_row_system(
    view: &ViewState,
    l: usize,
    others: &[&DenseMatrix],
    cfg: &SolverConfig,
) -> Result<(DenseMatrix, Vec<f64>)> {
    let lap = laplacian(&view.w).laplacian;
    let col_sum = column_sum(&view.x);
    row_system_with(view, l, others, cfg, &lap, &col_sum)
}

fn column_sum(x: &DenseMatrix) -> Vec<f64> {
    (0..x.rows()).map(|f| x.row(f).iter().sum()).collect()
}

fn row_system_with(
    view: &ViewState,
    l: usize,
    others: &[&DenseMatrix],
    cfg: &SolverConfig,
    lap: &DenseMatrix,
    feature_sum: &[f64],
) -> Result<(DenseMatrix, Vec<f64>)> {
    let n = view.n();
    if l >= n {
        return Err(Error::contract(format!("row {l} out of range for n={n}")));
    }
    let c = view.clusters();
    let mu = view.mu;
    let x_l = view.x.column(l);
    let lap_col: f64 = (0..n).map(|k| lap[(k, l)]).sum();
    // Σ_k (XᵀX)(k,l) = x_lᵀ Σ_k x_k
    let gram_col = dot(&x_l, feature_sum);
    let r = 1.0 + mu + cfg.lambda2 * lap_col - mu * gram_col;
    let mut m = view.d.t_matmul(&view.d)?;
    m.add_diagonal(r);

    let e_l = view.e.column(l);
    let k1_l = view.k1.column(l);
    let mut b = vec![0.0; c];
    for (k, bk) in b.iter_mut().enumerate() {
        let dcol = view.d.column(k);
        let k3col = view.k3.column(k);
        *bk = dot(&x_l, &k3col) + mu * (view.g[(l, k)] - dot(&e_l, &dcol))
            - view.k2[(l, k)]
            - dot(&k1_l, &dcol);
        for other in others {
            *bk += cfg.beta * other[(l, k)];
        }
    }
    Ok((m, b))
}

/// Solves `M x = b` for symmetric `M`, shifting it to positive definite
/// when needed. Returns the solution and the shift applied.
fn solve_row(m: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let rhs = DenseMatrix::from_vec(b.len(), 1, b.to_vec())?;
    if cholesky(m).is_ok() {
        return Ok((solve_spd(m, &rhs)?.into_vec(), 0.0));
    }
    let smallest = sym_eig(m)?.values[0];
    let eps = 1e-8 + smallest.abs();
    let mut shifted = m.clone();
    shifted.add_diagonal(eps);
    Ok((solve_spd(&shifted, &rhs)?.into_vec(), eps))
}

/// Row `l` of the row-wise `U` update and the diagonal shift it needed.
pub fn update_u_row(
    view: &ViewState,
    l: usize,
    others: &[&DenseMatrix],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64)> {
    let (m, b) = u_row_system(view, l, others, cfg)?;
    solve_row(&m, &b)
}

/// Every row of `U` by the row-wise rule. Rows read only the frozen state,
/// so the order of evaluation does not matter.
pub fn update_u_rows(
    view: &ViewState,
    others: &[&DenseMatrix],
    cfg: &SolverConfig,
) -> Result<USolve> {
    let n = view.n();
    let lap = laplacian(&view.w).laplacian;
    let feature_sum = column_sum(&view.x);
    let mut u = DenseMatrix::zeros(n, view.clusters());
    let mut regularization: f64 = 0.0;
    let mut system_residual: f64 = 0.0;
    for l in 0..n {
        let (m, b) = row_system_with(view, l, others, cfg, &lap, &feature_sum)?;
        let (row, eps) = solve_row(&m, &b)?;
        if eps == 0.0 {
            let mx = m.mul_vec(&row)?;
            let res: f64 = mx
                .iter()
                .zip(&b)
                .map(|(p, q)| (p - q).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            system_residual = system_residual.max(res / scale);
        }
        regularization = regularization.max(eps);
        u.set_row(l, &row);
    }
    Ok(USolve {
        u,
        regularization,
        system_residual,
    })
}

/// Snaps `u` to scaled cluster indicators: k-means on its rows, then
/// `U(j,k) = 1/√|C_k|` for members of cluster `k`.
///
/// Clusters are placed in the columns of `u` that hold most of their mass.
pub fn orthonormalize_u(u: &DenseMatrix, c: usize, seed: u64) -> Result<DenseMatrix> {
    Ok(orthonormalize_u_labeled(u, c, seed, u)?.0)
}

/// As [`orthonormalize_u`], with columns assigned to maximize the mass each
/// cluster has in the matching column of `reference` (an assignment
/// problem). Passing the previous iterate keeps column identity stable
/// across iterations. Also returns the column label of every row.
pub fn orthonormalize_u_labeled(
    u: &DenseMatrix,
    c: usize,
    seed: u64,
    reference: &DenseMatrix,
) -> Result<(DenseMatrix, Vec<usize>)> {
    let n = u.rows();
    if c == 0 || c > n {
        return Err(Error::contract(format!(
            "cannot form {c} clusters from {n} rows"
        )));
    }
    if reference.rows() != n {
        return Err(Error::contract("reference must have one row per sample"));
    }
    let clusters = kmeans(u, c, seed)?;
    let mut sizes = vec![0usize; c];
    let mut cost = DenseMatrix::zeros(c, c);
    for (j, &k) in clusters.iter().enumerate() {
        sizes[k] += 1;
        for col in 0..c.min(reference.cols()) {
            cost[(k, col)] -= reference[(j, col)];
        }
    }
    let column_of = hungarian(&cost)?.mapping;
    let mut out = DenseMatrix::zeros(n, c);
    let mut labels = Vec::with_capacity(n);
    for (j, &k) in clusters.iter().enumerate() {
        let col = column_of[k];
        out[(j, col)] = 1.0 / (sizes[k] as f64).sqrt();
        labels.push(col);
    }
    Ok((out, labels))
}

/// `D = (K1U − K3 + μ(2X − E)U)(I + UᵀU)⁻¹ / μ`.
pub fn update_d(view: &ViewState) -> Result<DenseMatrix> {
    let mu = view.mu;
    let mut rhs = view.k1.matmul(&view.u)?;
    rhs.add_scaled(-1.0, &view.k3)?;
    let mut two_x_minus_e = view.x.scale(2.0);
    two_x_minus_e.add_scaled(-1.0, &view.e)?;
    rhs.add_scaled(mu, &two_x_minus_e.matmul(&view.u)?)?;
    let mut m = view.u.t_matmul(&view.u)?;
    m.add_diagonal(1.0);
    // D M = rhs  <=>  M Dᵀ = rhsᵀ since M is symmetric
    Ok(solve_spd(&m, &rhs.transpose())?.transpose().scale(1.0 / mu))
}

/// `E = S_{1/μ}(X − DUᵀ + K1/μ)`.
pub fn update_e(view: &ViewState) -> Result<DenseMatrix> {
    let mut arg = view.x.sub(&view.d.matmul_t(&view.u)?)?;
    arg.add_scaled(1.0 / view.mu, &view.k1)?;
    Ok(soft_threshold_matrix(&arg, 1.0 / view.mu))
}

/// `G = max(U + K2/μ, 0)`.
pub fn update_g(view: &ViewState) -> Result<DenseMatrix> {
    let mut g = view.u.clone();
    g.add_scaled(1.0 / view.mu, &view.k2)?;
    Ok(g.map(|v| v.max(0.0)))
}

/// Dual ascent on all three constraints, then `μ ← min(ρμ, μ_max)`.
pub fn update_multipliers(view: &mut ViewState, rho: f64, mu_max: f64) -> Result<()> {
    let mu = view.mu;
    let (r1, r2, r3) = residuals(view)?;
    view.k1.add_scaled(mu, &r1)?;
    view.k2.add_scaled(mu, &r2)?;
    view.k3.add_scaled(mu, &r3)?;
    view.mu = (rho * mu).min(mu_max);
    Ok(())
}

/// `(X − DUᵀ − E, U − G, D − XU)`.
fn residuals(view: &ViewState) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix)> {
    let mut r1 = view.x.sub(&view.d.matmul_t(&view.u)?)?;
    r1.add_scaled(-1.0, &view.e)?;
    let r2 = view.u.sub(&view.g)?;
    let r3 = view.d.sub(&view.x.matmul(&view.u)?)?;
    Ok((r1, r2, r3))
}

/// `‖X − DUᵀ − E‖_F`.
pub fn reconstruction_residual(view: &ViewState) -> Result<f64> {
    Ok(residuals(view)?.0.frobenius_norm())
}

/// `‖X − DUᵀ − E‖_F ≤ θ‖X‖_F`.
pub fn check_convergence(view: &ViewState, theta: f64) -> Result<bool> {
    Ok(reconstruction_residual(view)? <= theta * view.x.frobenius_norm())
}

fn inner(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    dot(a.as_slice(), b.as_slice())
}

fn sq(a: &DenseMatrix) -> f64 {
    inner(a, a)
}

/// Terms of the augmented Lagrangian that involve `D`.
pub fn d_block_objective(view: &ViewState, d: &DenseMatrix) -> Result<f64> {
    let mut r1 = view.x.sub(&d.matmul_t(&view.u)?)?;
    r1.add_scaled(-1.0, &view.e)?;
    let r3 = d.sub(&view.x.matmul(&view.u)?)?;
    Ok(inner(&view.k1, &r1) + inner(&view.k3, &r3) + 0.5 * view.mu * (sq(&r1) + sq(&r3)))
}

/// Terms of the augmented Lagrangian that involve `E`.
pub fn e_block_objective(view: &ViewState, e: &DenseMatrix) -> Result<f64> {
    let mut r1 = view.x.sub(&view.d.matmul_t(&view.u)?)?;
    r1.add_scaled(-1.0, e)?;
    let l1: f64 = e.as_slice().iter().map(|v| v.abs()).sum();
    Ok(l1 + inner(&view.k1, &r1) + 0.5 * view.mu * sq(&r1))
}

/// Terms involving `G`, infinite outside `G ≥ 0`.
pub fn g_block_objective(view: &ViewState, g: &DenseMatrix) -> Result<f64> {
    if g.as_slice().iter().any(|&v| v < 0.0) {
        return Ok(f64::INFINITY);
    }
    let r2 = view.u.sub(g)?;
    Ok(inner(&view.k2, &r2) + 0.5 * view.mu * sq(&r2))
}

/// Full augmented Lagrangian of one view.
pub fn augmented_lagrangian(
    view: &ViewState,
    others: &[&DenseMatrix],
    cfg: &SolverConfig,
) -> Result<f64> {
    let (r1, r2, r3) = residuals(view)?;
    let lap = laplacian(&view.w).laplacian;
    let smooth = view.u.t_matmul(&lap.matmul(&view.u)?)?.trace();
    let mut consensus = 0.0;
    for other in others {
        consensus += sq(&view.u.sub(other)?);
    }
    let l1: f64 = view.e.as_slice().iter().map(|v| v.abs()).sum();
    Ok(l1
        + 0.5 * cfg.lambda2 * smooth
        + cfg.lambda1 * sq(view.w.weights())
        + 0.5 * cfg.beta * consensus
        + inner(&view.k1, &r1)
        + inner(&view.k2, &r2)
        + inner(&view.k3, &r3)
        + 0.5 * view.mu * (sq(&r1) + sq(&r2) + sq(&r3)))
}
