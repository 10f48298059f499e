//! Alternating-direction solver for clustered orthogonal projections with
//! learned per-view graphs.
//!
//! Each view `i` carries `U_i` (n×c, orthonormal scaled cluster indicators),
//! a dictionary `D_i = X_i U_i`, sparse noise `E_i`, a nonnegative copy
//! `G_i = U_i`, a learned graph `W_i`, and multipliers `K1, K2, K3` for the
//! constraints `X_i = D_i U_iᵀ + E_i`, `U_i = G_i`, `D_i = X_i U_i`. The
//! augmented Lagrangian uses `μ/2` quadratic penalties; views are swept
//! in order and couple through a `β/2 Σ_j ‖U_i − U_j‖²` consensus term.

mod checkpoint;
mod driver;
mod state;
mod updates;

use serde::{Deserialize, Serialize};

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use driver::{
    resume, run, run_views, run_views_checkpointed, run_views_logged, IterationLog,
    IterationRecord, SolveOutput,
};
pub use state::{init_view, ViewState};
pub use updates::{
    augmented_lagrangian, check_convergence, d_block_objective, e_block_objective,
    g_block_objective, orthonormalize_u, orthonormalize_u_labeled, reconstruction_residual,
    u_full_system, u_row_system, update_d, update_e, update_g, update_multipliers, update_u_full,
    update_u_row, update_u_rows, USolve,
};

use crate::error::{Error, Result};

/// Which `U` update to run each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum UUpdate {
    /// One `n x n` solve per view.
    Full,
    /// Independent `c x c` solves per row.
    Row,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Weight of `‖W‖_F²`.
    pub lambda1: f64,
    /// Weight of the graph smoothness term `Tr(UᵀLU)/2`.
    pub lambda2: f64,
    /// Cross-view consensus weight.
    pub beta: f64,
    pub clusters: usize,
    pub neighbors: usize,
    /// Relative reconstruction tolerance for convergence.
    pub theta: f64,
    pub max_iters: usize,
    pub mu0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub seed: u64,
    pub u_update: UUpdate,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda1: 0.8,
            lambda2: 0.7,
            beta: 0.25,
            clusters: 2,
            neighbors: 5,
            theta: 1e-6,
            max_iters: 25,
            mu0: 1e-3,
            rho: 1.5,
            mu_max: 1e6,
            seed: 0,
            u_update: UUpdate::Row,
        }
    }
}

impl SolverConfig {
    pub fn with_clusters(clusters: usize) -> Self {
        Self {
            clusters,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::contract(format!("invalid solver config: {what}")));
        if !(self.lambda1 > 0.0) {
            // the graph row update divides by lambda1
            return bad("lambda1 must be > 0");
        }
        if !(self.lambda2 >= 0.0) || !(self.beta >= 0.0) {
            return bad("lambda2 and beta must be >= 0");
        }
        if !(self.theta > 0.0) || !(self.mu0 > 0.0) {
            return bad("theta and mu0 must be > 0");
        }
        if !(self.rho >= 1.0) || !(self.mu_max >= self.mu0) {
            return bad("rho must be >= 1 and mu_max >= mu0");
        }
        if self.clusters == 0 || self.neighbors == 0 {
            return bad("clusters and neighbors must be >= 1");
        }
        Ok(())
    }
}
