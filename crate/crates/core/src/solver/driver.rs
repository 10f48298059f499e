use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::checkpoint::{write_checkpoint, Checkpoint};
use super::state::{init_view, ViewState};
use super::updates::{
    check_convergence, orthonormalize_u, update_d, update_e, update_g, update_multipliers,
    update_u_full, update_u_rows,
};
use super::{SolverConfig, UUpdate};
use crate::data::MultiViewDataset;
use crate::error::{Error, Result};
use crate::eval::consensus_spread;
use crate::graph::learn_graph;
use crate::numerics::{hungarian, DenseMatrix};

/// One view's state after one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub view: usize,
    /// `‖X − DUᵀ − E‖_F`
    pub reconstruction: f64,
    /// `‖U − G‖_F`
    pub auxiliary: f64,
    /// `‖D − XU‖_F`
    pub dictionary: f64,
    /// `max_{i,j} ‖U_i − U_j‖_F` over all views right after this update.
    pub consensus_spread: f64,
    pub mu: f64,
    /// `‖UᵀU − I‖_F` after orthonormalization.
    pub orthonormality: f64,
    /// Diagonal shift the `U` solve needed (0 if none).
    pub regularization: f64,
    pub u_system_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
}

impl IterationLog {
    pub const CSV_HEADER: &'static str = "iteration,view,reconstruction,auxiliary,dictionary,\
consensus_spread,mu,orthonormality,regularization,u_system_residual,converged";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                r.iteration,
                r.view,
                r.reconstruction,
                r.auxiliary,
                r.dictionary,
                r.consensus_spread,
                r.mu,
                r.orthonormality,
                r.regularization,
                r.u_system_residual,
                r.converged
            );
        }
        out
    }

    /// Largest orthonormality error seen.
    pub fn max_orthonormality_error(&self) -> f64 {
        self.records
            .iter()
            .fold(0.0, |m, r| m.max(r.orthonormality))
    }

    /// Consensus spread recorded at the end of each iteration.
    pub fn spread_by_iteration(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.records {
            if r.iteration >= out.len() {
                out.resize(r.iteration + 1, r.consensus_spread);
            }
            out[r.iteration] = r.consensus_spread;
        }
        out
    }

    pub fn final_spread(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.consensus_spread)
    }

    /// Number of `U` solves that needed a diagonal shift.
    pub fn regularized_solves(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.regularization > 0.0)
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    /// `Σ_i U_i`
    pub u_sum: DenseMatrix,
    /// `Σ_i (W_i + W_iᵀ)/2`
    pub w_sum: DenseMatrix,
    pub states: Vec<ViewState>,
    pub log: IterationLog,
    /// Outer iterations performed.
    pub iterations: usize,
}

impl SolveOutput {
    pub fn all_converged(&self) -> bool {
        self.states.iter().all(|s| s.converged)
    }

    pub fn per_view_u(&self) -> Vec<DenseMatrix> {
        self.states.iter().map(|s| s.u.clone()).collect()
    }
}

pub fn run(dataset: &MultiViewDataset, cfg: &SolverConfig) -> Result<SolveOutput> {
    run_views(dataset.views(), cfg)
}

pub fn run_views(views: &[DenseMatrix], cfg: &SolverConfig) -> Result<SolveOutput> {
    run_views_checkpointed(views, cfg, None)
}

/// As [`run_views`], writing a checkpoint to `checkpoint` after every outer
/// iteration when given.
pub fn run_views_checkpointed(
    views: &[DenseMatrix],
    cfg: &SolverConfig,
    checkpoint: Option<&Path>,
) -> Result<SolveOutput> {
    run_views_logged(views, cfg, checkpoint, &mut IterationLog::default())
}

/// As [`run_views_checkpointed`], appending records to `log` as they are
/// produced so the caller keeps them if the run fails part way.
pub fn run_views_logged(
    views: &[DenseMatrix],
    cfg: &SolverConfig,
    checkpoint: Option<&Path>,
    log: &mut IterationLog,
) -> Result<SolveOutput> {
    cfg.validate()?;
    let Some(first) = views.first() else {
        return Err(Error::contract("solver needs at least one view"));
    };
    let n = first.cols();
    if let Some(i) = views.iter().position(|v| v.cols() != n) {
        return Err(Error::contract(format!(
            "view {i} has {} samples, view 0 has {n}",
            views[i].cols()
        )));
    }
    let mut states = views
        .iter()
        .enumerate()
        .map(|(i, x)| init_view(x, cfg, cfg.seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    if let Some((first, rest)) = states.split_first_mut() {
        for s in rest {
            align_columns(s, &first.u)?;
        }
    }
    iterate(states, 0, cfg, checkpoint, log)
}

/// Relabels the clusters of `view` to best overlap `reference`: the columns
/// of `U`, `D`, `G`, `K2` and `K3` are permuted together. This leaves every
/// term of the view's Lagrangian unchanged except the consensus term.
fn align_columns(view: &mut ViewState, reference: &DenseMatrix) -> Result<()> {
    let overlap = view.u.t_matmul(reference)?;
    let target = hungarian(&overlap.scale(-1.0))?.mapping;
    if target.iter().enumerate().all(|(from, &to)| from == to) {
        return Ok(());
    }
    let permute = |m: &DenseMatrix| {
        let mut out = DenseMatrix::zeros(m.rows(), m.cols());
        for (from, &to) in target.iter().enumerate() {
            for r in 0..m.rows() {
                out[(r, to)] = m[(r, from)];
            }
        }
        out
    };
    view.u = permute(&view.u);
    view.d = permute(&view.d);
    view.g = permute(&view.g);
    view.k2 = permute(&view.k2);
    view.k3 = permute(&view.k3);
    Ok(())
}

/// Continues from a checkpoint until convergence or `cfg.max_iters` total
/// iterations.
pub fn resume(checkpoint: Checkpoint, cfg: &SolverConfig) -> Result<SolveOutput> {
    cfg.validate()?;
    iterate(
        checkpoint.views,
        checkpoint.iteration,
        cfg,
        None,
        &mut IterationLog::default(),
    )
}

fn orthonormalize_seed(base: u64, iteration: usize, view: usize) -> u64 {
    base ^ ((iteration as u64 + 1) << 32) ^ ((view as u64 + 1) << 16)
}

fn iterate(
    mut states: Vec<ViewState>,
    start: usize,
    cfg: &SolverConfig,
    checkpoint: Option<&Path>,
    log: &mut IterationLog,
) -> Result<SolveOutput> {
    let c = cfg.clusters;
    let mut iterations = start;
    for k in start..cfg.max_iters {
        if states.iter().all(|s| s.converged) {
            break;
        }
        for i in 0..states.len() {
            if states[i].converged {
                continue;
            }
            let others: Vec<DenseMatrix> = states
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, s)| s.u.clone())
                .collect();
            let other_refs: Vec<&DenseMatrix> = others.iter().collect();
            let view = &mut states[i];
            let diverged = |what| Error::Divergence {
                iteration: k,
                view: i,
                what,
            };

            let solved = match cfg.u_update {
                UUpdate::Full => update_u_full(view, &other_refs, cfg)?,
                UUpdate::Row => update_u_rows(view, &other_refs, cfg)?,
            };
            if !solved.u.is_finite() {
                return Err(diverged("U"));
            }
            let seed = orthonormalize_seed(cfg.seed, k, i);
            view.u = orthonormalize_u(&solved.u, c, seed)?;
            if cfg.beta > 0.0 && !others.is_empty() {
                let mut consensus = DenseMatrix::zeros(view.n(), c);
                for other in &others {
                    consensus.add_scaled(1.0, other)?;
                }
                align_columns(view, &consensus)?;
            }
            let mut gram = view.u.t_matmul(&view.u)?;
            gram.add_diagonal(-1.0);
            let orthonormality = gram.frobenius_norm();

            view.w = learn_graph(&view.u, cfg.lambda1, cfg.lambda2, cfg.neighbors)?;
            view.e = update_e(view)?;
            if !view.e.is_finite() {
                return Err(diverged("E"));
            }
            view.d = update_d(view)?;
            if !view.d.is_finite() {
                return Err(diverged("D"));
            }
            view.g = update_g(view)?;
            update_multipliers(view, cfg.rho, cfg.mu_max)?;
            if !view.is_finite() {
                return Err(diverged("multipliers"));
            }
            view.converged = check_convergence(view, cfg.theta)?;

            let reconstruction = super::updates::reconstruction_residual(view)?;
            let auxiliary = view.u.sub(&view.g)?.frobenius_norm();
            let dictionary = view.d.sub(&view.x.matmul(&view.u)?)?.frobenius_norm();
            let mu = view.mu;
            let converged = view.converged;
            let us: Vec<DenseMatrix> = states.iter().map(|s| s.u.clone()).collect();
            log.records.push(IterationRecord {
                iteration: k,
                view: i,
                reconstruction,
                auxiliary,
                dictionary,
                consensus_spread: consensus_spread(&us),
                mu,
                orthonormality,
                regularization: solved.regularization,
                u_system_residual: solved.system_residual,
                converged,
            });
        }
        iterations = k + 1;
        if let Some(path) = checkpoint {
            write_checkpoint(
                path,
                &Checkpoint {
                    iteration: iterations,
                    views: states.clone(),
                },
            )?;
        }
    }

    let n = states[0].n();
    let mut u_sum = DenseMatrix::zeros(n, c);
    let mut w_sum = DenseMatrix::zeros(n, n);
    for s in &states {
        u_sum.add_scaled(1.0, &s.u)?;
        w_sum.add_scaled(1.0, &s.w.symmetrized())?;
    }
    Ok(SolveOutput {
        u_sum,
        w_sum,
        states,
        log: log.clone(),
        iterations,
    })
}
