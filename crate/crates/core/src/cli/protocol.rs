//! The repeated-trial protocol shared by every command.
//!
//! Trial `t` uses seed `base + t`. The raw dataset is corrupted with that
//! seed (view `i` draws from `seed + i`), optionally normalized, and the
//! same corrupted copy feeds every method, so trials are paired.

use std::path::Path;

use serde::Serialize;

use crate::data::{corrupt_dataset, MultiViewDataset};
use crate::error::Result;
use crate::eval::{accuracy, consensus_ratio, nmi};
use crate::numerics::DenseMatrix;
use crate::solver::{run_views_logged, IterationLog, SolverConfig};
use crate::spectral::{concat_affinity, normalized_cut, partition};

/// Sparse corruption applied to each trial's copy of the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub fraction: f64,
    pub lo: f64,
    pub hi: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        fraction: 0.0,
        lo: -5.0,
        hi: 5.0,
    };

    /// 20% of entries, additive uniform noise on `[-5, 5]`.
    pub const SPARSE_20: NoiseSpec = NoiseSpec {
        fraction: 0.2,
        lo: -5.0,
        hi: 5.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Protocol {
    pub noise: NoiseSpec,
    pub normalize: bool,
    pub base_seed: u64,
}

impl Protocol {
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    /// The dataset trial `trial` sees.
    pub fn prepare(&self, raw: &MultiViewDataset, trial: usize) -> Result<MultiViewDataset> {
        let seed = self.trial_seed(trial);
        let noisy = if self.noise.fraction > 0.0 {
            corrupt_dataset(raw, self.noise.fraction, self.noise.lo, self.noise.hi, seed)?
        } else {
            raw.clone()
        };
        Ok(if self.normalize {
            noisy.normalized()
        } else {
            noisy
        })
    }
}

/// Per-trial scores. Label-based scores are absent without ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub trial: usize,
    pub seed: u64,
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    /// Scores of k-means on the summed `U` (solver runs only).
    pub acc_u: Option<f64>,
    pub nmi_u: Option<f64>,
    pub consensus_ratio: Option<f64>,
    pub final_spread: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub metrics: TrialMetrics,
    pub labels: Vec<usize>,
    pub labels_u: Option<Vec<usize>>,
    pub affinity: DenseMatrix,
    pub log: Option<IterationLog>,
    pub per_view_u: Vec<DenseMatrix>,
}

fn score(pred: &[usize], truth: Option<&[usize]>) -> Result<(Option<f64>, Option<f64>)> {
    match truth {
        Some(t) => Ok((Some(accuracy(pred, t)?), Some(nmi(pred, t)?))),
        None => Ok((None, None)),
    }
}

/// Runs the solver and the final cut for one trial. On failure the records
/// produced so far are left in `log`.
pub fn cluster_trial(
    raw: &MultiViewDataset,
    protocol: &Protocol,
    cfg: &SolverConfig,
    trial: usize,
    checkpoint: Option<&Path>,
    log: &mut IterationLog,
) -> Result<TrialOutcome> {
    let ds = protocol.prepare(raw, trial)?;
    let seed = protocol.trial_seed(trial);
    let cfg = SolverConfig {
        seed,
        ..cfg.clone()
    };
    let out = run_views_logged(ds.views(), &cfg, checkpoint, log)?;
    let iterations = out.iterations;
    let converged = out.all_converged();
    let result = partition(out, &cfg)?;
    let (acc, nmi_score) = score(&result.labels, ds.truth())?;
    let (acc_u, nmi_u) = score(&result.labels_u, ds.truth())?;
    Ok(TrialOutcome {
        metrics: TrialMetrics {
            trial,
            seed,
            acc,
            nmi: nmi_score,
            acc_u,
            nmi_u,
            consensus_ratio: Some(consensus_ratio(&result.per_view_u)?),
            final_spread: Some(result.log.final_spread()),
            iterations: Some(iterations),
            converged: Some(converged),
        },
        labels: result.labels,
        labels_u: Some(result.labels_u),
        affinity: result.w_aggregate,
        log: Some(result.log),
        per_view_u: result.per_view_u,
    })
}

/// The concatenated-features baseline on one trial.
pub fn baseline_trial(
    raw: &MultiViewDataset,
    protocol: &Protocol,
    clusters: usize,
    trial: usize,
) -> Result<TrialOutcome> {
    let ds = protocol.prepare(raw, trial)?;
    let seed = protocol.trial_seed(trial);
    let affinity = concat_affinity(&ds)?;
    let labels = normalized_cut(&affinity, clusters, seed)?;
    let (acc, nmi_score) = score(&labels, ds.truth())?;
    Ok(TrialOutcome {
        metrics: TrialMetrics {
            trial,
            seed,
            acc,
            nmi: nmi_score,
            acc_u: None,
            nmi_u: None,
            consensus_ratio: None,
            final_spread: None,
            iterations: None,
            converged: None,
        },
        labels,
        labels_u: None,
        affinity,
        log: None,
        per_view_u: Vec::new(),
    })
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub method: String,
    pub trials: usize,
    pub base_seed: u64,
    pub acc: Option<MeanStd>,
    pub nmi: Option<MeanStd>,
    pub acc_u: Option<MeanStd>,
    pub nmi_u: Option<MeanStd>,
    pub consensus_ratio: Option<MeanStd>,
    pub final_spread: Option<MeanStd>,
    pub per_trial: Vec<TrialMetrics>,
}

impl Summary {
    pub fn new(method: &str, base_seed: u64, per_trial: Vec<TrialMetrics>) -> Self {
        let collect = |f: fn(&TrialMetrics) -> Option<f64>| {
            let values: Option<Vec<f64>> = per_trial.iter().map(f).collect();
            values.and_then(|v| MeanStd::of(&v))
        };
        Summary {
            method: method.to_string(),
            trials: per_trial.len(),
            base_seed,
            acc: collect(|m| m.acc),
            nmi: collect(|m| m.nmi),
            acc_u: collect(|m| m.acc_u),
            nmi_u: collect(|m| m.nmi_u),
            consensus_ratio: collect(|m| m.consensus_ratio),
            final_spread: collect(|m| m.final_spread),
            per_trial,
        }
    }

    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut out = format!(
            "method={}\ntrials={}\nbase_seed={}\n",
            self.method, self.trials, self.base_seed
        );
        let fields = [
            ("acc", self.acc),
            ("nmi", self.nmi),
            ("acc_u", self.acc_u),
            ("nmi_u", self.nmi_u),
            ("consensus_ratio", self.consensus_ratio),
            ("final_spread", self.final_spread),
        ];
        for (name, value) in fields {
            if let Some(v) = value {
                out.push_str(&format!(
                    "{name}_mean={:.12}\n{name}_std={:.12}\n",
                    v.mean, v.std
                ));
            }
        }
        out
    }

    pub fn trials_csv(&self) -> String {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map_or_else(String::new, |x| x.to_string())
        }
        let mut out = String::from(
            "trial,seed,acc,nmi,acc_u,nmi_u,consensus_ratio,final_spread,iterations,converged\n",
        );
        for m in &self.per_trial {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                m.trial,
                m.seed,
                opt(m.acc),
                opt(m.nmi),
                opt(m.acc_u),
                opt(m.nmi_u),
                opt(m.consensus_ratio),
                opt(m.final_spread),
                opt(m.iterations),
                opt(m.converged)
            ));
        }
        out
    }
}
