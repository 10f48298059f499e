//! Command-line front end.

pub mod figure;
pub mod protocol;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::data::{load_labels, load_manifest, load_view_csv, save_dataset, synth_multiview};
use crate::data::{write_labels, MultiViewDataset};
use crate::error::{Error, Result};
use crate::eval::{accuracy, nmi};
use crate::numerics::DenseMatrix;
use crate::solver::{IterationLog, SolverConfig, UUpdate};
use protocol::{
    baseline_trial, cluster_trial, MeanStd, NoiseSpec, Protocol, Summary, TrialOutcome,
};

#[derive(Debug, Parser)]
#[command(
    name = "movclust",
    version,
    about = "Multi-view clustering with learned graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the multi-view solver over repeated trials.
    Cluster(ClusterArgs),
    /// Run the concatenated-features spectral baseline.
    Baseline(BaselineArgs),
    /// Grid over lambda2 and beta.
    Sweep(SweepArgs),
    /// Render an affinity matrix as a grayscale PGM, samples grouped by label.
    AffinityFigure(FigureArgs),
    /// Write a synthetic dataset with a manifest.
    Synth(SynthArgs),
    /// Score a label file against ground truth.
    Evaluate(EvaluateArgs),
}

/// `n=300,c=3,dims=10:15:20,sep=20[,seed=7]`
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub c: usize,
    pub dims: Vec<usize>,
    pub separation: f64,
    pub seed: Option<u64>,
}

impl FromStr for SynthSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (mut n, mut c, mut dims, mut sep, mut seed) = (None, None, None, None, None);
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            let value = value.trim();
            let bad = |e: &dyn std::fmt::Display| format!("bad value for {key}: {e}");
            match key.trim() {
                "n" => n = Some(value.parse().map_err(|e| bad(&e))?),
                "c" => c = Some(value.parse().map_err(|e| bad(&e))?),
                "dims" => {
                    let parsed: std::result::Result<Vec<usize>, _> =
                        value.split(':').map(str::parse).collect();
                    dims = Some(parsed.map_err(|e| bad(&e))?);
                }
                "sep" => sep = Some(value.parse().map_err(|e| bad(&e))?),
                "seed" => seed = Some(value.parse().map_err(|e| bad(&e))?),
                other => return Err(format!("unknown key {other:?}")),
            }
        }
        Ok(SynthSpec {
            n: n.ok_or("missing n")?,
            c: c.ok_or("missing c")?,
            dims: dims.ok_or("missing dims")?,
            separation: sep.ok_or("missing sep")?,
            seed,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dataset manifest (TOML).
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    pub dataset: Option<PathBuf>,
    /// Generate data instead: n=..,c=..,dims=a:b:c,sep=..[,seed=..]
    #[arg(long)]
    pub synth: Option<SynthSpec>,
    /// Fraction of entries hit by sparse noise in each trial.
    #[arg(long, default_value_t = 0.0)]
    pub noise_frac: f64,
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub noise_lo: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub noise_hi: f64,
    /// Skip per-feature normalization.
    #[arg(long)]
    pub no_normalize: bool,
}

impl DataArgs {
    /// Loads or generates the raw dataset. Synthetic data uses the spec's
    /// seed, or `base_seed` when none is given.
    pub fn load(&self, base_seed: u64) -> Result<MultiViewDataset> {
        match (&self.dataset, &self.synth) {
            (Some(path), _) => Ok(load_manifest(path)?.1),
            (None, Some(s)) => {
                synth_multiview(s.n, s.c, &s.dims, s.separation, s.seed.unwrap_or(base_seed))
            }
            (None, None) => Err(Error::contract("either --dataset or --synth is required")),
        }
    }

    pub fn protocol(&self, base_seed: u64) -> Result<Protocol> {
        if !(0.0..=1.0).contains(&self.noise_frac) || !(self.noise_lo <= self.noise_hi) {
            return Err(Error::contract(
                "noise fraction must be in [0, 1] and lo <= hi",
            ));
        }
        Ok(Protocol {
            noise: NoiseSpec {
                fraction: self.noise_frac,
                lo: self.noise_lo,
                hi: self.noise_hi,
            },
            normalize: !self.no_normalize,
            base_seed,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrialArgs {
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Base seed; trial t uses seed + t.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Number of clusters; defaults to the number of ground-truth classes.
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 0.7)]
    pub lambda2: f64,
    #[arg(long, default_value_t = 0.25)]
    pub beta: f64,
    /// Nonzeros per row of each learned graph.
    #[arg(long, default_value_t = 5)]
    pub neighbors: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub theta: f64,
    #[arg(long, default_value_t = 25)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub mu0: f64,
    #[arg(long, default_value_t = 1.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 1e6)]
    pub mu_max: f64,
    #[arg(long, value_enum, default_value_t = UUpdate::Row)]
    pub u_update: UUpdate,
}

impl SolverArgs {
    pub fn config(&self, ds: &MultiViewDataset) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            beta: self.beta,
            clusters: resolve_clusters(self.clusters, ds)?,
            neighbors: self.neighbors,
            theta: self.theta,
            max_iters: self.max_iters,
            mu0: self.mu0,
            rho: self.rho,
            mu_max: self.mu_max,
            seed: 0,
            u_update: self.u_update,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn resolve_clusters(given: Option<usize>, ds: &MultiViewDataset) -> Result<usize> {
    given
        .or_else(|| ds.n_classes())
        .ok_or_else(|| Error::contract("--clusters is required when the dataset has no labels"))
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub trials: TrialArgs,
    /// Write solver state here after every iteration (one file per trial).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[arg(long)]
    pub clusters: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,0.35,0.7,1.4")]
    pub lambda2_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.125,0.25,0.5")]
    pub beta_grid: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    /// Square affinity matrix as CSV.
    #[arg(long)]
    pub affinity: PathBuf,
    /// One label per line, used to group samples.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub clusters: usize,
    /// View dimensions, colon separated.
    #[arg(long, default_value = "10:15:20")]
    pub dims: String,
    #[arg(long, default_value_t = 20.0)]
    pub sep: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "synthetic")]
    pub name: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
}

pub fn run_cli(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cluster(a) => cmd_cluster(&a),
        Command::Baseline(a) => cmd_baseline(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::AffinityFigure(a) => cmd_affinity_figure(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Creates `dir` and fails early if it cannot be written to.
pub fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".movclust-write-check");
    fs::File::create(&probe)
        .and_then(|mut f| f.write_all(b"ok"))
        .map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Writes a matrix as CSV, one matrix row per line.
pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_file(path, out)
}

fn trial_dir(out: &Path, trial: usize) -> PathBuf {
    out.join(format!("trial_{trial:03}"))
}

fn write_trial(dir: &Path, outcome: &TrialOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_labels(&dir.join("labels.txt"), &outcome.labels)?;
    if let Some(l) = &outcome.labels_u {
        write_labels(&dir.join("labels_u.txt"), l)?;
    }
    if let Some(log) = &outcome.log {
        write_file(&dir.join("iterations.csv"), log.to_csv())?;
    }
    write_matrix_csv(&dir.join("affinity.csv"), &outcome.affinity)?;
    let single = Summary::new("trial", outcome.metrics.seed, vec![outcome.metrics.clone()]);
    write_file(&dir.join("metrics.txt"), single.to_key_values())
}

fn write_summary(out: &Path, summary: &Summary, extra: serde_json::Value) -> Result<()> {
    write_file(&out.join("metrics.txt"), summary.to_key_values())?;
    write_file(&out.join("trials.csv"), summary.trials_csv())?;
    let mut json = serde_json::to_value(summary).expect("summary serializes");
    if let (Some(obj), serde_json::Value::Object(more)) = (json.as_object_mut(), extra) {
        obj.extend(more);
    }
    let text = serde_json::to_string_pretty(&json).expect("json serializes");
    write_file(&out.join("metrics.json"), text)
}

/// Runs every trial of the solver, writing per-trial artifacts as it goes.
/// A failed trial still leaves its partial iteration log.
pub fn run_cluster_trials(
    raw: &MultiViewDataset,
    protocol: &Protocol,
    cfg: &SolverConfig,
    trials: usize,
    out: Option<&Path>,
    checkpoint: Option<&Path>,
) -> Result<Vec<TrialOutcome>> {
    let mut outcomes = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut log = IterationLog::default();
        let ck = checkpoint.map(|p| trial_checkpoint(p, t, trials));
        let result = cluster_trial(raw, protocol, cfg, t, ck.as_deref(), &mut log);
        match (result, out) {
            (Ok(outcome), Some(dir)) => {
                write_trial(&trial_dir(dir, t), &outcome)?;
                outcomes.push(outcome);
            }
            (Ok(outcome), None) => outcomes.push(outcome),
            (Err(e), Some(dir)) => {
                let dir = trial_dir(dir, t);
                fs::create_dir_all(&dir).map_err(|io| Error::io(&dir, io))?;
                write_file(&dir.join("iterations.csv"), log.to_csv())?;
                return Err(e);
            }
            (Err(e), None) => return Err(e),
        }
    }
    Ok(outcomes)
}

fn trial_checkpoint(path: &Path, trial: usize, trials: usize) -> PathBuf {
    if trials == 1 {
        return path.to_path_buf();
    }
    let mut name = path
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(format!(".trial_{trial:03}"));
    path.with_file_name(name)
}

pub fn run_baseline_trials(
    raw: &MultiViewDataset,
    protocol: &Protocol,
    clusters: usize,
    trials: usize,
) -> Result<Vec<TrialOutcome>> {
    (0..trials)
        .map(|t| baseline_trial(raw, protocol, clusters, t))
        .collect()
}

fn check_trials(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::contract("--trials must be at least 1"));
    }
    Ok(())
}

fn print_summary(summary: &Summary) {
    print!("{}", summary.to_key_values());
}

fn cmd_cluster(a: &ClusterArgs) -> Result<()> {
    check_trials(a.trials.trials)?;
    prepare_out_dir(&a.trials.out)?;
    let raw = a.data.load(a.trials.seed)?;
    let protocol = a.data.protocol(a.trials.seed)?;
    let cfg = a.solver.config(&raw)?;
    let outcomes = run_cluster_trials(
        &raw,
        &protocol,
        &cfg,
        a.trials.trials,
        Some(&a.trials.out),
        a.checkpoint.as_deref(),
    )?;
    let summary = Summary::new(
        "movclust",
        a.trials.seed,
        outcomes.into_iter().map(|o| o.metrics).collect(),
    );
    let extra = serde_json::json!({ "config": cfg, "protocol": protocol });
    write_summary(&a.trials.out, &summary, extra)?;
    print_summary(&summary);
    Ok(())
}

fn cmd_baseline(a: &BaselineArgs) -> Result<()> {
    check_trials(a.trials.trials)?;
    prepare_out_dir(&a.trials.out)?;
    let raw = a.data.load(a.trials.seed)?;
    let protocol = a.data.protocol(a.trials.seed)?;
    let clusters = resolve_clusters(a.clusters, &raw)?;
    let outcomes = run_baseline_trials(&raw, &protocol, clusters, a.trials.trials)?;
    for o in &outcomes {
        write_trial(&trial_dir(&a.trials.out, o.metrics.trial), o)?;
    }
    let summary = Summary::new(
        "baseline",
        a.trials.seed,
        outcomes.into_iter().map(|o| o.metrics).collect(),
    );
    let extra = serde_json::json!({ "clusters": clusters, "protocol": protocol });
    write_summary(&a.trials.out, &summary, extra)?;
    print_summary(&summary);
    Ok(())
}

/// One cell of a parameter sweep.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SweepCell {
    pub lambda2: f64,
    pub beta: f64,
    pub acc: Option<MeanStd>,
    pub nmi: Option<MeanStd>,
    pub spread: Option<MeanStd>,
}

pub const SWEEP_CSV_HEADER: &str = "lambda2,beta,acc_mean,acc_std,nmi_mean,nmi_std,spread_mean";

pub fn run_sweep(
    raw: &MultiViewDataset,
    protocol: &Protocol,
    base: &SolverConfig,
    lambda2_grid: &[f64],
    beta_grid: &[f64],
    trials: usize,
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &lambda2 in lambda2_grid {
        for &beta in beta_grid {
            let cfg = SolverConfig {
                lambda2,
                beta,
                ..base.clone()
            };
            cfg.validate()?;
            let outcomes = run_cluster_trials(raw, protocol, &cfg, trials, None, None)?;
            let s = Summary::new(
                "movclust",
                protocol.base_seed,
                outcomes.into_iter().map(|o| o.metrics).collect(),
            );
            cells.push(SweepCell {
                lambda2,
                beta,
                acc: s.acc,
                nmi: s.nmi,
                spread: s.final_spread,
            });
        }
    }
    Ok(cells)
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let f = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    let mut out = format!("{SWEEP_CSV_HEADER}\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.lambda2,
            c.beta,
            f(c.acc.map(|m| m.mean)),
            f(c.acc.map(|m| m.std)),
            f(c.nmi.map(|m| m.mean)),
            f(c.nmi.map(|m| m.std)),
            f(c.spread.map(|m| m.mean)),
        ));
    }
    out
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    check_trials(a.trials.trials)?;
    if a.lambda2_grid.is_empty() || a.beta_grid.is_empty() {
        return Err(Error::contract("sweep grids must not be empty"));
    }
    prepare_out_dir(&a.trials.out)?;
    let raw = a.data.load(a.trials.seed)?;
    let protocol = a.data.protocol(a.trials.seed)?;
    let cfg = a.solver.config(&raw)?;
    let cells = run_sweep(
        &raw,
        &protocol,
        &cfg,
        &a.lambda2_grid,
        &a.beta_grid,
        a.trials.trials,
    )?;
    let csv = sweep_csv(&cells);
    write_file(&a.trials.out.join("sweep.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_affinity_figure(a: &FigureArgs) -> Result<()> {
    prepare_out_dir(&a.out)?;
    // the CSV loader stores samples as columns
    let w = load_view_csv(&a.affinity)?.transpose();
    let labels = load_labels(&a.labels)?;
    let (ordered, pgm) = figure::affinity_figure(&w, &labels)?;
    write_file(&a.out.join("affinity.pgm"), &pgm)?;
    write_matrix_csv(&a.out.join("affinity_ordered.csv"), &ordered)?;
    let header = pgm.len() - ordered.rows() * ordered.cols();
    let (intra, inter) = figure::block_brightness(&pgm[header..], &labels);
    println!("intra_brightness={intra:.6}\ninter_brightness={inter:.6}");
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let dims: std::result::Result<Vec<usize>, _> = a.dims.split(':').map(str::parse).collect();
    let dims = dims.map_err(|e| Error::contract(format!("bad --dims {:?}: {e}", a.dims)))?;
    let ds = synth_multiview(a.n, a.clusters, &dims, a.sep, a.seed)?;
    let manifest = save_dataset(&ds, &a.name, &a.out)?;
    println!("{}", manifest.display());
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let pred = load_labels(&a.pred)?;
    let truth = load_labels(&a.truth)?;
    println!(
        "acc={:.12}\nnmi={:.12}",
        accuracy(&pred, &truth)?,
        nmi(&pred, &truth)?
    );
    Ok(())
}
