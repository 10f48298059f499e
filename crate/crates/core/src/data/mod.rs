//! Multi-view datasets: synthesis, corruption, and CSV ingestion.

mod io;
mod synth;

pub use io::{
    load_labels, load_manifest, load_view_csv, load_views, save_dataset, write_labels,
    write_view_csv, Manifest,
};
pub use synth::{corrupt_dataset, inject_sparse_noise, synth_multiview};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// The same `n` samples seen through several feature spaces.
///
/// View `i` is stored as a `d_i x n` matrix (one column per sample).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<DenseMatrix>,
    truth: Option<Vec<usize>>,
    names: Vec<String>,
}

impl MultiViewDataset {
    pub fn new(
        views: Vec<DenseMatrix>,
        truth: Option<Vec<usize>>,
        names: Vec<String>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::contract("a dataset needs at least one view"));
        }
        if names.len() != views.len() {
            return Err(Error::contract(format!(
                "{} view names for {} views",
                names.len(),
                views.len()
            )));
        }
        let n = views[0].cols();
        if let Some(i) = views.iter().position(|v| v.cols() != n) {
            return Err(Error::contract(format!(
                "view '{}' has {} samples but view '{}' has {n}",
                names[i],
                views[i].cols(),
                names[0]
            )));
        }
        if let Some(t) = &truth {
            if t.len() != n {
                return Err(Error::contract(format!(
                    "{} labels for {n} samples",
                    t.len()
                )));
            }
            let k = t.iter().max().map_or(0, |m| m + 1);
            if (0..k).any(|c| !t.contains(&c)) {
                return Err(Error::contract("truth labels are not contiguous from 0"));
            }
        }
        Ok(Self {
            views,
            truth,
            names,
        })
    }

    /// Names views `view0`, `view1`, ...
    pub fn unnamed(views: Vec<DenseMatrix>, truth: Option<Vec<usize>>) -> Result<Self> {
        let names = (0..views.len()).map(|i| format!("view{i}")).collect();
        Self::new(views, truth, names)
    }

    pub fn views(&self) -> &[DenseMatrix] {
        &self.views
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].cols()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(DenseMatrix::rows).collect()
    }

    /// Number of distinct truth classes, if labels are present.
    pub fn n_classes(&self) -> Option<usize> {
        self.truth
            .as_ref()
            .map(|t| t.iter().max().map_or(0, |m| m + 1))
    }

    pub fn with_views(&self, views: Vec<DenseMatrix>) -> Result<Self> {
        Self::new(views, self.truth.clone(), self.names.clone())
    }

    /// Centers every feature across samples and scales it to unit max-abs.
    /// Constant features become zero.
    pub fn normalized(&self) -> Self {
        let views = self.views.iter().map(normalize_features).collect();
        Self {
            views,
            truth: self.truth.clone(),
            names: self.names.clone(),
        }
    }
}

fn normalize_features(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    let n = x.cols();
    for f in 0..x.rows() {
        let row = out.row_mut(f);
        let mean = row.iter().sum::<f64>() / n as f64;
        row.iter_mut().for_each(|v| *v -= mean);
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            row.iter_mut().for_each(|v| *v /= scale);
        }
    }
    out
}
