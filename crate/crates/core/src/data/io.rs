//! CSV views, label files, and dataset manifests.
//!
//! A view file holds one sample per row, comma separated. A first line that
//! does not parse as numbers is taken as a header. Label files hold one
//! integer per line; distinct values are mapped to `0..k` in sorted order.
//!
//! A manifest is a TOML file:
//!
//! ```toml
//! name = "digits"
//! views = ["fourier.csv", "profile.csv"]
//! labels = "labels.txt"   # optional
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::MultiViewDataset;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub views: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if manifest.views.is_empty() {
            return Err(Error::Manifest {
                path: path.to_path_buf(),
                message: "no views listed".into(),
            });
        }
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for v in &mut manifest.views {
            *v = base.join(&*v);
        }
        if let Some(l) = &mut manifest.labels {
            *l = base.join(&*l);
        }
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Reads the dataset a manifest describes.
pub fn load_manifest(path: &Path) -> Result<(Manifest, MultiViewDataset)> {
    let manifest = Manifest::read(path)?;
    let ds = load_views(&manifest.views, manifest.labels.as_deref())?;
    Ok((manifest, ds))
}

/// Loads each file as one view (samples as rows, stored transposed).
pub fn load_views(paths: &[PathBuf], label_path: Option<&Path>) -> Result<MultiViewDataset> {
    if paths.is_empty() {
        return Err(Error::contract("no view files given"));
    }
    let mut views = Vec::with_capacity(paths.len());
    for path in paths {
        views.push(load_view_csv(path)?);
    }
    let n = views[0].cols();
    for (i, v) in views.iter().enumerate() {
        if v.cols() != n {
            return Err(Error::contract(format!(
                "{} has {} samples but {} has {n}",
                paths[i].display(),
                v.cols(),
                paths[0].display()
            )));
        }
    }
    let truth = label_path.map(load_labels).transpose()?;
    let names = paths
        .iter()
        .map(|p| {
            p.file_stem().map_or_else(
                || p.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            )
        })
        .collect();
    MultiViewDataset::new(views, truth, names)
}

/// Parses one CSV view into a `d x n` matrix.
pub fn load_view_csv(path: &Path) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(idx + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(col, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(col + 1),
            })
            .collect();
        if let Some(col) = parsed.iter().find_map(|r| r.err()) {
            if rows.is_empty() && width.is_none() {
                // header line
                width = Some(record.len());
                continue;
            }
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                column: col,
                message: format!("'{}' is not a finite number", &record[col - 1]),
            });
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                column: record.len().min(expected) + 1,
                message: format!("row has {} fields, expected {expected}", record.len()),
            });
        }
        rows.push(parsed.into_iter().map(|r| r.unwrap_or_default()).collect());
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            message: "no data rows".into(),
        });
    }
    Ok(DenseMatrix::from_rows(&rows)?.transpose())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: i64 = t.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            column: 1,
            message: format!("'{t}' is not an integer label"),
        })?;
        raw.push(v);
    }
    let mut distinct = raw.clone();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(raw
        .iter()
        .map(|v| distinct.binary_search(v).expect("value present"))
        .collect())
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a `d x n` view as CSV with one sample per row. Values use Rust's
/// shortest round-trip formatting, so a reload is bit-exact.
pub fn write_view_csv(path: &Path, view: &DenseMatrix) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for i in 0..view.cols() {
        let line: Vec<String> = (0..view.rows()).map(|f| view[(f, i)].to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes every view, the labels (if any), and a manifest into `dir`.
/// Returns the manifest path.
pub fn save_dataset(ds: &MultiViewDataset, name: &str, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut views = Vec::new();
    for (i, v) in ds.views().iter().enumerate() {
        let file = format!("{}_{i}.csv", sanitize(&ds.names()[i]));
        write_view_csv(&dir.join(&file), v)?;
        views.push(PathBuf::from(file));
    }
    let labels = match ds.truth() {
        Some(t) => {
            write_labels(&dir.join("labels.txt"), t)?;
            Some(PathBuf::from("labels.txt"))
        }
        None => None,
    };
    let manifest = Manifest {
        name: name.to_string(),
        views,
        labels,
    };
    let path = dir.join("dataset.toml");
    manifest.write(&path)?;
    Ok(path)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
