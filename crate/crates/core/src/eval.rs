//! Clustering quality metrics and the cross-view magnitude diagnostic.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{hungarian, DenseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub acc: f64,
    pub nmi: f64,
    pub consensus_ratio: f64,
    pub per_view_norms: Vec<f64>,
}

impl MetricReport {
    pub fn compute(pred: &[usize], truth: &[usize], per_view: &[DenseMatrix]) -> Result<Self> {
        Ok(Self {
            acc: accuracy(pred, truth)?,
            nmi: nmi(pred, truth)?,
            consensus_ratio: consensus_ratio(per_view)?,
            per_view_norms: per_view.iter().map(DenseMatrix::frobenius_norm).collect(),
        })
    }

    /// `key=value` lines, one per field.
    pub fn to_key_values(&self) -> String {
        let norms: Vec<String> = self
            .per_view_norms
            .iter()
            .map(|v| format!("{v:.12}"))
            .collect();
        format!(
            "acc={:.12}\nnmi={:.12}\nconsensus_ratio={:.12}\nper_view_norms={}\n",
            self.acc,
            self.nmi,
            self.consensus_ratio,
            norms.join(",")
        )
    }
}

/// Relabels to `0..k` in order of first appearance.
pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(p) => p,
            None => {
                seen.push(*l);
                seen.len() - 1
            }
        })
        .collect()
}

fn contingency(pred: &[usize], truth: &[usize]) -> Result<(Vec<Vec<f64>>, usize, usize)> {
    if pred.len() != truth.len() {
        return Err(Error::contract(format!(
            "label vectors differ in length: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    let p = canonicalize(pred);
    let t = canonicalize(truth);
    let kp = p.iter().max().map_or(0, |m| m + 1);
    let kt = t.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0.0; kt]; kp];
    for (&a, &b) in p.iter().zip(&t) {
        table[a][b] += 1.0;
    }
    Ok((table, kp, kt))
}

/// Fraction of samples correctly labeled under the best one-to-one matching
/// of predicted clusters to true classes.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let (table, kp, kt) = contingency(pred, truth)?;
    let n = pred.len();
    if n == 0 {
        return Ok(1.0);
    }
    let k = kp.max(kt);
    let cost = DenseMatrix::from_fn(
        k,
        k,
        |i, j| {
            if i < kp && j < kt {
                -table[i][j]
            } else {
                0.0
            }
        },
    );
    let matched = -hungarian(&cost)?.total_cost;
    Ok(matched / n as f64)
}

/// Normalized mutual information with geometric-mean normalization.
///
/// If either partition has a single cluster the mutual information is zero,
/// and the score is 0 unless both are single-cluster, which scores 1.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let (table, kp, kt) = contingency(pred, truth)?;
    let n = pred.len() as f64;
    if kp <= 1 || kt <= 1 {
        return Ok(if kp == kt { 1.0 } else { 0.0 });
    }
    let row: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<f64> = (0..kt).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let entropy = |counts: &[f64]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| {
                let p = c / n;
                -p * p.ln()
            })
            .sum()
    };
    let mut mi = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &nij) in r.iter().enumerate() {
            if nij > 0.0 {
                mi += nij / n * (n * nij / (row[i] * col[j])).ln();
            }
        }
    }
    let denom = (entropy(&row) * entropy(&col)).sqrt();
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Largest over smallest Frobenius norm across the inputs.
pub fn consensus_ratio(per_view: &[DenseMatrix]) -> Result<f64> {
    if per_view.is_empty() {
        return Err(Error::contract("consensus ratio of an empty list"));
    }
    let norms: Vec<f64> = per_view.iter().map(DenseMatrix::frobenius_norm).collect();
    if let Some(i) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::contract(format!("matrix {i} is all zero")));
    }
    let max = norms.iter().cloned().fold(f64::MIN, f64::max);
    let min = norms.iter().cloned().fold(f64::MAX, f64::min);
    Ok(max / min)
}

/// `max_{i,j} ‖A_i − A_j‖_F`; zero for fewer than two inputs.
pub fn consensus_spread(per_view: &[DenseMatrix]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..per_view.len() {
        for j in (i + 1)..per_view.len() {
            if let Ok(d) = per_view[i].sub(&per_view[j]) {
                worst = worst.max(d.frobenius_norm());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_and_relabelled() {
        let truth = vec![0, 0, 1, 1, 2, 2];
        assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
        let relabel = vec![2, 2, 0, 0, 1, 1];
        assert_eq!(accuracy(&relabel, &truth).unwrap(), 1.0);
        assert!((nmi(&relabel, &truth).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_of_six() {
        let truth = vec![0, 0, 0, 1, 1, 1];
        let pred = vec![0, 0, 1, 1, 1, 0];
        // Both matchings, enumerated by hand: identity agrees on 4, swap on 2.
        let identity = pred.iter().zip(&truth).filter(|(p, t)| p == t).count();
        let swapped = pred
            .iter()
            .zip(&truth)
            .filter(|(p, t)| 1 - **p == **t)
            .count();
        let oracle = identity.max(swapped) as f64 / 6.0;
        assert_eq!(oracle, 4.0 / 6.0);
        assert!((accuracy(&pred, &truth).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn constant_prediction_has_zero_nmi() {
        let truth = vec![0, 1, 0, 1, 0, 1];
        assert_eq!(nmi(&[0; 6], &truth).unwrap(), 0.0);
        assert_eq!(nmi(&[3; 6], &[1; 6]).unwrap(), 1.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(accuracy(&[0, 1], &[0]).is_err());
        assert!(nmi(&[0, 1], &[0]).is_err());
    }

    fn nmi_oracle(a: &[usize], b: &[usize], k: usize) -> f64 {
        let n = a.len() as f64;
        let mut joint = vec![vec![0.0; k]; k];
        for (&x, &y) in a.iter().zip(b) {
            joint[x][y] += 1.0 / n;
        }
        let pa: Vec<f64> = (0..k).map(|i| (0..k).map(|j| joint[i][j]).sum()).collect();
        let pb: Vec<f64> = (0..k).map(|j| (0..k).map(|i| joint[i][j]).sum()).collect();
        let mut mi = 0.0;
        for i in 0..k {
            for j in 0..k {
                if joint[i][j] > 0.0 {
                    mi += joint[i][j] * (joint[i][j] / (pa[i] * pb[j])).ln();
                }
            }
        }
        let h = |p: &[f64]| -> f64 { p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum() };
        mi / (h(&pa) * h(&pb)).sqrt()
    }

    #[test]
    fn random_labelings_match_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let a: Vec<usize> = (0..100).map(|_| rng.gen_range(0..4)).collect();
            let b: Vec<usize> = (0..100).map(|_| rng.gen_range(0..4)).collect();
            let got = nmi(&a, &b).unwrap();
            assert!((got - nmi_oracle(&a, &b, 4)).abs() < 1e-12);
            assert!(got < 0.15);
        }
    }

    #[test]
    fn consensus_ratio_cases() {
        let a = DenseMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 + 1.0);
        assert_eq!(consensus_ratio(&[a.clone(), a.clone()]).unwrap(), 1.0);
        assert!((consensus_ratio(&[a.clone(), a.scale(2.0)]).unwrap() - 2.0).abs() < 1e-15);
        assert!(consensus_ratio(&[a, DenseMatrix::zeros(3, 2)]).is_err());
        assert!(consensus_ratio(&[]).is_err());
    }

    proptest! {
        #[test]
        fn metric_properties(
            pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60),
            shift in 0usize..60,
            scale in 0.1f64..10.0,
        ) {
            let pred: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let acc = accuracy(&pred, &truth).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
            prop_assert!((acc - accuracy(&truth, &pred).unwrap()).abs() < 1e-12);

            let n = pred.len();
            let rot = |v: &[usize]| -> Vec<usize> { (0..n).map(|i| v[(i + shift) % n]).collect() };
            prop_assert!((acc - accuracy(&rot(&pred), &rot(&truth)).unwrap()).abs() < 1e-12);

            let relabeled: Vec<usize> = pred.iter().map(|&p| 3 - p).collect();
            prop_assert!((acc - accuracy(&relabeled, &truth).unwrap()).abs() < 1e-12);

            let v = nmi(&pred, &truth).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            prop_assert!((v - nmi(&truth, &pred).unwrap()).abs() < 1e-12);
            prop_assert!((v - nmi(&relabeled, &truth).unwrap()).abs() < 1e-12);

            let a = DenseMatrix::from_fn(2, 2, |i, j| (i + j) as f64 + 1.0);
            let b = a.scale(3.0);
            let r1 = consensus_ratio(&[a.clone(), b.clone()]).unwrap();
            let r2 = consensus_ratio(&[a.scale(scale), b.scale(scale)]).unwrap();
            prop_assert!((r1 - r2).abs() < 1e-12);
        }
    }
}
