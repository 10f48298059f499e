//! Minimum-cost perfect matching (Kuhn-Munkres with row/column potentials).

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `mapping[row] = column`.
    pub mapping: Vec<usize>,
    pub total_cost: f64,
}

pub fn hungarian(cost: &DenseMatrix) -> Result<Assignment> {
    if !cost.is_square() {
        return Err(Error::contract(format!(
            "hungarian needs a square cost matrix, got {}x{}",
            cost.rows(),
            cost.cols()
        )));
    }
    if !cost.is_finite() {
        return Err(Error::contract(
            "hungarian cost matrix has non-finite entries",
        ));
    }
    let n = cost.rows();
    if n == 0 {
        return Ok(Assignment {
            mapping: vec![],
            total_cost: 0.0,
        });
    }
    // 1-based arrays; index 0 is the virtual row/column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut mapping = vec![0usize; n];
    for j in 1..=n {
        mapping[col_owner[j] - 1] = j - 1;
    }
    let total_cost = mapping.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    Ok(Assignment {
        mapping,
        total_cost,
    })
}
