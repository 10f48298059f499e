//! Small dense linear solves: Cholesky for SPD systems, LU with partial
//! pivoting for the general square case.

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

/// Solves `a * x = b` for symmetric positive definite `a`.
///
/// A pivot at or below `1e-12 * ‖a‖_F` is reported as [`Error::Singular`]
/// with its index.
pub fn solve_spd(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_system(a, b, "solve_spd")?;
    let l = cholesky(a)?;
    let n = a.rows();
    let mut x = b.clone();
    for col in 0..b.cols() {
        // forward: L y = b
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::contract(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let floor = 1e-12 * a.frobenius_norm();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::Singular { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `a * x = b` for a general square `a` by LU with partial pivoting.
pub fn solve_general(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    check_system(a, b, "solve_general")?;
    let n = a.rows();
    let m = b.cols();
    let mut lu = a.clone();
    let mut x = b.clone();
    let floor = 1e-14 * a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let (pivot_row, pivot_abs) =
            (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if pivot_abs <= floor {
            return Err(Error::Singular {
                pivot: k,
                value: lu[(pivot_row, k)],
            });
        }
        if pivot_row != k {
            swap_rows(&mut lu, k, pivot_row);
            swap_rows(&mut x, k, pivot_row);
        }
        let pivot = lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            lu[(i, k)] = 0.0;
            for j in (k + 1)..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= f * v;
            }
            for j in 0..m {
                let v = x[(k, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for i in (0..n).rev() {
        for j in 0..m {
            let mut s = x[(i, j)];
            for k in (i + 1)..n {
                s -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

fn swap_rows(m: &mut DenseMatrix, a: usize, b: usize) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    for j in 0..cols {
        data.swap(a * cols + j, b * cols + j);
    }
}

fn check_system(a: &DenseMatrix, b: &DenseMatrix, op: &str) -> Result<()> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::contract(format!(
            "{op}: system {}x{} with right-hand side {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sym_eig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let g = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut a = g.t_matmul(&g).unwrap();
        a.add_diagonal(0.5);
        a
    }

    /// Plain Gaussian elimination with partial pivoting on an augmented copy.
    fn gauss_oracle(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
        let n = a.rows();
        let mut aug: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = a.row(i).to_vec();
                r.push(b[i]);
                r
            })
            .collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| aug[i][k].abs().total_cmp(&aug[j][k].abs()))
                .unwrap();
            aug.swap(k, p);
            for i in (k + 1)..n {
                let f = aug[i][k] / aug[k][k];
                for j in k..=n {
                    aug[i][j] -= f * aug[k][j];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| aug[i][j] * x[j]).sum();
            x[i] = (aug[i][n] - s) / aug[i][i];
        }
        x
    }

    #[test]
    fn identity_returns_rhs() {
        let b = DenseMatrix::from_rows(&[vec![1.0], vec![-2.0], vec![3.0]]).unwrap();
        assert_eq!(solve_spd(&DenseMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_system() {
        let a = DenseMatrix::from_diag(&[2.0, 4.0]);
        let b = DenseMatrix::from_rows(&[vec![2.0], vec![8.0]]).unwrap();
        let x = solve_spd(&a, &b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_matches_gauss_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_spd(8, &mut rng);
        let b: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bm = DenseMatrix::from_vec(8, 1, b.clone()).unwrap();
        let x = solve_spd(&a, &bm).unwrap();
        let residual = a.matmul(&x).unwrap().sub(&bm).unwrap().frobenius_norm();
        assert!(residual / bm.frobenius_norm() < 1e-9);
        let oracle = gauss_oracle(&a, &b);
        for (u, v) in x.as_slice().iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn agrees_with_eigen_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3, 6, 10] {
            let a = random_spd(n, &mut rng);
            let b = DenseMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
            let e = sym_eig(&a).unwrap();
            let inv_diag: Vec<f64> = e.values.iter().map(|v| 1.0 / v).collect();
            let inv = e
                .vectors
                .matmul(&DenseMatrix::from_diag(&inv_diag))
                .unwrap()
                .matmul_t(&e.vectors)
                .unwrap();
            let via_eig = inv.matmul(&b).unwrap();
            let via_chol = solve_spd(&a, &b).unwrap();
            assert!(via_eig.sub(&via_chol).unwrap().max_abs() < 1e-8);
        }
    }

    #[test]
    fn indefinite_reports_pivot() {
        let a = DenseMatrix::from_diag(&[1.0, -1.0, 2.0]);
        let b = DenseMatrix::zeros(3, 1);
        match solve_spd(&a, &b) {
            Err(Error::Singular { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn general_solver_handles_indefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DenseMatrix::from_fn(9, 9, |_, _| rng.gen_range(-1.0..1.0));
        let b: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = solve_general(&a, &DenseMatrix::from_vec(9, 1, b.clone()).unwrap()).unwrap();
        for (u, v) in x.as_slice().iter().zip(gauss_oracle(&a, &b)) {
            assert!((u - v).abs() < 1e-9);
        }
        let singular = DenseMatrix::zeros(2, 2);
        assert!(matches!(
            solve_general(&singular, &DenseMatrix::zeros(2, 1)),
            Err(Error::Singular { pivot: 0, .. })
        ));
    }
}
