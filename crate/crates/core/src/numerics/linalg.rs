//! Determinant, adjugate and small spectral helpers.
//!
//! Determinant and adjugate use closed forms up to 3x3 and a partially
//! pivoted LU for larger matrices; the DREM extraction evaluates them on
//! every sample, so they avoid allocation-heavy generic paths.

use super::Matrix;
use crate::error::{Error, Result};
use num_complex::Complex64;

fn require_square(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Determinant of an LU factorization with partial pivoting, done in place.
///
/// Returns 0.0 exactly when a pivot column is entirely zero.
fn lu_determinant_in_place(a: &mut Matrix) -> f64 {
    let n = a.nrows();
    let mut det = 1.0;
    for col in 0..n {
        // pick the largest pivot in this column
        let mut pivot_row = col;
        let mut pivot_abs = a[(col, col)].abs();
        for row in col + 1..n {
            let v = a[(row, col)].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = row;
            }
        }
        if pivot_abs == 0.0 {
            return 0.0;
        }
        if pivot_row != col {
            a.swap_rows(pivot_row, col);
            det = -det;
        }
        let pivot = a[(col, col)];
        det *= pivot;
        for row in col + 1..n {
            let factor = a[(row, col)] / pivot;
            if factor != 0.0 {
                for k in col + 1..n {
                    a[(row, k)] -= factor * a[(col, k)];
                }
            }
        }
    }
    det
}

/// Determinant; exact closed forms for n <= 3, pivoted LU above.
pub fn determinant(m: &Matrix) -> Result<f64> {
    let n = require_square(m)?;
    Ok(match n {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => {
            let mut work = m.clone();
            lu_determinant_in_place(&mut work)
        }
    })
}

/// Adjugate (transposed cofactor matrix), satisfying M adj(M) = det(M) I.
///
/// Closed forms for n <= 3; for n >= 4 each cofactor is the LU determinant
/// of the corresponding minor, which stays well behaved for singular M.
pub fn adjugate(m: &Matrix) -> Result<Matrix> {
    let n = require_square(m)?;
    match n {
        0 => Ok(Matrix::zeros(0, 0)),
        1 => Ok(Matrix::from_element(1, 1, 1.0)),
        2 => Ok(Matrix::from_row_slice(
            2,
            2,
            &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]],
        )),
        3 => {
            let c = |i: usize, j: usize| -> f64 {
                // 2x2 minor with row i and column j removed, with sign
                let r: Vec<usize> = (0..3).filter(|&k| k != i).collect();
                let s: Vec<usize> = (0..3).filter(|&k| k != j).collect();
                let minor = m[(r[0], s[0])] * m[(r[1], s[1])] - m[(r[0], s[1])] * m[(r[1], s[0])];
                if (i + j) % 2 == 0 {
                    minor
                } else {
                    -minor
                }
            };
            let mut adj = Matrix::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    adj[(j, i)] = c(i, j);
                }
            }
            Ok(adj)
        }
        _ => {
            let mut adj = Matrix::zeros(n, n);
            let mut minor = Matrix::zeros(n - 1, n - 1);
            for i in 0..n {
                for j in 0..n {
                    for (mr, r) in (0..n).filter(|&r| r != i).enumerate() {
                        for (mc, c) in (0..n).filter(|&c| c != j).enumerate() {
                            minor[(mr, mc)] = m[(r, c)];
                        }
                    }
                    let cof = lu_determinant_in_place(&mut minor);
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    adj[(j, i)] = sign * cof;
                }
            }
            Ok(adj)
        }
    }
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>> {
    require_square(m)?;
    let eigs = m.clone().complex_eigenvalues();
    Ok(eigs.iter().map(|c| Complex64::new(c.re, c.im)).collect())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// All eigenvalue real parts strictly below -tol.
pub fn is_hurwitz(m: &Matrix, tol: f64) -> Result<bool> {
    Ok(spectral_abscissa(m)? < -tol)
}

/// Numerical rank via singular values, relative threshold `tol * s_max`.
pub fn matrix_rank(m: &Matrix, tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > tol * smax)
        .count()
}
