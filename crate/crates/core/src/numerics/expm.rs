//! Matrix exponential by scaling and squaring.

use super::Matrix;
use crate::error::{Error, Result};

/// e^M via scaling-and-squaring with a truncated Taylor core.
///
/// The argument is scaled so that its 1-norm is below 0.5, the series is
/// summed to machine precision, and the result squared back. Accurate to
/// better than 1e-12 for the small dense matrices used here.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let norm = one_norm(m);
    if !norm.is_finite() {
        return Err(Error::InvalidParameter("non-finite matrix in expm".into()));
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings as i32);

    // Taylor series on the scaled matrix; terms fall like 0.5^k / k!
    let mut result = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..64 {
        term = &term * &scaled / (k as f64);
        result += &term;
        if one_norm(&term) < 1e-18 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// e^{gamma t}.
pub fn matrix_exponential(gamma: &Matrix, t: f64) -> Result<Matrix> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(
            "non-finite time in matrix_exponential".into(),
        ));
    }
    expm(&(gamma * t))
}

fn one_norm(m: &Matrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
