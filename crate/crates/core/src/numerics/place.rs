//! Observer pole placement via Ackermann's formula (single-output pairs).

use super::{matrix_rank, Matrix, RowVector, Vector};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Gain L such that the spectrum of M - L C equals `poles`.
///
/// Ackermann for the observer form: L = chi(M) O^{-1} e_n, with O the
/// observability matrix of (M, C) and chi the desired characteristic
/// polynomial. Poles must be closed under conjugation; (M, C) must be
/// observable.
pub fn pole_place(m: &Matrix, c: &RowVector, poles: &[Complex64]) -> Result<Vector> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if c.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "C has {} columns, expected {}",
            c.ncols(),
            n
        )));
    }
    if poles.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} poles for an order-{} pair",
            poles.len(),
            n
        )));
    }
    check_self_conjugate(poles)?;

    let obs = observability_matrix(m, c);
    let rank = matrix_rank(&obs, 1e-10);
    if rank < n {
        return Err(Error::Unobservable { rank, n });
    }

    let coeffs = real_monic_coefficients(poles)?;

    // chi(M) by Horner: chi = M^n + a_{n-1} M^{n-1} + ... + a_0 I
    let mut chi = Matrix::identity(n, n);
    for k in (0..n).rev() {
        chi = &chi * m + Matrix::identity(n, n) * coeffs[k];
    }

    // w = O^{-1} e_n
    let mut e_n = Vector::zeros(n);
    e_n[n - 1] = 1.0;
    let w = obs
        .lu()
        .solve(&e_n)
        .ok_or(Error::Unobservable { rank, n })?;
    Ok(chi * w)
}

fn observability_matrix(m: &Matrix, c: &RowVector) -> Matrix {
    let n = m.nrows();
    let mut obs = Matrix::zeros(n, n);
    let mut row = c.clone();
    for i in 0..n {
        obs.set_row(i, &row);
        row = &row * m;
    }
    obs
}

fn check_self_conjugate(poles: &[Complex64]) -> Result<()> {
    let tol = 1e-9;
    let mut unmatched: Vec<Complex64> =
        poles.iter().cloned().filter(|p| p.im.abs() > tol).collect();
    while let Some(p) = unmatched.pop() {
        let conj = p.conj();
        match unmatched
            .iter()
            .position(|q| (q - conj).norm() <= tol * (1.0 + p.norm()))
        {
            Some(idx) => {
                unmatched.swap_remove(idx);
            }
            None => return Err(Error::PolesNotSelfConjugate),
        }
    }
    Ok(())
}

/// Coefficients a_0..a_{n-1} of prod (p - p_i) = p^n + a_{n-1} p^{n-1} + ... + a_0.
fn real_monic_coefficients(poles: &[Complex64]) -> Result<Vec<f64>> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); poles.len() + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    let mut degree = 0;
    for p in poles {
        degree += 1;
        for k in (1..=degree).rev() {
            coeffs[k] = coeffs[k - 1] * (-p) + coeffs[k];
        }
    }
    // coeffs[k] currently multiplies p^{degree-k}; reorder to ascending powers
    let n = poles.len();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let c = coeffs[n - k];
        if c.im.abs() > 1e-8 * (1.0 + c.re.abs()) {
            return Err(Error::PolesNotSelfConjugate);
        }
        out[k] = c.re;
    }
    Ok(out)
}
