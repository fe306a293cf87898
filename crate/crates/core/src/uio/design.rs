//! Observer gain synthesis: the input-decoupling conditions, pole placement
//! for F = M - LC, and the star condition L + F^r G = 0 that yields immediate
//! state reconstruction.

use crate::error::{Error, Result};
use crate::numerics::{
    eigenvalues, is_hurwitz, pole_place, spectral_abscissa, Matrix, RowVector, Vector,
};
use num_complex::Complex64;

/// Smallest r >= 1 with C A^{r-1} B != 0; errors if none exists up to n.
pub fn relative_degree(a: &Matrix, b: &Vector, c: &RowVector) -> Result<usize> {
    let n = a.nrows();
    let mut row = c.clone();
    for r in 1..=n {
        let markov = (&row * b)[0];
        if markov.abs() > 1e-12 * (1.0 + row.norm() * b.norm()) {
            return Ok(r);
        }
        row = &row * a;
    }
    Err(Error::NoRelativeDegree)
}

/// Gains of the unknown-input observer.
#[derive(Debug, Clone, PartialEq)]
pub struct UioGains {
    pub g: Vector,
    pub m: Matrix,
    pub l: Vector,
    pub f: Matrix,
    pub r: usize,
    /// true when L + F^r G vanishes to 1e-8, enabling immediate reconstruction
    pub star: bool,
}

/// Residuals of the defining gain equations.
#[derive(Debug, Clone, Copy)]
pub struct GainResiduals {
    /// || B - G C A^{r-1} B ||
    pub input_decoupling: f64,
    /// || M - A + G C A^r ||
    pub m_equation: f64,
    /// || F - M + L C ||
    pub f_equation: f64,
    /// || L + F^r G ||
    pub star: f64,
}

impl UioGains {
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    /// F^k G.
    pub fn f_power_g(&self, k: usize) -> Vector {
        let mut v = self.g.clone();
        for _ in 0..k {
            v = &self.f * v;
        }
        v
    }

    pub fn star_residual(&self) -> f64 {
        (&self.l + self.f_power_g(self.r)).norm()
    }

    pub fn residuals(&self, a: &Matrix, b: &Vector, c: &RowVector) -> GainResiduals {
        let mut ca = c.clone();
        for _ in 0..self.r - 1 {
            ca = &ca * a;
        }
        let markov = (&ca * b)[0];
        let ca_r = &ca * a;
        GainResiduals {
            input_decoupling: (b - &self.g * markov).norm(),
            m_equation: (&self.m - a + &self.g * ca_r).norm(),
            f_equation: (&self.f - &self.m + &self.l * c.clone()).norm(),
            star: self.star_residual(),
        }
    }
}

/// Rebuild F = M - LC and refresh the star flag after replacing L.
fn with_gain(m: &Matrix, g: &Vector, c: &RowVector, l: Vector, r: usize) -> UioGains {
    let f = m - &l * c;
    let mut gains = UioGains {
        g: g.clone(),
        m: m.clone(),
        l,
        f,
        r,
        star: false,
    };
    gains.star = gains.star_residual() <= 1e-8;
    gains
}

/// Synthesize (G, M, L, F) for the given relative degree and observer poles.
///
/// G = B [(C A^{r-1} B)' C A^{r-1} B]^{-1} (C A^{r-1} B)', M = A - G C A^r,
/// L by Ackermann on (M, C), F = M - L C verified Hurwitz. The returned
/// star flag reports whether the placed gain already satisfies L + F^r G = 0.
pub fn design_gains(
    a: &Matrix,
    b: &Vector,
    c: &RowVector,
    r: usize,
    poles: &[Complex64],
) -> Result<UioGains> {
    let n = a.nrows();
    if r == 0 || r > n {
        return Err(Error::InvalidParameter(format!(
            "relative degree {r} out of range for order {n}"
        )));
    }
    let mut ca = c.clone();
    for _ in 0..r - 1 {
        ca = &ca * a;
    }
    let markov = (&ca * b)[0];
    // solvability: rank(C A^{r-1} B) = rank(B); for a SISO column this is
    // a scalar non-vanishing test
    if markov.abs() <= 1e-12 * (1.0 + ca.norm() * b.norm()) || b.norm() == 0.0 {
        return Err(Error::RankCondition);
    }
    let g = b / markov;
    let ca_r = &ca * a;
    let m = a - &g * ca_r;

    check_detectable(c, &m)?;

    let l = place_detectable(&m, c, poles)?;
    let gains = with_gain(&m, &g, c, l, r);
    if !is_hurwitz(&gains.f, 0.0)? {
        return Err(Error::NonHurwitz {
            abscissa: spectral_abscissa(&gains.f)?,
        });
    }
    Ok(gains)
}

/// Pole placement for a detectable pair: Ackermann when (C, M) is fully
/// observable, otherwise placement restricted to the observable subspace.
///
/// (C, M) is structurally rank deficient whenever C G = 1 (the r = 1 case
/// forces C M = 0), so only the first rank-many requested poles can be
/// assigned; the unobservable spectrum is untouched and must already be
/// stable, which the detectability test guarantees.
fn place_detectable(m: &Matrix, c: &RowVector, poles: &[Complex64]) -> Result<Vector> {
    let n = m.nrows();
    let mut obs = Matrix::zeros(n, n);
    let mut row = c.clone();
    for i in 0..n {
        obs.set_row(i, &row);
        row = &row * m;
    }
    let svd = obs.clone().svd(false, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax.max(1.0))
        .count();
    if rank == n {
        return pole_place(m, c, poles);
    }
    // columns of V: first `rank` span the observable subspace, the rest its
    // M-invariant orthogonal complement (the kernel of the observability map)
    let v = svd.v_t.expect("v_t requested").transpose();
    let v1 = v.columns(0, rank).into_owned();
    let m11 = v1.transpose() * m * &v1;
    let c1: RowVector = (c * &v1).row(0).into_owned();
    let l1 = pole_place(&m11, &c1, &poles[..rank])?;
    Ok(v1 * l1)
}

/// PBH test at every eigenvalue of M with non-negative real part.
fn check_detectable(c: &RowVector, m: &Matrix) -> Result<()> {
    let n = m.nrows();
    let tol = 1e-9;
    for eig in eigenvalues(m)? {
        if eig.re < -tol {
            continue;
        }
        // rank [eig I - M; C] over the complex field
        let mut pencil = nalgebra::DMatrix::<Complex64>::zeros(n + 1, n);
        for i in 0..n {
            for j in 0..n {
                pencil[(i, j)] = -Complex64::new(m[(i, j)], 0.0);
            }
            pencil[(i, i)] += eig;
        }
        for j in 0..n {
            pencil[(n, j)] = Complex64::new(c[j], 0.0);
        }
        let svd = pencil.svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > tol * smax.max(1.0))
            .count();
        if rank < n {
            return Err(Error::Undetectable);
        }
    }
    Ok(())
}

/// Find L satisfying both F = M - LC and L = -F^r G with F Hurwitz.
///
/// Damped fixed-point iteration L <- -(M - L C)^r G seeded by `seed_l`
/// (normally the pole-placement gain); a scalar polynomial solve covers
/// n = 1, where the fixed point reduces to a root-finding problem.
pub fn solve_star_condition(
    m: &Matrix,
    g: &Vector,
    c: &RowVector,
    r: usize,
    seed_l: &Vector,
) -> Result<(Vector, Matrix)> {
    let n = m.nrows();
    if n == 1 {
        return solve_star_scalar(m[(0, 0)], g[0], c[0], r);
    }
    let residual = |l: &Vector| -> f64 {
        let f = m - l * c;
        let mut v = g.clone();
        for _ in 0..r {
            v = &f * v;
        }
        (l + v).norm()
    };
    let target = |l: &Vector| -> Vector {
        let f = m - l * c;
        let mut v = g.clone();
        for _ in 0..r {
            v = &f * v;
        }
        -v
    };

    let mut l = seed_l.clone();
    let mut res = residual(&l);
    let mut beta = 1.0;
    let tol = 1e-10;
    for iter in 0..500 {
        if res <= tol {
            let f = m - &l * c;
            if !is_hurwitz(&f, 0.0)? {
                return Err(Error::NonHurwitz {
                    abscissa: spectral_abscissa(&f)?,
                });
            }
            return Ok((l, f));
        }
        let candidate = &l * (1.0 - beta) + target(&l) * beta;
        let cand_res = residual(&candidate);
        if cand_res < res {
            l = candidate;
            res = cand_res;
            beta = (beta * 2.0).min(1.0);
        } else {
            beta /= 2.0;
            if beta < 1e-8 {
                return Err(Error::StarConditionFailed {
                    residual: res,
                    iterations: iter,
                });
            }
        }
    }
    Err(Error::StarConditionFailed {
        residual: res,
        iterations: 500,
    })
}

/// n = 1: l + g (m - c l)^r = 0 is a degree-r polynomial in l; take the real
/// root whose F = m - lc is the most stable.
fn solve_star_scalar(m: f64, g: f64, c: f64, r: usize) -> Result<(Vector, Matrix)> {
    // expand g (m - c l)^r = sum_j g C(r,j) m^{r-j} (-c)^j l^j, add l
    let mut coeffs = vec![0.0; r + 1];
    let mut binom = 1.0;
    for j in 0..=r {
        if j > 0 {
            binom = binom * ((r - j + 1) as f64) / (j as f64);
        }
        coeffs[j] += g * binom * m.powi((r - j) as i32) * (-c).powi(j as i32);
    }
    coeffs[1] += 1.0;
    let roots = real_polynomial_roots(&coeffs)?;
    let mut best: Option<(f64, f64)> = None; // (l, f)
    for l in roots {
        let f = m - l * c;
        if f < 0.0 && best.map(|(_, bf)| f < bf).unwrap_or(true) {
            best = Some((l, f));
        }
    }
    match best {
        Some((l, f)) => Ok((Vector::from_element(1, l), Matrix::from_element(1, 1, f))),
        None => Err(Error::NonHurwitz { abscissa: 0.0 }),
    }
}

/// Real roots of sum coeffs[j] x^j via the companion-matrix spectrum.
fn real_polynomial_roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    let mut c = coeffs.to_vec();
    while c.len() > 1 && c.last().copied() == Some(0.0) {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let mut companion = Matrix::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for j in 0..deg {
        companion[(j, deg - 1)] = -c[j] / lead;
    }
    Ok(eigenvalues(&companion)?
        .into_iter()
        .filter(|e| e.im.abs() <= 1e-9 * (1.0 + e.re.abs()))
        .map(|e| e.re)
        .collect())
}
