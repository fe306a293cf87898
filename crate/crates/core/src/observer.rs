//! Derivative-free adaptive observer with a differential-Riccati gain.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, RowVector, Vector};
use crate::plant::Plant;

/// gamma = alpha^2(y, t) / k and mu = 1 + k theta_hat' N theta_hat, the
/// tight choices closing the Lyapunov bound.
pub fn gain_schedules(
    y: f64,
    t: f64,
    theta_hat: &Vector,
    n_mat: &Matrix,
    k_young: f64,
    alpha: &crate::plant::Alpha,
) -> (f64, f64) {
    let a = alpha.eval(y, t);
    let gamma = a * a / k_young;
    let mu = 1.0 + k_young * (theta_hat.transpose() * n_mat * theta_hat)[0];
    (gamma, mu)
}

/// N(t) from Ndot = 2 gamma N + N A' + A N - 2 N C'C N + mu B B', K = N C'.
#[derive(Debug, Clone)]
pub struct RiccatiState {
    n_mat: Matrix,
    a: Matrix,
    bbt: Matrix,
    ctc: Matrix,
    c: RowVector,
    /// symmetry defect of the raw RK4 update before re-symmetrization
    last_symmetry_defect: f64,
}

impl RiccatiState {
    /// N(0) defaults to the identity: symmetric, positive definite and
    /// scale neutral.
    pub fn new(a: Matrix, b: Vector, c: RowVector, n0: Option<Matrix>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || c.ncols() != n {
            return Err(Error::DimensionMismatch("Riccati system matrices".into()));
        }
        let n_mat = n0.unwrap_or_else(|| Matrix::identity(n, n));
        if (n_mat.clone() - n_mat.transpose()).norm() > 1e-9 {
            return Err(Error::InvalidParameter("N(0) must be symmetric".into()));
        }
        let bbt = &b * b.transpose();
        let ctc = c.transpose() * &c;
        Ok(Self {
            n_mat,
            a,
            bbt,
            ctc,
            c,
            last_symmetry_defect: 0.0,
        })
    }

    pub fn n_mat(&self) -> &Matrix {
        &self.n_mat
    }

    /// K = N C'.
    pub fn gain(&self) -> Vector {
        (&self.n_mat * self.c.transpose()).column(0).into_owned()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.n_mat
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn last_symmetry_defect(&self) -> f64 {
        self.last_symmetry_defect
    }

    fn deriv(&self, n: &Matrix, gamma: f64, mu: f64) -> Matrix {
        n * 2.0 * gamma + n * self.a.transpose() + &self.a * n - (n * &self.ctc * n) * 2.0
            + &self.bbt * mu
    }

    /// One RK4 step with the schedules sampled at the step start, mid, end.
    /// The result is re-symmetrized; losing positive definiteness aborts.
    pub fn step3(&mut self, gm3: [(f64, f64); 3], t: f64, dt: f64) -> Result<()> {
        let k1 = self.deriv(&self.n_mat, gm3[0].0, gm3[0].1);
        let k2 = self.deriv(&(&self.n_mat + &k1 * (dt / 2.0)), gm3[1].0, gm3[1].1);
        let k3 = self.deriv(&(&self.n_mat + &k2 * (dt / 2.0)), gm3[1].0, gm3[1].1);
        let k4 = self.deriv(&(&self.n_mat + &k3 * dt), gm3[2].0, gm3[2].1);
        let raw = &self.n_mat + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        self.last_symmetry_defect = (&raw - raw.transpose()).norm();
        self.n_mat = (&raw + raw.transpose()) * 0.5;
        let min_eig = self.min_eigenvalue();
        if min_eig <= 0.0 {
            return Err(Error::RiccatiNotPositive { t, min_eig });
        }
        Ok(())
    }
}

/// State of the final observer xbar.
#[derive(Debug, Clone)]
pub struct ObserverState {
    pub x_bar: Vector,
    divergence_bound: f64,
}

impl ObserverState {
    pub fn new(x0: Vector) -> Self {
        Self {
            x_bar: x0,
            divergence_bound: 1e9,
        }
    }

    pub fn with_divergence_bound(mut self, bound: f64) -> Self {
        self.divergence_bound = bound;
        self
    }

    /// One RK4 step of
    /// xbardot = A xbar + B [u + alpha(y,t) xbar' theta_hat + f_hat] + K (y - C xbar),
    /// with measurements, estimates and gain sampled at start / mid / end.
    #[allow(clippy::too_many_arguments)]
    pub fn step3(
        &mut self,
        plant: &Plant,
        y3: [f64; 3],
        u3: [f64; 3],
        theta3: [&Vector; 3],
        f3: [f64; 3],
        k3: [&Vector; 3],
        t: f64,
        dt: f64,
    ) -> Result<()> {
        let deriv =
            |x: &Vector, y: f64, u: f64, theta: &Vector, f_hat: f64, tau: f64, k: &Vector| {
                let alpha = plant.alpha.eval(y, tau);
                let drive = u + alpha * x.dot(theta) + f_hat;
                let innovation = y - (&plant.c * x)[0];
                &plant.a * x + &plant.b * drive + k * innovation
            };
        let tm = t + dt / 2.0;
        let t1 = t + dt;
        let k1 = deriv(&self.x_bar, y3[0], u3[0], theta3[0], f3[0], t, k3[0]);
        let x2 = &self.x_bar + &k1 * (dt / 2.0);
        let k2 = deriv(&x2, y3[1], u3[1], theta3[1], f3[1], tm, k3[1]);
        let x3 = &self.x_bar + &k2 * (dt / 2.0);
        let k3v = deriv(&x3, y3[1], u3[1], theta3[1], f3[1], tm, k3[1]);
        let x4 = &self.x_bar + &k3v * dt;
        let k4 = deriv(&x4, y3[2], u3[2], theta3[2], f3[2], t1, k3[2]);
        self.x_bar += (k1 + k2 * 2.0 + k3v * 2.0 + k4) * (dt / 6.0);
        let norm = self.x_bar.norm();
        if !norm.is_finite() {
            return Err(Error::NonFiniteState { t: t1 });
        }
        if norm > self.divergence_bound {
            return Err(Error::Divergence { t: t1, norm });
        }
        Ok(())
    }
}
