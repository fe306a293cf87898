//! Kreisselmeier regressor extension and DREM direct estimation with
//! determinant clamping, low-pass smoothing and the freeze-at-t_D rule.

use crate::error::{Error, Result};
use crate::numerics::{adjugate, determinant, Matrix, Vector};

/// Filtered outer-product accumulators Phi and Y.
#[derive(Debug, Clone)]
pub struct KreisselmeierState {
    pub phi: Matrix,
    pub y: Vector,
    pub h: f64,
    dim: usize,
}

impl KreisselmeierState {
    pub fn new(dim: usize, h: f64) -> Result<Self> {
        if h < 0.0 || !h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "forgetting rate must be >= 0, got {h}"
            )));
        }
        Ok(Self {
            phi: Matrix::zeros(dim, dim),
            y: Vector::zeros(dim),
            h,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One RK4 step of Phidot = -h Phi + m m', Ydot = -h Y + m q, with the
    /// regressor and measurement sampled at the step start, mid and end.
    pub fn step3(&mut self, m3: [&Vector; 3], q3: [f64; 3], dt: f64) {
        let h = self.h;
        let outer = |m: &Vector| m * m.transpose();
        let (o0, om, o1) = (outer(m3[0]), outer(m3[1]), outer(m3[2]));

        let k1 = &self.phi * (-h) + &o0;
        let k2 = (&self.phi + &k1 * (dt / 2.0)) * (-h) + &om;
        let k3 = (&self.phi + &k2 * (dt / 2.0)) * (-h) + &om;
        let k4 = (&self.phi + &k3 * dt) * (-h) + &o1;
        self.phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

        let k1 = &self.y * (-h) + m3[0] * q3[0];
        let k2 = (&self.y + &k1 * (dt / 2.0)) * (-h) + m3[1] * q3[1];
        let k3 = (&self.y + &k2 * (dt / 2.0)) * (-h) + m3[1] * q3[1];
        let k4 = (&self.y + &k3 * dt) * (-h) + m3[2] * q3[2];
        self.y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }

    /// Convenience for constant-over-step inputs.
    pub fn step(&mut self, m: &Vector, q: f64, dt: f64) {
        self.step3([m, m, m], [q, q, q], dt);
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.phi + self.phi.transpose()) * 0.5;
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Element-wise direct estimate with determinant clamping.
#[derive(Debug, Clone)]
pub struct DremEstimate {
    pub k_hat: Vector,
    pub delta: f64,
    pub upsilon: Vector,
    pub clamped: bool,
}

impl DremEstimate {
    /// || Phi (Upsilon / Delta) - Y ||, meaningful when not clamped.
    pub fn cramer_residual(&self, state: &KreisselmeierState) -> f64 {
        (&state.phi * (&self.upsilon / self.delta) - &state.y).norm()
    }
}

/// Delta = det(Phi), Upsilon = Adj(Phi) Y, k_i = Upsilon_i / max(Delta, eps).
pub fn drem_extract(state: &KreisselmeierState, eps: f64) -> Result<DremEstimate> {
    if eps <= 0.0 {
        return Err(Error::InvalidParameter("clamp must be positive".into()));
    }
    let delta = determinant(&state.phi)?;
    let upsilon = adjugate(&state.phi)? * &state.y;
    let denom = delta.max(eps);
    Ok(DremEstimate {
        k_hat: &upsilon / denom,
        delta,
        upsilon,
        clamped: delta <= eps,
    })
}

/// Element-wise first-order low-pass sigma / (p + sigma).
#[derive(Debug, Clone)]
pub struct Smoother {
    sigma: f64,
    state: Vector,
}

impl Smoother {
    pub fn new(sigma: f64, dim: usize) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "smoothing parameter must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            sigma,
            state: Vector::zeros(dim),
        })
    }

    pub fn value(&self) -> &Vector {
        &self.state
    }

    /// RK4 step with the input interpolated between consecutive samples.
    pub fn step(&mut self, prev: &Vector, next: &Vector, dt: f64) -> &Vector {
        let s = self.sigma;
        let mid = (prev + next) * 0.5;
        let k1 = (prev - &self.state) * s;
        let k2 = (&mid - (&self.state + &k1 * (dt / 2.0))) * s;
        let k3 = (&mid - (&self.state + &k2 * (dt / 2.0))) * s;
        let k4 = (next - (&self.state + &k3 * dt)) * s;
        self.state += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        &self.state
    }
}

/// Frozen stage-1 estimates.
#[derive(Debug, Clone)]
pub struct FrozenEstimates {
    pub k_hat: Vector,
    pub params: ParameterEstimate,
    pub at: f64,
    /// true when freezing had to wait past t_freeze for the determinant
    pub deferred: bool,
}

/// Holds the estimate stream constant from the configured time onward,
/// waiting for the first unclamped sample if the determinant is still below
/// the clamp at that time.
#[derive(Debug, Clone)]
pub struct EstimateFreezer {
    t_freeze: f64,
    frozen: Option<FrozenEstimates>,
}

impl EstimateFreezer {
    pub fn new(t_freeze: f64) -> Result<Self> {
        if t_freeze < 0.0 {
            return Err(Error::InvalidParameter("freeze time must be >= 0".into()));
        }
        Ok(Self {
            t_freeze,
            frozen: None,
        })
    }

    pub fn frozen(&self) -> Option<&FrozenEstimates> {
        self.frozen.as_ref()
    }

    /// Feed one smoothed estimate sample; freezes at the first unclamped
    /// sample at or after the freeze time.
    pub fn update(&mut self, t: f64, k_hat: &Vector, clamped: bool) -> Option<&FrozenEstimates> {
        if self.frozen.is_none() && t >= self.t_freeze && !clamped {
            self.frozen = Some(FrozenEstimates {
                k_hat: k_hat.clone(),
                params: extract_parameters(k_hat),
                at: t,
                deferred: t > self.t_freeze + 1e-12,
            });
        }
        self.frozen.as_ref()
    }
}

/// Generator initial condition and frequency pulled out of k.
#[derive(Debug, Clone)]
pub struct ParameterEstimate {
    pub xi0: Vector,
    pub omega: f64,
    /// || k_{m+1} k_{1..m} - k_{m+2..} ||, the redundancy defect
    pub consistency: f64,
    /// the omega^2 entry came out negative beyond tolerance
    pub omega_sq_negative: bool,
}

/// Split k = [xi(0); w^2; w^2 xi(0)]: xi0 from the head, omega from the
/// middle entry, with the redundant tail reported as a consistency score.
pub fn extract_parameters(k_hat: &Vector) -> ParameterEstimate {
    let d = k_hat.len();
    debug_assert!(d >= 3 && d % 2 == 1, "k has dimension 2m+1");
    let md = (d - 1) / 2;
    let xi0 = Vector::from_iterator(md, (0..md).map(|i| k_hat[i]));
    let omega_sq = k_hat[md];
    let omega_sq_negative = omega_sq < -1e-9;
    let omega = omega_sq.max(0.0).sqrt();
    let mut defect = 0.0;
    for i in 0..md {
        let diff = omega_sq * k_hat[i] - k_hat[md + 1 + i];
        defect += diff * diff;
    }
    ParameterEstimate {
        xi0,
        omega,
        consistency: defect.sqrt(),
        omega_sq_negative,
    }
}
