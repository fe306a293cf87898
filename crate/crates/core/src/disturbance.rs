//! Disturbance recovery: the filtered disturbance from the regression
//! streams, a second Kreisselmeier/DREM stage on the sin/cos regressor for
//! the amplitude pair, and closed-form (phasor) inversion of the filter.

use crate::drem::{drem_extract, KreisselmeierState, Smoother};
use crate::error::{Error, Result};
use crate::numerics::{RowVector, Vector};
use num_complex::Complex64;

/// fbar = b_bar q_r - Sbar xi0_hat, the filtered disturbance.
pub fn compute_fbar(q_bar: f64, s_bar: &RowVector, xi0_hat: &Vector) -> f64 {
    q_bar - (s_bar * xi0_hat)[0]
}

/// Sample of the amplitude stage.
#[derive(Debug, Clone)]
pub struct AmplitudeSample {
    /// smoothed coefficient estimates (a1, a2)
    pub a_hat: (f64, f64),
    /// unsmoothed direct estimates
    pub a_raw: (f64, f64),
    pub delta: f64,
    pub clamped: bool,
}

/// Second DREM stage on psi(t) = [sin wt, cos wt] with measurement fbar.
#[derive(Debug, Clone)]
pub struct AmplitudeEstimator {
    omega: f64,
    eps: f64,
    state: KreisselmeierState,
    smoother: Smoother,
    last_raw: Vector,
}

impl AmplitudeEstimator {
    pub fn new(omega: f64, h_a: f64, eps_a: f64, sigma: f64) -> Result<Self> {
        if omega <= 0.0 || !omega.is_finite() {
            return Err(Error::ZeroFrequency);
        }
        if eps_a <= 0.0 {
            return Err(Error::InvalidParameter("clamp must be positive".into()));
        }
        Ok(Self {
            omega,
            eps: eps_a,
            state: KreisselmeierState::new(2, h_a)?,
            smoother: Smoother::new(sigma, 2)?,
            last_raw: Vector::zeros(2),
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    fn psi(&self, t: f64) -> Vector {
        Vector::from_vec(vec![(self.omega * t).sin(), (self.omega * t).cos()])
    }

    /// Advance one step with fbar sampled at the step start, mid and end.
    pub fn step3(&mut self, t: f64, fbar3: [f64; 3], dt: f64) -> Result<AmplitudeSample> {
        let p0 = self.psi(t);
        let pm = self.psi(t + dt / 2.0);
        let p1 = self.psi(t + dt);
        self.state.step3([&p0, &pm, &p1], fbar3, dt);
        let est = drem_extract(&self.state, self.eps)?;
        let smoothed = self.smoother.step(&self.last_raw, &est.k_hat, dt).clone();
        self.last_raw = est.k_hat.clone();
        Ok(AmplitudeSample {
            a_hat: (smoothed[0], smoothed[1]),
            a_raw: (est.k_hat[0], est.k_hat[1]),
            delta: est.delta,
            clamped: est.clamped,
        })
    }
}

/// Pure sinusoid a1 sin(w t) + a2 cos(w t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub a1: f64,
    pub a2: f64,
    pub omega: f64,
}

impl Sinusoid {
    pub fn eval(&self, t: f64) -> f64 {
        self.a1 * (self.omega * t).sin() + self.a2 * (self.omega * t).cos()
    }

    pub fn amplitude(&self) -> f64 {
        (self.a1 * self.a1 + self.a2 * self.a2).sqrt()
    }

    /// Phase of the sin-referenced form: A sin(w t + phase).
    pub fn phase(&self) -> f64 {
        self.a2.atan2(self.a1)
    }
}

/// Multiply the phasor of a sinusoid by a complex factor and read the
/// coefficients back.
fn phasor_apply(a1: f64, a2: f64, factor: Complex64) -> (f64, f64) {
    // a1 sin + a2 cos = Re[(a2 - i a1) e^{i w t}]
    let c = Complex64::new(a2, -a1) * factor;
    (-c.im, c.re)
}

/// Coefficients after passing a1 sin(wt) + a2 cos(wt) through
/// lambda^r / (p + lambda)^r in steady state.
pub fn filter_sinusoid_coeffs(a1: f64, a2: f64, omega: f64, lambda: f64, r: usize) -> (f64, f64) {
    let w = (Complex64::new(lambda, 0.0) / Complex64::new(lambda, omega)).powu(r as u32);
    phasor_apply(a1, a2, w)
}

/// Invert the filter analytically: apply (p + lambda)^r / lambda^r to the
/// estimated filtered sinusoid. Every derivative of a pure sinusoid is
/// closed form, so the improper operator is realized exactly by multiplying
/// the phasor by ((lambda + i w) / lambda)^r.
pub fn reconstruct_f(a_hat: (f64, f64), omega: f64, lambda: f64, r: usize) -> Sinusoid {
    let inv = (Complex64::new(lambda, omega) / Complex64::new(lambda, 0.0)).powu(r as u32);
    let (a1, a2) = phasor_apply(a_hat.0, a_hat.1, inv);
    Sinusoid { a1, a2, omega }
}
