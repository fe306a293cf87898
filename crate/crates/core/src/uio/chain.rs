//! Runtime of the auxiliary-variable chain: the terminal variable z_r is the
//! only integrated state, and the estimate is reassembled from it plus
//! measured output derivatives.

use super::UioGains;
use crate::error::{Error, Result};
use crate::numerics::{LtiFilter, Vector};

/// Streaming integrator of zdot_r = F (z_r + F^{r-1} G y) + L y.
#[derive(Debug, Clone)]
pub struct AuxChain {
    gains: UioGains,
    z: Vector,
    z_prev: Vector,
    z_mid: Vector,
    /// cached columns F^0 G .. F^{r-1} G
    powers: Vec<Vector>,
    /// input column F^r G + L multiplying y in the z dynamics
    input_col: Vector,
    k1: Vector,
    k2: Vector,
    k3: Vector,
    k4: Vector,
    stage: Vector,
}

impl AuxChain {
    pub fn new(gains: UioGains, z0: Vector) -> Result<Self> {
        let n = gains.n();
        if z0.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "z0 has {} entries for an order-{n} chain",
                z0.len()
            )));
        }
        let powers: Vec<Vector> = (0..gains.r).map(|k| gains.f_power_g(k)).collect();
        let input_col = &gains.f * &powers[gains.r - 1] + &gains.l;
        Ok(Self {
            z_prev: z0.clone(),
            z_mid: z0.clone(),
            k1: Vector::zeros(n),
            k2: Vector::zeros(n),
            k3: Vector::zeros(n),
            k4: Vector::zeros(n),
            stage: Vector::zeros(n),
            z: z0,
            gains,
            powers,
            input_col,
        })
    }

    pub fn gains(&self) -> &UioGains {
        &self.gains
    }

    pub fn z(&self) -> &Vector {
        &self.z
    }

    /// z at the start of the last completed step.
    pub fn z_prev(&self) -> &Vector {
        &self.z_prev
    }

    /// Second-order-accurate z at the half point of the last completed step.
    pub fn z_mid(&self) -> &Vector {
        &self.z_mid
    }

    /// One RK4 step driven by output samples at the step start, mid and end.
    pub fn step3(&mut self, y0: f64, ym: f64, y1: f64, dt: f64) {
        let n = self.z.len();
        self.z_prev.copy_from(&self.z);
        chain_deriv(&self.gains.f, &self.input_col, &self.z, y0, &mut self.k1);
        for i in 0..n {
            self.stage[i] = self.z[i] + 0.5 * dt * self.k1[i];
        }
        chain_deriv(
            &self.gains.f,
            &self.input_col,
            &self.stage,
            ym,
            &mut self.k2,
        );
        for i in 0..n {
            self.stage[i] = self.z[i] + 0.5 * dt * self.k2[i];
        }
        self.z_mid.copy_from(&self.stage);
        chain_deriv(
            &self.gains.f,
            &self.input_col,
            &self.stage,
            ym,
            &mut self.k3,
        );
        for i in 0..n {
            self.stage[i] = self.z[i] + dt * self.k3[i];
        }
        chain_deriv(
            &self.gains.f,
            &self.input_col,
            &self.stage,
            y1,
            &mut self.k4,
        );
        for i in 0..n {
            self.z[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }

    /// x_hat = z_r + F^{r-1} G y + ... + G y^{(r-1)}.
    ///
    /// `derivs` carries y^(1) .. y^(r-1); r = 1 needs none.
    pub fn assemble_estimate(&self, y: f64, derivs: &[f64]) -> Result<Vector> {
        let r = self.gains.r;
        if derivs.len() != r - 1 {
            return Err(Error::DerivativeCount {
                expected: r - 1,
                got: derivs.len(),
            });
        }
        let mut x_hat = &self.z + &self.powers[r - 1] * y;
        for (j, d) in derivs.iter().enumerate() {
            x_hat += &self.powers[r - 2 - j] * *d;
        }
        Ok(x_hat)
    }
}

#[inline]
fn chain_deriv(
    f: &crate::numerics::Matrix,
    input_col: &Vector,
    z: &Vector,
    y: f64,
    out: &mut Vector,
) {
    let n = z.len();
    for i in 0..n {
        let mut acc = input_col[i] * y;
        for j in 0..n {
            acc += f[(i, j)] * z[j];
        }
        out[i] = acc;
    }
}

/// Cascade of lambda p / (p + lambda) stages approximating y^(1) .. y^(k);
/// an alternative derivative source for noisy measurements. Not used by the
/// simulation oracle paths.
#[derive(Debug, Clone)]
pub struct DirtyDerivatives {
    stages: Vec<LtiFilter>,
    outputs: Vec<f64>,
}

impl DirtyDerivatives {
    pub fn new(lambda: f64, count: usize) -> Result<Self> {
        let stages = (0..count)
            .map(|_| LtiFilter::new(lambda, 1, 1))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            outputs: vec![0.0; count],
            stages,
        })
    }

    /// Feed one output sample; returns the current derivative estimates.
    pub fn step(&mut self, y: f64, dt: f64) -> &[f64] {
        let mut signal = y;
        for (stage, out) in self.stages.iter_mut().zip(self.outputs.iter_mut()) {
            signal = stage.step(signal, dt);
            *out = signal;
        }
        &self.outputs
    }
}
