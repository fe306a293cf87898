//! Causal realization of the filter family lambda^r p^k / (p + lambda)^r.
//!
//! Controllable canonical form, advanced with the same fixed step as the
//! plant so that pipelines are exactly reproducible. `step3` integrates one
//! RK4 step with the input linearly interpolated through begin/mid/end
//! samples, which keeps cascades of filters at full integration accuracy.

use crate::error::{Error, Result};

/// Output of one filter step: the value at the half step and at the end.
#[derive(Debug, Clone, Copy)]
pub struct StepOutput {
    pub mid: f64,
    pub next: f64,
}

#[derive(Debug, Clone)]
pub struct LtiFilter {
    lambda: f64,
    order: usize,
    num_order: usize,
    /// denominator coefficients a_0..a_{r-1} of (p + lambda)^r (monic)
    den: Vec<f64>,
    /// output row c_i = b_i - d a_i in controllable canonical coordinates
    c_row: Vec<f64>,
    /// direct feedthrough (nonzero only for k = r)
    d: f64,
    state: Vec<f64>,
    // scratch buffers so stepping never allocates
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl LtiFilter {
    /// Realize lambda^r p^k / (p + lambda)^r with zero initial state.
    pub fn new(lambda: f64, order: usize, num_order: usize) -> Result<Self> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "filter bandwidth must be positive, got {lambda}"
            )));
        }
        if order == 0 {
            return Err(Error::InvalidParameter("filter order must be >= 1".into()));
        }
        if num_order > order {
            return Err(Error::ImproperFilter {
                num_order,
                den_order: order,
            });
        }
        // (p + lambda)^r: a_i = C(r, i) lambda^{r-i}
        let mut den = vec![0.0; order];
        let mut binom = 1.0;
        for i in 0..order {
            // C(r, i)
            if i > 0 {
                binom = binom * ((order - i + 1) as f64) / (i as f64);
            }
            den[i] = binom * lambda.powi((order - i) as i32);
        }
        let gain = lambda.powi(order as i32);
        let d = if num_order == order { gain } else { 0.0 };
        let mut c_row = vec![0.0; order];
        if num_order < order {
            c_row[num_order] = gain;
        }
        if d != 0.0 {
            for i in 0..order {
                c_row[i] -= d * den[i];
            }
        }
        Ok(Self {
            lambda,
            order,
            num_order,
            den,
            c_row,
            d,
            state: vec![0.0; order],
            k1: vec![0.0; order],
            k2: vec![0.0; order],
            k3: vec![0.0; order],
            k4: vec![0.0; order],
            stage: vec![0.0; order],
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_order(&self) -> usize {
        self.num_order
    }

    /// Steady-state gain for a constant input: 1 for k = 0, else 0.
    pub fn dc_gain(&self) -> f64 {
        if self.num_order == 0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn set_state(&mut self, state: &[f64]) -> Result<()> {
        if state.len() != self.order {
            return Err(Error::DimensionMismatch(format!(
                "filter state length {} != order {}",
                state.len(),
                self.order
            )));
        }
        self.state.copy_from_slice(state);
        Ok(())
    }

    /// Current output for input sample `u`.
    pub fn output(&self, u: f64) -> f64 {
        let mut y = self.d * u;
        for i in 0..self.order {
            y += self.c_row[i] * self.state[i];
        }
        y
    }

    fn output_of(&self, state: &[f64], u: f64) -> f64 {
        let mut y = self.d * u;
        for i in 0..self.order {
            y += self.c_row[i] * state[i];
        }
        y
    }

    /// One RK4 step with input samples at the step start, midpoint and end.
    pub fn step3(&mut self, u0: f64, um: f64, u1: f64, dt: f64) -> StepOutput {
        debug_assert!(dt > 0.0);
        let r = self.order;
        let h = dt;
        companion_deriv(&self.den, &self.state, u0, &mut self.k1);
        for i in 0..r {
            self.stage[i] = self.state[i] + 0.5 * h * self.k1[i];
        }
        companion_deriv(&self.den, &self.stage, um, &mut self.k2);
        for i in 0..r {
            self.stage[i] = self.state[i] + 0.5 * h * self.k2[i];
        }
        companion_deriv(&self.den, &self.stage, um, &mut self.k3);
        // stage holds x + h/2 k2, a second-order-accurate midpoint state
        let mid = self.output_of(&self.stage, um);
        for i in 0..r {
            self.stage[i] = self.state[i] + h * self.k3[i];
        }
        companion_deriv(&self.den, &self.stage, u1, &mut self.k4);
        for i in 0..r {
            self.state[i] +=
                h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        StepOutput {
            mid,
            next: self.output(u1),
        }
    }

    /// One step with the input held constant (zero-order hold).
    pub fn step(&mut self, u: f64, dt: f64) -> f64 {
        self.step3(u, u, u, dt).next
    }
}

/// xdot for the controllable canonical form: shift chain plus companion row.
#[inline]
fn companion_deriv(den: &[f64], state: &[f64], u: f64, out: &mut [f64]) {
    let r = den.len();
    for i in 0..r - 1 {
        out[i] = state[i + 1];
    }
    let mut last = u;
    for i in 0..r {
        last -= den[i] * state[i];
    }
    out[r - 1] = last;
}
