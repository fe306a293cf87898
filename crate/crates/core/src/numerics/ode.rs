//! Classical fixed-step RK4 integration and the uniform-grid trajectory store.

use super::Vector;
use crate::error::{Error, Result};

/// One RK4 step of xdot = field(t, x).
pub fn rk4_step<F>(field: &mut F, t: f64, x: &Vector, dt: f64) -> Vector
where
    F: FnMut(f64, &Vector) -> Vector,
{
    let k1 = field(t, x);
    let k2 = field(t + dt / 2.0, &(x + &k1 * (dt / 2.0)));
    let k3 = field(t + dt / 2.0, &(x + &k2 * (dt / 2.0)));
    let k4 = field(t + dt, &(x + &k3 * dt));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Integrate over [t0, t1] with a fixed step, recording every sample in a
/// trajectory with a single channel `x`.
///
/// Fails with the offending time if the state stops being finite.
pub fn integrate_rk4<F>(
    mut field: F,
    x0: &Vector,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory>
where
    F: FnMut(f64, &Vector) -> Vector,
{
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let (t0, t1) = t_span;
    if t1 < t0 {
        return Err(Error::InvalidParameter("t_span end before start".into()));
    }
    let steps = ((t1 - t0) / dt).round() as usize;
    let n = x0.len();
    let mut traj = Trajectory::new(&[("x", n)]);
    let mut x = x0.clone();
    let mut t = t0;
    traj.push_sample(t, &[x.as_slice()]);
    for k in 0..steps {
        x = rk4_step(&mut field, t, &x, dt);
        t = t0 + (k + 1) as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }
        traj.push_sample(t, &[x.as_slice()]);
    }
    Ok(traj)
}

/// Named sequence of fixed-width samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub width: usize,
    /// row-major: sample k occupies data[k*width .. (k+1)*width]
    pub data: Vec<f64>,
}

impl Channel {
    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.width..(k + 1) * self.width]
    }
}

/// Uniform-grid time series with named channels, all of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub channels: Vec<Channel>,
}

impl Trajectory {
    pub fn new(channels: &[(&str, usize)]) -> Self {
        Self {
            times: Vec::new(),
            channels: channels
                .iter()
                .map(|(name, width)| Channel {
                    name: (*name).to_string(),
                    width: *width,
                    data: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() >= 2 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    /// Append one row; `values` must follow the channel order and widths.
    pub fn push_sample(&mut self, t: f64, values: &[&[f64]]) {
        debug_assert_eq!(values.len(), self.channels.len());
        self.times.push(t);
        for (ch, vals) in self.channels.iter_mut().zip(values) {
            debug_assert_eq!(vals.len(), ch.width);
            ch.data.extend_from_slice(vals);
        }
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    /// Scalar channel as a slice (width must be 1).
    pub fn scalar(&self, name: &str) -> Option<&[f64]> {
        self.channel(name)
            .filter(|c| c.width == 1)
            .map(|c| c.data.as_slice())
    }
}
