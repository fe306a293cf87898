//! Adaptive state estimation for SISO time-varying plants under multiharmonic
//! disturbance.
//!
//! The pipeline has three stages:
//!
//! 1. An unknown-input observer (UIO) whose auxiliary chain removes the need
//!    for output derivatives up to the relative degree ([`uio`]).
//! 2. A filtered linear regression built with the swapping lemma, extended by
//!    a Kreisselmeier scheme and mixed with DREM, which recovers the
//!    parameter-generator initial condition and the disturbance frequency in
//!    finite time ([`regression`], [`drem`]), followed by a second DREM stage
//!    that recovers the disturbance amplitude and reconstructs the signal
//!    ([`disturbance`]).
//! 3. A derivative-free adaptive observer with a differential-Riccati gain
//!    that consumes the recovered parameters ([`observer`]).
//!
//! [`scenario`] and [`pipeline`] tie the stages into a deterministic,
//! fixed-step simulation harness; the `uio-drem` binary exposes it on the
//! command line.

pub mod csvio;
pub mod disturbance;
pub mod drem;
pub mod error;
pub mod numerics;
pub mod observer;
pub mod pipeline;
pub mod plant;
pub mod regression;
pub mod scenario;
pub mod sweep;
pub mod uio;

pub use error::{Error, Result};
pub use numerics::{Matrix, Vector};
