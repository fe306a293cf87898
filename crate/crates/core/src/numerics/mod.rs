//! Dense linear-algebra primitives, matrix exponential, pole placement,
//! causal LTI filters and fixed-step integration used by every other module.

mod expm;
mod filter;
mod linalg;
mod ode;
mod place;

pub use expm::{expm, matrix_exponential};
pub use filter::{LtiFilter, StepOutput};
pub use linalg::{adjugate, determinant, eigenvalues, is_hurwitz, matrix_rank, spectral_abscissa};
pub use ode::{integrate_rk4, rk4_step, Channel, Trajectory};
pub use place::pole_place;

/// Dense, heap-allocated, double-precision matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense column vector.
pub type Vector = nalgebra::DVector<f64>;
/// Dense row vector.
pub type RowVector = nalgebra::RowDVector<f64>;
