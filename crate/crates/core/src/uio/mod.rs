//! Unknown-input observer: gain synthesis and the auxiliary-variable chain
//! that trades output derivatives for filter state.

mod chain;
mod design;

pub use chain::{AuxChain, DirtyDerivatives};
pub use design::{design_gains, relative_degree, solve_star_condition, GainResiduals, UioGains};
