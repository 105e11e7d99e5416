//! Cascaded spin/mechanics hybrid: steady-state covariances, EPR variance,
//! conditional (homodyne-filtered) states, parameter optimization, force
//! sensing and cavity parameter mapping.
//!
//! Rates are angular frequencies in any single consistent unit. The state
//! vector is ordered `(X_S, P_S, X_M, P_M)` and covariances are symmetrized,
//! `Σ_ij = <{δx_i, δx_j}>/2`, so the vacuum is `I/2`.

// Negated comparisons reject NaN inputs along with out-of-range ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditional;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optimize;
pub mod physmap;
pub mod quadrature;
pub mod sensing;
pub mod simplex;
pub mod unconditional;

pub use error::{Error, Result};
pub use model::{HybridParams, OscillatorParams};
pub use unconditional::CovarianceState;
