//! Truncated (N = 2) contact dynamics for dissipative and conservative
//! drift fields.
//!
//! The crate integrates the coupled macroscopic / fiber / stiffness flow,
//! measures the contact-locking decay rates against the spectral
//! prediction `σ = -max Re λ(M)`, and checks the order-by-order
//! consistency equations of polynomial contact potentials exactly.
//!
//! Module map:
//!
//! * [`drift`]: built-in drift fields and Jacobians,
//! * [`spectral`]: eigenvalues, amplification rate and Duffing regimes,
//! * [`geometry`]: degeneracy projector and rotational compensator,
//! * [`transport`]: RK4 characteristics, variational equation, `H⁽²⁾` routes,
//! * [`contact`]: coupled focusing runs, rate fits and diagnostics,
//! * [`closure`]: exact polynomial algebra and closure residuals,
//! * [`cli`]: the `contact-focus` command-line front end.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod closure;
pub mod contact;
pub mod drift;
pub mod error;
pub mod geometry;
pub mod spectral;
pub mod transport;

pub use error::{Error, Result};
