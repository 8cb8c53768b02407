//! Pseudospectral laboratory for the generalized derivative nonlinear
//! Schrödinger equation
//!
//! ```text
//! i u_t + u_xx + i ∂_x(|u|^{2σ} u) = 0
//! ```
//!
//! on a periodic box, together with the diagnostics used to study its
//! long-time behaviour: conservation laws, the solitary-wave family,
//! the Galilean vector field `L = x + 2it∂_x`, wave-packet profiles and
//! modified-scattering expansions.

pub mod asymptotics;
pub mod equation;
pub mod error;
pub mod evolve;
pub mod exact;
mod fit;
pub mod grid;
pub mod interp;
pub mod invariants;
pub mod lab;
pub mod norms;
pub mod packets;
pub mod quadrature;
pub mod vector_field;

pub use equation::NonlinearForm;
pub use error::{Error, Result};
pub use grid::{Complex, Field, Grid1D, SobolevKind, Spectrum};
