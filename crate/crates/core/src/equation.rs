//! Pointwise pieces of the nonlinearity shared by the solver and the
//! diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Complex;

/// Which way the derivative sits in the nonlinear term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearForm {
    /// `i u_t + u_xx + i ∂_x(|u|^{2σ} u) = 0`.
    #[default]
    Divergence,
    /// `i u_t + u_xx + i |u|^{2σ} u_x = 0`.
    Transport,
}

impl std::fmt::Display for NonlinearForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NonlinearForm::Divergence => f.write_str("divergence"),
            NonlinearForm::Transport => f.write_str("transport"),
        }
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("sigma must be positive, got {sigma}")))
    }
}

/// `|z|^{2σ}`, with the continuous value 0 at the origin.
#[inline]
pub fn modulus_power(z: Complex, sigma: f64) -> f64 {
    let m2 = z.norm_sqr();
    if m2 == 0.0 {
        0.0
    } else if sigma == 1.0 {
        m2
    } else if sigma == 2.0 {
        m2 * m2
    } else {
        m2.powf(sigma)
    }
}

/// `|z|^{2σ} z`.
#[inline]
pub fn power_nonlinearity(z: Complex, sigma: f64) -> Complex {
    z * modulus_power(z, sigma)
}

/// `|z|^{2σ-2} z²`, continuous at 0 for `σ ≥ 1/2`.
#[inline]
pub fn conjugate_coefficient(z: Complex, sigma: f64) -> Complex {
    let m2 = z.norm_sqr();
    if m2 == 0.0 {
        Complex::new(0.0, 0.0)
    } else if sigma == 1.0 {
        z * z
    } else {
        z * z * m2.powf(sigma - 1.0)
    }
}
