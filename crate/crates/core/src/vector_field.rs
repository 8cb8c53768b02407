//! The Galilean vector field `L = x + 2it∂_x` and the diagnostics built on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equation::{check_sigma, conjugate_coefficient, modulus_power, power_nonlinearity};
use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::fit::line_fit;
use crate::grid::{derivative, Complex, Field, SobolevKind};
use crate::invariants::TailGuard;
use crate::norms::{lp_norm, sobolev_norm};

const I: Complex = Complex::new(0.0, 1.0);

fn l2(samples: &[Complex], dx: f64) -> f64 {
    (samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt()
}

fn raw_l(f: &Field, centre: f64) -> Result<Field> {
    let ux = derivative(f, 1)?;
    let two_it = 2.0 * f.time() * I;
    let g = f.grid();
    let samples = (0..g.n()).map(|j| (g.x(j) - centre) * f.samples()[j] + two_it * ux.samples()[j]).collect();
    Field::new(*g, f.time(), samples)
}

/// `Lu = x·u + 2it·u_x` in box coordinates, at the field's own time.
pub fn apply_l(f: &Field) -> Result<Field> {
    apply_l_about(f, 0.0, &TailGuard::default())
}

/// `Lu` with `x` measured from `centre`; fails if the edge zone carries mass.
pub fn apply_l_about(f: &Field, centre: f64, guard: &TailGuard) -> Result<Field> {
    f.validate()?;
    guard.check(f)?;
    raw_l(f, centre)
}

/// `‖L(|u|^{2σ}u) − (σ+1)|u|^{2σ}Lu + σ|u|^{2σ−2}u² conj(Lu)‖₂`.
pub fn nonlinear_l_identity_gap(f: &Field, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let lu = apply_l(f)?;
    let lhs = raw_l(&f.map(|_, z| power_nonlinearity(z, sigma)), 0.0)?;
    let diff: Vec<Complex> = f
        .samples()
        .iter()
        .zip(lu.samples())
        .zip(lhs.samples())
        .map(|((&u, &v), &l)| {
            l - (sigma + 1.0) * modulus_power(u, sigma) * v + sigma * conjugate_coefficient(u, sigma) * v.conj()
        })
        .collect();
    Ok(l2(&diff, f.grid().dx()))
}

/// Klainerman–Sobolev ratio `t‖u‖²_∞ / (‖u‖₂‖Lu‖₂)`; 0 for the zero field.
pub fn ks_gap(f: &Field) -> Result<f64> {
    let t = f.time();
    if !(t > 0.0) {
        return Err(Error::domain(format!("Klainerman-Sobolev ratio needs t > 0, got {t}")));
    }
    let lu = apply_l(f)?;
    let den = lp_norm(f, 2.0)? * lp_norm(&lu, 2.0)?;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(t * f.sup_norm().powi(2) / den)
}

/// Right-hand side of the energy identity for `‖Lu‖²`:
///
/// ```text
/// −(σ+1)∫∂_x(|u|^{2σ})|Lu|² + σ Re∫∂_x(|u|^{2σ−2}u²)(conj Lu)² + 2 Re∫|u|^{2σ}u conj(Lu)
/// ```
pub fn lu_energy_rhs(f: &Field, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let lu = apply_l(f)?;
    let w = f.map(|_, z| Complex::new(modulus_power(z, sigma), 0.0));
    let g = f.map(|_, z| conjugate_coefficient(z, sigma));
    let wx = derivative(&w, 1)?;
    let gx = derivative(&g, 1)?;
    let mut sum = 0.0;
    for j in 0..f.samples().len() {
        let v = lu.samples()[j];
        let u = f.samples()[j];
        sum += -(sigma + 1.0) * wx.samples()[j].re * v.norm_sqr()
            + sigma * (gx.samples()[j] * v.conj() * v.conj()).re
            + 2.0 * (power_nonlinearity(u, sigma) * v.conj()).re;
    }
    Ok(sum * f.grid().dx())
}

/// `‖i∂_t(Lu) + ∂_x²(Lu) + i∂_x(L N) − iN‖₂` at the middle snapshot, with
/// `N = |u|^{2σ}u`, `L N` expanded by the product rule and `∂_t` a centred
/// difference over the outer snapshots.
pub fn lu_equation_residual(before: &Field, mid: &Field, after: &Field, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let h = after.time() - before.time();
    if !(h > 0.0) {
        return Err(Error::domain("snapshots must be in increasing time order"));
    }
    let (la, lm, lb) = (apply_l(after)?, apply_l(mid)?, apply_l(before)?);
    let lxx = derivative(&lm, 2)?;
    let ln = mid.zip_with(&lm, |u, v| {
        (sigma + 1.0) * modulus_power(u, sigma) * v - sigma * conjugate_coefficient(u, sigma) * v.conj()
    })?;
    let dln = derivative(&ln, 1)?;
    let res: Vec<Complex> = (0..mid.samples().len())
        .map(|j| {
            let dt = (la.samples()[j] - lb.samples()[j]) / h;
            I * dt + lxx.samples()[j] + I * dln.samples()[j] - I * power_nonlinearity(mid.samples()[j], sigma)
        })
        .collect();
    Ok(l2(&res, mid.grid().dx()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldReport {
    pub time: f64,
    pub lu_l2: f64,
    pub lux_l2: f64,
    /// `‖J¹ Lu‖₂`.
    pub lu_h1: f64,
    pub ks_ratio: f64,
}

impl VectorFieldReport {
    /// All four quantities at the field's time, which must be positive.
    pub fn measure(f: &Field) -> Result<Self> {
        let lu = apply_l(f)?;
        let lux = raw_l(&derivative(f, 1)?, 0.0)?;
        Ok(VectorFieldReport {
            time: f.time(),
            lu_l2: lp_norm(&lu, 2.0)?,
            lux_l2: lp_norm(&lux, 2.0)?,
            lu_h1: sobolev_norm(&lu, 1.0, SobolevKind::Inhomogeneous)?,
            ks_ratio: ks_gap(f)?,
        })
    }
}

/// `log value ≈ exponent·log⟨t⟩ + log constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub constant: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// `⟨t⟩ = (1 + t²)^{1/2}`.
pub fn japanese_bracket(t: f64) -> f64 {
    (1.0 + t * t).sqrt()
}

pub const MIN_GROWTH_POINTS: usize = 10;

/// Growth fit on `(t, ‖Lu(t)‖_{H¹})` pairs; samples with `t < 1` are ignored.
pub fn lu_growth_fit_series(series: &[(f64, f64)]) -> Result<GrowthFit> {
    let kept: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= 1.0).collect();
    if kept.len() < MIN_GROWTH_POINTS {
        return Err(Error::InsufficientData(format!(
            "growth fit needs {MIN_GROWTH_POINTS} samples with t >= 1, got {}",
            kept.len()
        )));
    }
    if let Some(&(t, v)) = kept.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(Error::domain(format!("non-positive value {v} at t = {t}")));
    }
    let xs: Vec<f64> = kept.iter().map(|p| japanese_bracket(p.0).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let fit = line_fit(&xs, &ys)?;
    Ok(GrowthFit { exponent: fit.slope, constant: fit.intercept.exp(), r_squared: fit.r_squared, points: kept.len() })
}

/// Fit of `‖Lu‖_{H¹}` against `⟨t⟩` over the snapshots with `t ≥ 1`.
pub fn lu_growth_fit(traj: &Trajectory) -> Result<GrowthFit> {
    let series: Vec<(f64, f64)> = traj
        .snapshots
        .fields()
        .par_iter()
        .filter(|f| f.time() >= 1.0)
        .map(|f| Ok((f.time(), sobolev_norm(&apply_l(f)?, 1.0, SobolevKind::Inhomogeneous)?)))
        .collect::<Result<_>>()?;
    lu_growth_fit_series(&series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::free_propagate;
    use crate::grid::Grid1D;

    fn gaussian(g: Grid1D, t: f64) -> Field {
        Field::from_fn(g, t, |x| Complex::new((-x * x).exp(), 0.2 * x * (-x * x).exp())).unwrap()
    }

    #[test]
    fn l_at_time_zero_is_multiplication() {
        let g = Grid1D::new(256, 30.0).unwrap();
        let f = gaussian(g, 0.0);
        let lu = apply_l(&f).unwrap();
        for j in 0..g.n() {
            assert!((lu.samples()[j] - g.x(j) * f.samples()[j]).norm() < 1e-15);
        }
    }

    #[test]
    fn commutator_with_derivative_is_identity() {
        let g = Grid1D::new(512, 40.0).unwrap();
        let f = gaussian(g, 0.7);
        let lhs = derivative(&apply_l(&f).unwrap(), 1).unwrap();
        let rhs = apply_l(&derivative(&f, 1).unwrap()).unwrap();
        let err = (0..g.n()).map(|j| (lhs.samples()[j] - rhs.samples()[j] - f.samples()[j]).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn free_flow_intertwines_with_l() {
        let g = Grid1D::new(2048, 120.0).unwrap();
        let u0 = gaussian(g, 0.0);
        let xu0 = u0.map(|x, z| x * z);
        let lhs = free_propagate(&xu0, 1.0).unwrap();
        let rhs = apply_l(&free_propagate(&u0, 1.0).unwrap()).unwrap();
        let err = lhs.samples().iter().zip(rhs.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn truncated_data_is_rejected() {
        let g = Grid1D::new(256, 20.0).unwrap();
        let edge = Field::from_fn(g, 1.0, |x| Complex::new((-(x - 9.5).powi(2)).exp(), 0.0)).unwrap();
        assert!(matches!(apply_l(&edge), Err(Error::Truncation { .. })));
    }

    #[test]
    fn nonlinear_identity_holds() {
        let g = Grid1D::new(1024, 40.0).unwrap();
        let f = gaussian(g, 0.5);
        assert_eq!(nonlinear_l_identity_gap(&Field::zeros(g, 0.5), 1.0).unwrap(), 0.0);
        let gap1 = nonlinear_l_identity_gap(&f, 1.0).unwrap();
        let gap15 = nonlinear_l_identity_gap(&f, 1.5).unwrap();
        assert!(gap1 < 1e-8, "{gap1}");
        assert!(gap15 < 1e-6, "{gap15}");
    }

    #[test]
    fn ks_ratio_on_free_gaussians() {
        let g = Grid1D::new(8192, 1600.0).unwrap();
        assert!(ks_gap(&gaussian(g, 0.0)).is_err());
        assert_eq!(ks_gap(&Field::zeros(g, 1.0)).unwrap(), 0.0);
        let u0 = Field::from_fn(g, 0.0, |x| Complex::new((-0.25 * x * x).exp(), 0.0)).unwrap();
        for t in [1.0, 5.0, 25.0] {
            let r = ks_gap(&free_propagate(&u0, t).unwrap()).unwrap();
            assert!(r <= 1.0, "t={t}: {r}");
        }
    }

    #[test]
    fn free_flow_preserves_lu_norm() {
        let g = Grid1D::new(2048, 200.0).unwrap();
        let u0 = gaussian(g, 0.0);
        let n0 = lp_norm(&apply_l(&u0).unwrap(), 2.0).unwrap();
        for t in [0.5, 2.0, 6.0] {
            let n = lp_norm(&apply_l(&free_propagate(&u0, t).unwrap()).unwrap(), 2.0).unwrap();
            assert!((n - n0).abs() < 1e-10 * n0.max(1.0), "t={t}");
        }
    }

    #[test]
    fn energy_rhs_amplitude_scaling() {
        let g = Grid1D::new(1024, 40.0).unwrap();
        let f = gaussian(g, 0.0);
        assert_eq!(lu_energy_rhs(&Field::zeros(g, 0.0), 1.0).unwrap(), 0.0);
        let base = lu_energy_rhs(&f, 1.0).unwrap();
        for lambda in [2.0, 4.0] {
            let r = lu_energy_rhs(&f.scale(Complex::new(lambda, 0.0)), 1.0).unwrap();
            let expected = lambda.powi(4) * base;
            assert!((r - expected).abs() < 1e-10 * expected.abs().max(1e-300), "λ={lambda}");
        }
    }

    #[test]
    fn growth_fit_examples() {
        let flat: Vec<(f64, f64)> = (0..12).map(|k| (1.0 + k as f64, 0.3)).collect();
        assert_eq!(lu_growth_fit_series(&flat).unwrap().exponent, 0.0);
        let power: Vec<(f64, f64)> =
            (0..16).map(|k| 2f64.powf(k as f64 / 2.0)).map(|t| (t, 0.7 * japanese_bracket(t).powf(0.03))).collect();
        let fit = lu_growth_fit_series(&power).unwrap();
        assert!((fit.exponent - 0.03).abs() < 1e-6);
        assert!((fit.constant - 0.7).abs() < 1e-6);
        let short: Vec<(f64, f64)> = (0..12).map(|k| (0.05 * k as f64, 1.0)).collect();
        assert!(matches!(lu_growth_fit_series(&short), Err(Error::InsufficientData(_))));
    }
}
