//! Closed-form references: the free propagator, Gaussians evolved by it,
//! and the explicit solitary waves.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::equation::NonlinearForm;
use crate::error::{Error, Result};
use crate::grid::{from_spectrum, to_spectrum, Complex, Field, Grid1D};
use crate::quadrature::integrate_to_infinity;

/// `e^{it∂_x²}` applied for a time `dt`.
pub fn free_propagate(f: &Field, dt: f64) -> Result<Field> {
    if !dt.is_finite() {
        return Err(Error::domain("time step must be finite"));
    }
    let spec = to_spectrum(f)?.apply_symbol(|xi| Complex::from_polar(1.0, -xi * xi * dt));
    Ok(from_spectrum(&spec)?.with_time(f.time() + dt))
}

/// `(1+4iat)^{-1/2} e^{-ax²/(1+4iat)}`, the free evolution of `e^{-ax²}`.
pub fn gaussian_value(a: f64, t: f64, x: f64) -> Complex {
    let d = Complex::new(1.0, 4.0 * a * t);
    (-a * x * x / d).exp() / d.sqrt()
}

pub fn gaussian_exact(a: f64, t: f64, grid: Grid1D) -> Result<Field> {
    if !(a > 0.0) {
        return Err(Error::domain(format!("Gaussian width parameter must be positive, got {a}")));
    }
    Field::from_fn(grid, t, |x| gaussian_value(a, t, x))
}

/// Peak magnitude `(1+16a²t²)^{-1/4}` of [`gaussian_exact`].
pub fn gaussian_sup(a: f64, t: f64) -> f64 {
    (1.0 + 16.0 * a * a * t * t).powf(-0.25)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub sigma: f64,
    pub omega: f64,
    pub c: f64,
    #[serde(default)]
    pub form: NonlinearForm,
}

impl SolitonParams {
    pub fn new(sigma: f64, omega: f64, c: f64) -> Result<Self> {
        Self::with_form(sigma, omega, c, NonlinearForm::Divergence)
    }

    pub fn with_form(sigma: f64, omega: f64, c: f64, form: NonlinearForm) -> Result<Self> {
        let p = SolitonParams { sigma, omega, c, form };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::domain(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.c.is_finite() && self.c * self.c < 4.0 * self.omega) {
            return Err(Error::domain(format!("need c² < 4ω, got c = {}, ω = {}", self.c, self.omega)));
        }
        Ok(())
    }

    fn gap(&self) -> f64 {
        4.0 * self.omega - self.c * self.c
    }

    /// Exponential rate `σ√(4ω - c²)` inside the cosh.
    pub fn rate(&self) -> f64 {
        self.sigma * self.gap().sqrt()
    }

    /// Coefficient of `ϕ^{2σ}` in the phase slope.
    fn phase_weight(&self) -> f64 {
        match self.form {
            NonlinearForm::Divergence => (2.0 * self.sigma + 1.0) / (2.0 * self.sigma + 2.0),
            NonlinearForm::Transport => 1.0 / (2.0 * self.sigma + 2.0),
        }
    }

    fn denominator(&self, x: f64) -> f64 {
        2.0 * self.omega.sqrt() * (self.rate() * x).cosh() - self.c
    }

    /// `ϕ^{2σ}(x)`.
    pub fn amplitude_power(&self, x: f64) -> f64 {
        (self.sigma + 1.0) * self.gap() / self.denominator(x)
    }

    fn amp(&self, x: f64) -> f64 {
        self.amplitude_power(x).powf(0.5 / self.sigma)
    }

    fn amp_derivative(&self, x: f64) -> f64 {
        let b = self.rate();
        let d = self.denominator(x);
        let dd = 2.0 * self.omega.sqrt() * b * (b * x).sinh();
        -self.amp(x) * dd / (2.0 * self.sigma * d)
    }

    /// `∫_{-∞}^x ϕ^{2σ}(y) dy` in closed form.
    pub fn phase_integral(&self, x: f64) -> f64 {
        let s = 2.0 * self.omega.sqrt();
        let kappa = ((s + self.c) / (s - self.c)).sqrt();
        let b = self.rate();
        2.0 * (self.sigma + 1.0) / self.sigma * ((kappa * (0.5 * b * x).tanh()).atan() + kappa.atan())
    }

    /// Derivative of the phase of `φ_{ω,c}`.
    pub fn phase_slope(&self, x: f64) -> f64 {
        0.5 * self.c - self.phase_weight() * self.amplitude_power(x)
    }

    pub fn phase(&self, x: f64) -> f64 {
        0.5 * self.c * x - self.phase_weight() * self.phase_integral(x)
    }

    pub fn profile(&self, x: f64) -> Complex {
        Complex::from_polar(self.amp(x), self.phase(x))
    }

    /// Half-width beyond which `ϕ < rel · ϕ(0)`.
    pub fn support_radius(&self, rel: f64) -> f64 {
        let peak = self.amp(0.0);
        let mut x = 1.0 / self.rate();
        while self.amp(x) >= rel * peak {
            x *= 1.25;
        }
        x
    }
}

/// `ϕ_{ω,c}(x) = {(σ+1)(4ω−c²)/(2√ω cosh(σ√(4ω−c²)x) − c)}^{1/(2σ)}`.
pub fn soliton_amplitude(p: &SolitonParams, x: f64) -> Result<f64> {
    p.validate()?;
    Ok(p.amp(x))
}

const EDGE_THRESHOLD: f64 = 1e-12;

fn check_edges(p: &SolitonParams, grid: &Grid1D) -> Result<()> {
    let ratio = p.amp(0.5 * grid.length()) / p.amp(0.0);
    if ratio >= EDGE_THRESHOLD {
        return Err(Error::GridTooNarrow(format!("soliton amplitude at the box edge is {ratio:.3e} of the peak")));
    }
    Ok(())
}

/// Offset of `d` into `[-l/2, l/2)`.
fn wrap(d: f64, l: f64) -> f64 {
    d - l * (d / l + 0.5).floor()
}

/// Samples of `φ_{ω,c}` centred at the origin (nearest periodic image).
pub fn soliton_field(p: &SolitonParams, grid: Grid1D) -> Result<Field> {
    soliton_orbit(p, 0.0, grid)
}

/// Travelling wave `e^{iωt} φ_{ω,c}(x − ct)`, taking the periodic image of
/// the profile nearest to each grid point.
pub fn soliton_orbit(p: &SolitonParams, t: f64, grid: Grid1D) -> Result<Field> {
    p.validate()?;
    check_edges(p, &grid)?;
    let rot = Complex::from_polar(1.0, p.omega * t);
    let l = grid.length();
    Field::from_fn(grid, t, |x| rot * p.profile(wrap(x - p.c * t, l)))
}

/// A grid on which [`soliton_field`] resolves `p` comfortably.
pub fn soliton_grid(p: &SolitonParams) -> Result<Grid1D> {
    p.validate()?;
    let half = p.support_radius(1e-14);
    let slope_max = p.phase_slope(0.0).abs().max(0.5 * p.c.abs());
    let scale = (p.rate() / p.sigma).max(p.rate()).max(slope_max).max(1.0);
    let dx_target = 0.12 / scale;
    let length = 2.0 * half * 1.02;
    let n = ((length / dx_target).ceil() as usize).next_power_of_two().max(256);
    Grid1D::new(n, length)
}

/// The mass through the closed-form half-line integral
/// `(2/σ)((σ+1)/(2√ω))^{1/σ}(4ω−c²)^{1/σ−1/2} ∫₀^∞ (cosh x − c/(2√ω))^{−1/σ} dx`.
pub fn mass_formula(p: &SolitonParams) -> Result<f64> {
    p.validate()?;
    let s = p.sigma;
    let shift = p.c / (2.0 * p.omega.sqrt());
    let tail = integrate_to_infinity(|x| (x.cosh() - shift).powf(-1.0 / s), 0.0, 2.0, 1e-13)?;
    Ok((2.0 / s) * ((s + 1.0) / (2.0 * p.omega.sqrt())).powf(1.0 / s) * p.gap().powf(1.0 / s - 0.5) * tail)
}

/// Line integrals of the exact profile, computed by adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonIntegrals {
    /// `‖φ‖²`.
    pub mass: f64,
    /// `‖∂_x φ‖²`.
    pub gradient: f64,
    /// `‖x φ‖²`.
    pub moment: f64,
}

impl SolitonIntegrals {
    pub fn h1_norm(&self) -> f64 {
        (self.mass + self.gradient).sqrt()
    }

    /// `‖∂_xφ‖² / (ω‖φ‖²)`.
    pub fn virial_ratio(&self, omega: f64) -> f64 {
        self.gradient / (omega * self.mass)
    }

    /// `4‖xφ‖²‖∂_xφ‖² / ‖φ‖⁴`, at least one by the uncertainty principle.
    pub fn heisenberg_ratio(&self) -> f64 {
        4.0 * self.moment * self.gradient / (self.mass * self.mass)
    }
}

pub fn soliton_integrals(p: &SolitonParams) -> Result<SolitonIntegrals> {
    p.validate()?;
    let scale = 1.0 / p.rate();
    let tol = 1e-14;
    let half = |g: &dyn Fn(f64) -> f64| -> Result<f64> { Ok(2.0 * integrate_to_infinity(g, 0.0, 4.0 * scale, tol)?) };
    let mass = half(&|x| p.amp(x).powi(2))?;
    let gradient = half(&|x| {
        let a = p.amp(x);
        let th = p.phase_slope(x);
        p.amp_derivative(x).powi(2) + a * a * th * th
    })?;
    let moment = half(&|x| (x * p.amp(x)).powi(2))?;
    Ok(SolitonIntegrals { mass, gradient, moment })
}

/// `∫_{-∞}^x ϕ^{2σ}` by direct quadrature, as a check on the closed form.
pub fn phase_integral_quadrature(p: &SolitonParams, x: f64) -> Result<f64> {
    let panel = 4.0 / p.rate();
    // ϕ is even, so the left tail up to x equals the right tail from -x.
    let tail = integrate_to_infinity(|y| p.amplitude_power(y), x.abs(), panel, 1e-15)?;
    if x <= 0.0 {
        return Ok(tail);
    }
    let total = 2.0 * integrate_to_infinity(|y| p.amplitude_power(y), 0.0, panel, 1e-15)?;
    Ok(total - tail)
}

/// The parameter sweep `σ ∈ {1, 1.5, 2}`, `ω ∈ {1/4, 1, 4}`,
/// `c ∈ {0, ±√ω, −1.9√ω}`.
pub fn soliton_test_set(form: NonlinearForm) -> Vec<SolitonParams> {
    let mut out = Vec::with_capacity(36);
    for sigma in [1.0, 1.5, 2.0] {
        for omega in [0.25f64, 1.0, 4.0] {
            let r = omega.sqrt();
            for c in [0.0, r, -r, -1.9 * r] {
                out.push(SolitonParams { sigma, omega, c, form });
            }
        }
    }
    out
}

/// `c_k = −2√ω(1 − 2^{−k})` for `k = 1..=count`.
pub fn degenerate_speeds(omega: f64, count: u32) -> Vec<f64> {
    (1..=count).map(|k| -2.0 * omega.sqrt() * (1.0 - 0.5f64.powi(k as i32))).collect()
}

/// Total mass `2π` of the `σ = 1, ω = 1/4, c = 0` soliton.
pub const REFERENCE_SOLITON_MASS: f64 = 2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::lp_norm;

    fn mass(f: &Field) -> f64 {
        lp_norm(f, 2.0).unwrap().powi(2)
    }

    #[test]
    fn free_propagation_examples() {
        let g = Grid1D::new(1024, 60.0).unwrap();
        let u0 = gaussian_exact(1.0, 0.0, g).unwrap();
        let same = free_propagate(&u0, 0.0).unwrap();
        for (a, b) in same.samples().iter().zip(u0.samples()) {
            assert!((a - b).norm() < 1e-14);
        }
        let u1 = free_propagate(&u0, 1.0).unwrap();
        assert!((mass(&u1) - mass(&u0)).abs() < 1e-12 * mass(&u0));
        let exact = gaussian_exact(1.0, 1.0, g).unwrap();
        let err = u1.samples().iter().zip(exact.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "free propagation error {err}");
        assert_eq!(u1.time(), 1.0);
    }

    #[test]
    fn gaussian_examples() {
        let g = Grid1D::new(2048, 200.0).unwrap();
        let zero = gaussian_exact(2.0, 0.0, g).unwrap();
        for (j, z) in zero.samples().iter().enumerate() {
            assert!((z - Complex::new((-2.0 * g.x(j).powi(2)).exp(), 0.0)).norm() < 1e-15);
        }
        assert!((gaussian_sup(1.0, 1.0) - 17f64.powf(-0.25)).abs() < 1e-15);
        assert!((gaussian_exact(1.0, 1.0, g).unwrap().sup_norm() - 0.49247).abs() < 1e-5);
        let m0 = mass(&zero);
        assert!((mass(&gaussian_exact(2.0, 3.0, g).unwrap()) - m0).abs() < 1e-10 * m0);
        assert!(gaussian_exact(0.0, 1.0, g).is_err());
    }

    #[test]
    fn amplitude_examples() {
        let p = SolitonParams::new(1.0, 0.25, 0.0).unwrap();
        assert!((soliton_amplitude(&p, 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let q = SolitonParams::new(1.5, 1.0, 0.7).unwrap();
        let mut prev = soliton_amplitude(&q, 0.0).unwrap();
        for k in 1..60 {
            let x = 0.25 * k as f64;
            let a = soliton_amplitude(&q, x).unwrap();
            assert!(a < prev);
            assert!((a - soliton_amplitude(&q, -x).unwrap()).abs() < 1e-15 * prev.max(1.0));
            prev = a;
        }
        assert!(SolitonParams::new(1.0, 1.0, 2.0).is_err());
        assert!(SolitonParams::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn phase_integral_matches_quadrature() {
        for p in soliton_test_set(NonlinearForm::Divergence) {
            for x in [-3.0, -0.5, 0.0, 0.8, 4.0] {
                let closed = p.phase_integral(x);
                let quad = phase_integral_quadrature(&p, x).unwrap();
                assert!((closed - quad).abs() < 1e-10 * closed.abs().max(1.0), "{p:?} x={x}: {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn soliton_field_examples() {
        let p = SolitonParams::new(1.0, 0.25, 0.0).unwrap();
        let g = Grid1D::new(4096, 160.0).unwrap();
        let f = soliton_field(&p, g).unwrap();
        for (j, z) in f.samples().iter().enumerate() {
            assert!((z.norm() - p.amp(g.x(j))).abs() < 1e-12);
        }
        assert!((mass(&f) - REFERENCE_SOLITON_MASS).abs() < 1e-8);
        let narrow = Grid1D::new(256, 20.0).unwrap();
        assert!(matches!(soliton_field(&p, narrow), Err(Error::GridTooNarrow(_))));
        let orbit0 = soliton_orbit(&p, 0.0, g).unwrap();
        for (a, b) in orbit0.samples().iter().zip(f.samples()) {
            assert!((a - b).norm() < 1e-14);
        }
        let moving = SolitonParams::new(1.0, 0.25, 0.5).unwrap();
        let m0 = mass(&soliton_orbit(&moving, 0.0, g).unwrap());
        let m1 = mass(&soliton_orbit(&moving, 7.3, g).unwrap());
        assert!((m0 - m1).abs() < 1e-12 * m0);
    }

    #[test]
    fn mass_formula_matches_grid_mass() {
        for p in soliton_test_set(NonlinearForm::Divergence) {
            let g = soliton_grid(&p).unwrap();
            let grid_mass = mass(&soliton_field(&p, g).unwrap());
            let formula = mass_formula(&p).unwrap();
            assert!((grid_mass - formula).abs() < 1e-7 * formula, "{p:?}: {grid_mass} vs {formula}");
            let quad = soliton_integrals(&p).unwrap().mass;
            assert!((quad - formula).abs() < 1e-9 * formula);
        }
    }

    #[test]
    fn reference_virial_values() {
        let p = SolitonParams::with_form(1.0, 0.25, 0.0, NonlinearForm::Transport).unwrap();
        let ints = soliton_integrals(&p).unwrap();
        assert!((ints.gradient - 0.5 * PI).abs() < 1e-9);
        assert!((0.25 * ints.mass - 0.5 * PI).abs() < 1e-9);
        assert!(ints.heisenberg_ratio() >= 1.0);
    }
}
