//! Mass, energy, the scaling symmetry and the edge-zone mass guard.

use serde::{Deserialize, Serialize};

use crate::equation::{check_sigma, modulus_power, NonlinearForm};
use crate::error::{Error, Result};
use crate::grid::{derivative, Complex, Field, Grid1D};

/// `∫|u|² dx`.
pub fn mass(f: &Field) -> f64 {
    f.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() * f.grid().dx()
}

/// Conserved energy of the divergence-form equation,
/// `∫ |u_x|² + (2σ+1)/(σ+1)|u|^{2σ} Im(ū u_x) + 1/(σ+1)|u|^{4σ+2} dx`.
///
/// It is exactly conserved for `σ = 1`; for other powers it is a monitor only.
pub fn energy(f: &Field, sigma: f64) -> Result<f64> {
    energy_for(f, sigma, NonlinearForm::Divergence)
}

/// Energy functional for the chosen form. The transport form conserves
/// `∫ |u_x|² + 1/(σ+1)|u|^{2σ} Im(ū u_x) dx` for every `σ`.
pub fn energy_for(f: &Field, sigma: f64, form: NonlinearForm) -> Result<f64> {
    check_sigma(sigma)?;
    let ux = derivative(f, 1)?;
    let (coupling, potential) = match form {
        NonlinearForm::Divergence => ((2.0 * sigma + 1.0) / (sigma + 1.0), 1.0 / (sigma + 1.0)),
        NonlinearForm::Transport => (1.0 / (sigma + 1.0), 0.0),
    };
    let sum: f64 = f
        .samples()
        .iter()
        .zip(ux.samples())
        .map(|(&u, &d)| {
            let w = modulus_power(u, sigma);
            d.norm_sqr() + coupling * w * (u.conj() * d).im + potential * w * w * u.norm_sqr()
        })
        .sum();
    Ok(sum * f.grid().dx())
}

/// `s_c = 1/2 − 1/(2σ)`.
pub fn critical_index(sigma: f64) -> f64 {
    0.5 - 0.5 / sigma
}

/// `u_λ(t, x) = λ^{1/(2σ)} u(λ²t, λx)` applied to a snapshot of `u` at time `T`.
///
/// The grid is relabelled (length and origin divided by `λ`), so no
/// resampling happens; the result carries the time `T/λ²` at which
/// `u_λ` takes these values.
pub fn rescale(f: &Field, lambda: f64, sigma: f64) -> Result<Field> {
    check_sigma(sigma)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!("scaling factor must be positive, got {lambda}")));
    }
    let g = f.grid();
    let grid = Grid1D::with_origin(g.n(), g.length() / lambda, g.origin() / lambda)?;
    let amp = lambda.powf(0.5 / sigma);
    let samples = f.samples().iter().map(|&z| z * amp).collect();
    Field::new(grid, f.time() / (lambda * lambda), samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedReport {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub relative_mass_drift: f64,
    pub relative_energy_drift: f64,
}

impl ConservedReport {
    pub fn measure(f: &Field, sigma: f64, form: NonlinearForm, reference: Option<(f64, f64)>) -> Result<Self> {
        let m = mass(f);
        let e = energy_for(f, sigma, form)?;
        let (m0, e0) = reference.unwrap_or((m, e));
        Ok(ConservedReport {
            time: f.time(),
            mass: m,
            energy: e,
            relative_mass_drift: relative_drift(m, m0),
            relative_energy_drift: relative_drift(e, e0),
        })
    }
}

fn relative_drift(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        (value - reference).abs() / reference.abs()
    }
}

/// Width and tolerance of the edge zone that certifies the periodic box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailGuard {
    /// Fraction of the box, split evenly between the two ends.
    pub fraction: f64,
    /// Largest admissible ratio of edge-zone mass to total mass.
    pub tolerance: f64,
}

impl Default for TailGuard {
    fn default() -> Self {
        TailGuard { fraction: 0.1, tolerance: 1e-8 }
    }
}

impl TailGuard {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::domain(format!("edge-zone fraction must lie in (0, 1), got {}", self.fraction)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::domain("tail-mass tolerance must be positive"));
        }
        Ok(())
    }

    /// Number of grid points in each end zone.
    pub fn zone_points(&self, n: usize) -> usize {
        ((0.5 * self.fraction * n as f64).ceil() as usize).max(1)
    }

    pub fn edge_fraction_of(&self, samples: &[Complex]) -> f64 {
        let k = self.zone_points(samples.len());
        let n = samples.len();
        let edge: f64 = samples[..k].iter().chain(&samples[n - k..]).map(|z| z.norm_sqr()).sum();
        let total: f64 = samples.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            0.0
        } else {
            edge / total
        }
    }

    pub fn edge_fraction(&self, f: &Field) -> f64 {
        self.edge_fraction_of(f.samples())
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        let fraction = self.edge_fraction(f);
        if fraction > self.tolerance {
            Err(Error::Truncation { fraction, tolerance: self.tolerance })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{free_propagate, soliton_field, SolitonParams};
    use crate::grid::SobolevKind;
    use crate::norms::sobolev_norm;
    use std::f64::consts::PI;

    #[test]
    fn mass_examples() {
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        let one = Field::from_fn(g, 0.0, |_| Complex::new(1.0, 0.0)).unwrap();
        assert!((mass(&one) - 2.0 * PI).abs() < 1e-14);
        let p = SolitonParams::new(1.0, 0.25, 0.0).unwrap();
        let sol = soliton_field(&p, Grid1D::new(4096, 160.0).unwrap()).unwrap();
        assert!((mass(&sol) - 2.0 * PI).abs() < 1e-8);
        let moved = free_propagate(&sol, 3.0).unwrap();
        assert!((mass(&moved) - mass(&sol)).abs() < 1e-12 * mass(&sol));
    }

    #[test]
    fn energy_of_real_gaussian_drops_coupling_term() {
        let g = Grid1D::new(1024, 40.0).unwrap();
        let f = Field::from_fn(g, 0.0, |x| Complex::new((-x * x).exp(), 0.0)).unwrap();
        for sigma in [1.0, 1.5, 2.0] {
            let e = energy(&f, sigma).unwrap();
            // ∫|u_x|² = √(π/2), ∫ e^{-(4σ+2)x²} = √(π/(4σ+2)).
            let expected = (PI / 2.0).sqrt() + (PI / (4.0 * sigma + 2.0)).sqrt() / (sigma + 1.0);
            assert!((e - expected).abs() < 1e-10, "σ={sigma}: {e} vs {expected}");
        }
        let zero = Field::zeros(g, 0.0);
        assert_eq!(energy(&zero, 1.0).unwrap(), 0.0);
        assert!(energy(&f, 0.0).is_err());
    }

    #[test]
    fn rescale_examples() {
        let g = Grid1D::new(512, 40.0).unwrap();
        let f = Field::from_fn(g, 2.0, |x| Complex::new((-x * x).exp(), 0.3 * (-(x - 0.5).powi(2)).exp())).unwrap();
        let same = rescale(&f, 1.0, 1.5).unwrap();
        assert_eq!(same.samples(), f.samples());
        assert_eq!(same.time(), 2.0);
        for sigma in [1.0, 1.5, 2.0] {
            for lambda in [0.5, 2.0, 3.7] {
                let r = rescale(&f, lambda, sigma).unwrap();
                let expected = lambda.powf(1.0 / sigma - 1.0) * mass(&f);
                assert!((mass(&r) - expected).abs() < 1e-8 * expected);
                let sc = critical_index(sigma);
                let a = sobolev_norm(&f, sc, SobolevKind::Homogeneous).unwrap();
                let b = sobolev_norm(&r, sc, SobolevKind::Homogeneous).unwrap();
                assert!((a - b).abs() < 1e-6 * a, "σ={sigma} λ={lambda}");
                assert!((r.time() - 2.0 / (lambda * lambda)).abs() < 1e-15);
            }
        }
        assert!(rescale(&f, 0.0, 1.0).is_err());
    }

    #[test]
    fn tail_guard_flags_edge_mass() {
        let g = Grid1D::new(256, 20.0).unwrap();
        let guard = TailGuard::default();
        let centred = Field::from_fn(g, 0.0, |x| Complex::new((-x * x).exp(), 0.0)).unwrap();
        assert!(guard.check(&centred).is_ok());
        let edge = Field::from_fn(g, 0.0, |x| Complex::new((-(x - 9.5).powi(2)).exp(), 0.0)).unwrap();
        assert!(matches!(guard.check(&edge), Err(Error::Truncation { .. })));
    }
}
