//! Closed-form solutions of the asymptotic profile equation
//! `iγ_t = (v/2) t^{−σ} |γ|^{2σ} γ`, extraction of the scattering profile,
//! modified-scattering errors and decay fits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::equation::{check_sigma, modulus_power};
use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::fit::line_fit;
use crate::grid::{to_spectrum, Complex, Field};
use crate::interp::{UniformTable, STENCIL};
use crate::norms::lp_norm;
use crate::packets::{fourier_profile_factor, PacketProfile};

fn check_regime(sigma: f64) -> Result<()> {
    check_sigma(sigma)?;
    if sigma < 1.0 {
        return Err(Error::UnsupportedRegime(format!("profile asymptotics need σ >= 1, got {sigma}")));
    }
    Ok(())
}

/// `∫^t s^{−σ} ds`: `log t` for `σ = 1`, `t^{1−σ}/(1−σ)` above.
fn phase_clock(t: f64, sigma: f64) -> Result<f64> {
    if sigma == 1.0 {
        if !(t > 1.0) {
            return Err(Error::domain(format!("the logarithmic phase needs t > 1, got {t}")));
        }
        Ok(t.ln())
    } else {
        if !(t > 0.0) {
            return Err(Error::domain(format!("time must be positive, got {t}")));
        }
        Ok(t.powf(1.0 - sigma) / (1.0 - sigma))
    }
}

/// `W e^{−i(v/2)|W|^{2σ}Λ(t)}` with `Λ` the phase clock above.
pub fn ode_solution(w: Complex, v: f64, t: f64, sigma: f64) -> Result<Complex> {
    check_regime(sigma)?;
    let clock = phase_clock(t, sigma)?;
    Ok(w * Complex::from_polar(1.0, -0.5 * v * modulus_power(w, sigma) * clock))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringProfile {
    pub velocities: Vec<f64>,
    pub w: Vec<Complex>,
    pub sigma: f64,
    pub extracted_at: f64,
}

impl ScatteringProfile {
    fn table(&self) -> Result<UniformTable> {
        let n = self.velocities.len();
        if n < STENCIL || n != self.w.len() {
            return Err(Error::InsufficientData(format!("need {STENCIL} matching profile samples, got {n}")));
        }
        let h = (self.velocities[n - 1] - self.velocities[0]) / (n - 1) as f64;
        let uniform = self.velocities.iter().enumerate().all(|(k, &v)| (v - self.velocities[0] - k as f64 * h).abs() <= 1e-9 * h);
        if !(h > 0.0 && uniform) {
            return Err(Error::InvalidData("scattering profile needs a uniform increasing velocity grid".into()));
        }
        Ok(UniformTable::new(self.velocities[0], h, self.w.clone()))
    }
}

/// Undo the profile-equation phase: `W = γ e^{+i(v/2)|γ|^{2σ}Λ(t)}`.
pub fn extract_w(p: &PacketProfile, sigma: f64) -> Result<ScatteringProfile> {
    check_regime(sigma)?;
    p.validate()?;
    let clock = phase_clock(p.time, sigma)?;
    let w = p
        .velocities
        .iter()
        .zip(&p.gamma)
        .map(|(&v, &g)| g * Complex::from_polar(1.0, 0.5 * v * modulus_power(g, sigma) * clock))
        .collect();
    Ok(ScatteringProfile { velocities: p.velocities.clone(), w, sigma, extracted_at: p.time })
}

/// `sup_v |W_a(v) − W_b(v)|` for profiles on the same velocity grid.
pub fn profile_distance(a: &ScatteringProfile, b: &ScatteringProfile) -> Result<f64> {
    if a.velocities != b.velocities {
        return Err(Error::Consistency("profiles use different velocity grids".into()));
    }
    Ok(a.w.iter().zip(&b.w).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}

/// `(Σ_k (1+ξ_k²)^s |Ŵ_k|² Δξ/2π)^{1/2}` for the samples of `W`, read as a
/// function that vanishes outside the velocity grid.
pub fn profile_sobolev_norm(p: &ScatteringProfile, s: f64) -> Result<f64> {
    let n = p.w.len();
    if n < 2 {
        return Err(Error::InsufficientData("need two profile samples".into()));
    }
    let h = (p.velocities[n - 1] - p.velocities[0]) / (n - 1) as f64;
    let span = n as f64 * h;
    let mut acc = 0.0;
    for k in 0..n as i64 {
        let m = if k <= n as i64 / 2 { k } else { k - n as i64 };
        let xi = 2.0 * PI * m as f64 / span;
        let c: Complex = p
            .w
            .iter()
            .enumerate()
            .map(|(j, &w)| w * Complex::from_polar(h, -xi * j as f64 * h))
            .sum();
        acc += (1.0 + xi * xi).powf(s) * c.norm_sqr();
    }
    Ok((acc / span).sqrt())
}

/// Norms of the physical and Fourier-side modified-scattering errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringErrors {
    pub time: f64,
    pub err_x_sup: f64,
    pub err_x_l2: f64,
    pub err_xi_sup: f64,
    pub err_xi_l2: f64,
    /// Mass fraction of `u` outside `[v_min t, v_max t]`.
    pub uncovered_mass: f64,
}

/// Largest admissible mass fraction outside the profile's velocity range.
pub const COVERAGE_TOLERANCE: f64 = 1e-6;

/// Compare `u(t)` with `t^{−1/2} e^{ix²/4t} γ̃(x/t)` and `û(t)` with
/// `κ e^{−itξ²} γ̃(2ξ)`, where `γ̃` is the profile-equation flow of `W`.
pub fn scattering_errors(f: &Field, prof: &ScatteringProfile) -> Result<ScatteringErrors> {
    check_regime(prof.sigma)?;
    let t = f.time();
    phase_clock(t, prof.sigma)?;
    if !(t > 1.0) {
        return Err(Error::domain(format!("scattering errors need t > 1, got {t}")));
    }
    let table = prof.table()?;
    let g = f.grid();
    let total = lp_norm(f, 2.0)?.powi(2);
    let dx = g.dx();
    let mut outside = 0.0;
    let (mut sx, mut lx) = (0.0_f64, 0.0);
    for (j, &u) in f.samples().iter().enumerate() {
        let x = g.x(j);
        let v = x / t;
        let model = match table.eval(v) {
            Some(w) => Complex::from_polar(t.powf(-0.5), x * x / (4.0 * t)) * ode_solution(w, v, t, prof.sigma)?,
            None => {
                outside += u.norm_sqr() * dx;
                Complex::new(0.0, 0.0)
            }
        };
        let e = (u - model).norm();
        sx = sx.max(e);
        lx += e * e * dx;
    }
    let uncovered = if total == 0.0 { 0.0 } else { outside / total };
    if uncovered > COVERAGE_TOLERANCE {
        return Err(Error::Coverage(format!(
            "mass fraction {uncovered:.3e} lies outside the velocity range [{}, {}] at t = {t}",
            table.start(),
            table.end()
        )));
    }
    let spec = to_spectrum(f)?;
    let kappa = fourier_profile_factor();
    let dxi = 2.0 * PI / g.length();
    let (mut sxi, mut lxi) = (0.0_f64, 0.0);
    for (k, &c) in spec.coefficients().iter().enumerate() {
        let xi = g.frequency(k);
        let model = match table.eval(2.0 * xi) {
            Some(w) => kappa * Complex::from_polar(1.0, -t * xi * xi) * ode_solution(w, 2.0 * xi, t, prof.sigma)?,
            None => Complex::new(0.0, 0.0),
        };
        let e = (c - model).norm();
        sxi = sxi.max(e);
        lxi += e * e * dxi;
    }
    Ok(ScatteringErrors {
        time: t,
        err_x_sup: sx,
        err_x_l2: lx.sqrt(),
        err_xi_sup: sxi,
        err_xi_l2: lxi.sqrt(),
        uncovered_mass: uncovered,
    })
}

/// `value ≈ amplitude · t^{exponent}` fitted in log-log over `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

pub const MIN_DECAY_POINTS: usize = 8;

pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo >= 1.0 && hi > lo) {
        return Err(Error::domain(format!("fit window must satisfy 1 <= t_min < t_max, got ({lo}, {hi})")));
    }
    let kept: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= lo && t <= hi).collect();
    if kept.len() < MIN_DECAY_POINTS {
        return Err(Error::InsufficientData(format!(
            "decay fit needs {MIN_DECAY_POINTS} samples in [{lo}, {hi}], got {}",
            kept.len()
        )));
    }
    if let Some(&(t, v)) = kept.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(Error::domain(format!("non-positive value {v} at t = {t}")));
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let fit = line_fit(&xs, &ys)?;
    Ok(DecayFit {
        exponent: fit.slope,
        amplitude: fit.intercept.exp(),
        r_squared: fit.r_squared,
        window,
        points: kept.len(),
    })
}

/// `sup_{t ≥ 1} t^{1/2} ‖u(t)‖_∞ / ‖u₀‖_{L¹}` from `(t, ‖u(t)‖_∞)` pairs.
pub fn dispersive_constant_series(initial_l1: f64, sup_norms: &[(f64, f64)]) -> Result<f64> {
    if sup_norms.iter().all(|p| p.0 < 1.0) {
        return Err(Error::InsufficientData("no samples with t >= 1".into()));
    }
    if initial_l1 == 0.0 {
        return Ok(0.0);
    }
    Ok(sup_norms.iter().filter(|p| p.0 >= 1.0).map(|&(t, s)| t.sqrt() * s / initial_l1).fold(0.0, f64::max))
}

/// The dispersive constant over the snapshots of a run reaching `t ≥ 16`.
pub fn dispersive_constant(traj: &Trajectory) -> Result<f64> {
    let times = traj.snapshots.times();
    if times.last().is_none_or(|&t| t < 16.0) {
        return Err(Error::InsufficientData("dispersive constant needs snapshots up to t >= 16".into()));
    }
    let l1 = lp_norm(traj.initial(), 1.0)?;
    let series: Vec<(f64, f64)> = traj.snapshots.fields().iter().map(|f| (f.time(), f.sup_norm())).collect();
    dispersive_constant_series(l1, &series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{gaussian_exact, gaussian_sup};
    use crate::grid::Grid1D;
    use crate::packets::ProfileSource;

    fn sample_profile(sigma: f64, t: f64) -> (Vec<Complex>, PacketProfile) {
        let vs: Vec<f64> = (0..33).map(|k| -4.0 + 0.25 * k as f64).collect();
        let w: Vec<Complex> = vs.iter().map(|&v| Complex::new(0.4 * (-v * v).exp(), 0.1 * v * (-v * v).exp())).collect();
        let gamma = vs.iter().zip(&w).map(|(&v, &w)| ode_solution(w, v, t, sigma).unwrap()).collect();
        (w, PacketProfile { time: t, velocities: vs, gamma, source: ProfileSource::Physical })
    }

    #[test]
    fn ode_solution_properties() {
        let w = Complex::new(0.3, -0.4);
        for sigma in [1.0, 1.5, 2.0] {
            for t in [1.5, 10.0, 300.0] {
                let g = ode_solution(w, 1.7, t, sigma).unwrap();
                assert!((g.norm() - w.norm()).abs() < 1e-15);
                assert_eq!(ode_solution(Complex::new(0.8, 0.0), 0.0, t, sigma).unwrap(), Complex::new(0.8, 0.0));
                // iγ_t = (v/2)t^{−σ}|γ|^{2σ}γ with the analytic and a finite-difference derivative.
                let v = 1.7;
                let rhs = 0.5 * v * t.powf(-sigma) * modulus_power(g, sigma) * g;
                let analytic = Complex::new(0.0, 1.0) * (-Complex::new(0.0, 0.5 * v * modulus_power(w, sigma) * t.powf(-sigma))) * g;
                assert!((analytic - rhs).norm() < 1e-10);
                let h = 1e-4;
                let fd = (ode_solution(w, v, t + h, sigma).unwrap() - ode_solution(w, v, t - h, sigma).unwrap()) / (2.0 * h);
                assert!((Complex::new(0.0, 1.0) * fd - rhs).norm() < 1e-5);
            }
        }
        assert!(matches!(ode_solution(w, 1.0, 2.0, 0.8), Err(Error::UnsupportedRegime(_))));
        assert!(ode_solution(w, 1.0, 0.5, 1.0).is_err());
        assert!(ode_solution(w, 1.0, 0.5, 1.5).is_ok());
    }

    #[test]
    fn extraction_inverts_the_flow() {
        for sigma in [1.0, 1.25, 1.5, 2.0] {
            for t in [2.0, 32.0, 64.0] {
                let (w, p) = sample_profile(sigma, t);
                let s = extract_w(&p, sigma).unwrap();
                for k in 0..w.len() {
                    assert!((s.w[k] - w[k]).norm() < 1e-12);
                    assert!((s.w[k].norm() - p.gamma[k].norm()).abs() <= 1e-15 * p.gamma[k].norm());
                }
            }
        }
        let (_, p) = sample_profile(1.5, 2.0);
        assert!(matches!(extract_w(&p, 0.5), Err(Error::UnsupportedRegime(_))));
    }

    #[test]
    fn manufactured_expansion_has_no_error() {
        let sigma = 1.0;
        let t = 20.0;
        let (w, p) = sample_profile(sigma, t);
        let prof = extract_w(&p, sigma).unwrap();
        let g = Grid1D::new(4096, 400.0).unwrap();
        let table = prof.table().unwrap();
        let f = Field::from_fn(g, t, |x| {
            let v = x / t;
            match table.eval(v) {
                Some(w) => Complex::from_polar(t.powf(-0.5), x * x / (4.0 * t)) * ode_solution(w, v, t, sigma).unwrap(),
                None => Complex::new(0.0, 0.0),
            }
        })
        .unwrap();
        let e = scattering_errors(&f, &prof).unwrap();
        assert!(e.err_x_sup < 1e-10 && e.err_x_l2 < 1e-10, "{e:?}");
        assert_eq!(w.len(), prof.w.len());

        let zero = ScatteringProfile { w: vec![Complex::new(0.0, 0.0); prof.w.len()], ..prof.clone() };
        let z = scattering_errors(&Field::zeros(g, t), &zero).unwrap();
        assert_eq!((z.err_x_sup, z.err_x_l2, z.err_xi_sup, z.err_xi_l2), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn coverage_is_checked() {
        let (_, p) = sample_profile(1.0, 4.0);
        let prof = extract_w(&p, 1.0).unwrap();
        let g = Grid1D::new(1024, 200.0).unwrap();
        let far = Field::from_fn(g, 4.0, |x| Complex::new((-(x - 60.0).powi(2)).exp(), 0.0)).unwrap();
        assert!(matches!(scattering_errors(&far, &prof), Err(Error::Coverage(_))));
    }

    #[test]
    fn decay_fit_examples() {
        let times: Vec<f64> = (0..12).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
        let exact: Vec<(f64, f64)> = times.iter().map(|&t| (t, 3.0 * t.powf(-0.5))).collect();
        let fit = fit_decay(&exact, (1.0, 100.0)).unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.amplitude - 3.0).abs() < 1e-9);
        let flat: Vec<(f64, f64)> = times.iter().map(|&t| (t, 0.2)).collect();
        assert!(fit_decay(&flat, (1.0, 100.0)).unwrap().exponent.abs() < 1e-14);
        assert!(matches!(fit_decay(&exact, (1.0, 4.0)), Err(Error::InsufficientData(_))));
        let bad: Vec<(f64, f64)> = times.iter().map(|&t| (t, 0.0)).collect();
        assert!(matches!(fit_decay(&bad, (1.0, 100.0)), Err(Error::Domain(_))));
        assert!(fit_decay(&exact, (0.5, 10.0)).is_err());
    }

    #[test]
    fn gaussian_sup_norm_decays_at_the_linear_rate() {
        let series: Vec<(f64, f64)> = (0..=32).map(|k| 16.0 * 2f64.powf(k as f64 / 8.0)).map(|t| (t, gaussian_sup(1.0, t))).collect();
        let fit = fit_decay(&series, (16.0, 256.0)).unwrap();
        assert!((fit.exponent + 0.5).abs() < 0.01, "{}", fit.exponent);
        let g = Grid1D::new(256, 40.0).unwrap();
        let f = gaussian_exact(1.0, 16.0, g).unwrap();
        assert!(f.sup_norm() > 0.0);
    }

    #[test]
    fn dispersive_constant_examples() {
        assert_eq!(dispersive_constant_series(0.0, &[(1.0, 0.0), (2.0, 0.0)]).unwrap(), 0.0);
        assert!(dispersive_constant_series(1.0, &[(0.5, 1.0)]).is_err());
        // e^{−x²}: ‖u₀‖_{L¹} = √π, ‖u(t)‖_∞ = (1+16t²)^{−1/4}.
        let series: Vec<(f64, f64)> = (1..=64).map(|t| t as f64).map(|t| (t, gaussian_sup(1.0, t))).collect();
        let c = dispersive_constant_series(PI.sqrt(), &series).unwrap();
        let expected = (1..=64).map(|t| t as f64).map(|t| t.sqrt() * (1.0 + 16.0 * t * t).powf(-0.25) / PI.sqrt()).fold(0.0, f64::max);
        assert!((c - expected).abs() < 1e-15);
    }

    #[test]
    fn sobolev_norm_of_profile() {
        let (_, p) = sample_profile(1.0, 4.0);
        let s = extract_w(&p, 1.0).unwrap();
        let n0 = profile_sobolev_norm(&s, 0.0).unwrap();
        let l2 = (s.w.iter().map(|z| z.norm_sqr()).sum::<f64>() * 0.25).sqrt();
        assert!((n0 - l2).abs() < 1e-12 * l2);
        let a = profile_sobolev_norm(&s, 0.5).unwrap();
        let b = profile_sobolev_norm(&s, 0.95).unwrap();
        assert!(n0 <= a && a <= b);
    }
}
