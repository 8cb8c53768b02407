//! Wave packets `Φ_v = e^{ix²/4t} χ((x − vt)/√t)` and the asymptotic profile
//! `γ(t, v) = ∫ u conj(Φ_v) dx` they test against.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equation::{check_sigma, modulus_power};
use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::grid::{forward_plan, interpolate, refine, to_spectrum, transform_at, Complex, Field, Grid1D, Spectrum};
use crate::interp::UniformTable;
use crate::norms::lp_norm;
use crate::quadrature::integrate;
use crate::vector_field::apply_l;

const I: Complex = Complex::new(0.0, 1.0);

/// `∫_{-1}^{1} exp(−1/(1−y²)) dy`.
pub const BUMP_MASS: f64 = 0.443_993_816_168_079_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiKind {
    /// `exp(−1/(1−y²))` on `|y| < 1`.
    #[default]
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketConfig {
    pub chi_kind: ChiKind,
    /// Divisor applied to the raw bump so that `∫χ = 1`.
    pub chi_norm: f64,
    pub quadrature_tol: f64,
    /// Band-limited upsampling factor used before the physical-space quadrature.
    pub refine: usize,
}

impl Default for PacketConfig {
    fn default() -> Self {
        PacketConfig { chi_kind: ChiKind::Bump, chi_norm: BUMP_MASS, quadrature_tol: 1e-12, refine: 8 }
    }
}

fn raw_bump(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

/// `∫ raw bump` by adaptive quadrature.
pub fn bump_mass(tol: f64) -> Result<f64> {
    integrate(raw_bump, -1.0, 1.0, tol)
}

impl PacketConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.chi_norm > 0.0 && self.chi_norm.is_finite()) {
            return Err(Error::config("packet.chi_norm", "must be positive"));
        }
        if !(self.quadrature_tol > 0.0) {
            return Err(Error::config("packet.quadrature_tol", "must be positive"));
        }
        if self.refine == 0 {
            return Err(Error::config("packet.refine", "must be at least 1"));
        }
        Ok(())
    }

    pub fn chi(&self, y: f64) -> f64 {
        raw_bump(y) / self.chi_norm
    }

    pub fn chi_d1(&self, y: f64) -> f64 {
        if y.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - y * y;
        self.chi(y) * (-2.0 * y / (s * s))
    }

    pub fn chi_d2(&self, y: f64) -> f64 {
        if y.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - y * y;
        let h = -2.0 * y / (s * s);
        let dh = -2.0 / (s * s) - 8.0 * y * y / (s * s * s);
        self.chi(y) * (h * h + dh)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("packet time must be positive, got {t}")))
    }
}

fn check_support(v: f64, t: f64, grid: &Grid1D) -> Result<()> {
    let (lo, hi) = (v * t - t.sqrt(), v * t + t.sqrt());
    let (a, b) = (grid.origin(), grid.origin() + grid.length());
    if lo <= a || hi >= b {
        return Err(Error::Range(format!("packet support [{lo}, {hi}] leaves the box [{a}, {b})")));
    }
    Ok(())
}

/// `e^{ix²/4t} χ((x−vt)/√t)` sampled on `grid`.
pub fn wave_packet(v: f64, t: f64, grid: Grid1D, cfg: &PacketConfig) -> Result<Field> {
    check_time(t)?;
    check_support(v, t, &grid)?;
    let rt = t.sqrt();
    Field::from_fn(grid, t, |x| Complex::from_polar(cfg.chi((x - v * t) / rt), x * x / (4.0 * t)))
}

/// `(i∂_t + ∂_x²)Φ_v = (e^{iφ}/2t)(iχ(y) + iyχ′(y) + 2χ″(y))` with `y = (x−vt)/√t`.
pub fn packet_residual(v: f64, t: f64, grid: Grid1D, cfg: &PacketConfig) -> Result<Field> {
    check_time(t)?;
    check_support(v, t, &grid)?;
    let rt = t.sqrt();
    Field::from_fn(grid, t, |x| {
        let y = (x - v * t) / rt;
        if y.abs() >= 1.0 {
            return Complex::new(0.0, 0.0);
        }
        let inner = I * (cfg.chi(y) + y * cfg.chi_d1(y)) + 2.0 * cfg.chi_d2(y);
        Complex::from_polar(0.5 / t, x * x / (4.0 * t)) * inner
    })
}

/// Rectangle rule for `∫u conj(Φ_v)` over the packet support of a (refined) field.
fn gamma_on(f: &Field, v: f64, cfg: &PacketConfig) -> Result<Complex> {
    let t = f.time();
    check_time(t)?;
    let g = f.grid();
    check_support(v, t, g)?;
    let rt = t.sqrt();
    let dx = g.dx();
    let lo = ((v * t - rt - g.origin()) / dx).ceil().max(0.0) as usize;
    let hi = (((v * t + rt - g.origin()) / dx).floor() as usize).min(g.n() - 1);
    let mut acc = Complex::new(0.0, 0.0);
    for j in lo..=hi {
        let x = g.x(j);
        let chi = cfg.chi((x - v * t) / rt);
        if chi != 0.0 {
            acc += f.samples()[j] * Complex::from_polar(chi, -x * x / (4.0 * t));
        }
    }
    Ok(acc * dx)
}

/// `γ(t, v) = ∫ u conj(Φ_v) dx` at the field's time.
pub fn gamma_physical(f: &Field, v: f64, cfg: &PacketConfig) -> Result<Complex> {
    cfg.validate()?;
    gamma_on(&refine(f, cfg.refine)?, v, cfg)
}

const TABLE_STEP: f64 = 0.01;
const TABLE_FFT: usize = 1 << 17;
const TABLE_HALF: usize = 60_000;

struct ChirpTransform {
    dy: f64,
    /// `(y_j, e^{iy_j²/4} χ_raw(y_j))` on the support.
    samples: Vec<(f64, Complex)>,
    table: UniformTable,
}

impl ChirpTransform {
    fn build() -> Self {
        let n = TABLE_FFT;
        let dy = 2.0 * PI / (TABLE_STEP * n as f64);
        let half = (1.0 / dy).floor() as i64;
        let samples: Vec<(f64, Complex)> = (-half..=half)
            .map(|j| j as f64 * dy)
            .map(|y| (y, Complex::from_polar(raw_bump(y), 0.25 * y * y)))
            .collect();
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (j, &(_, g)) in (-half..=half).zip(&samples) {
            buf[j.rem_euclid(n as i64) as usize] = g;
        }
        forward_plan(n).process(&mut buf);
        let m = TABLE_HALF as i64;
        let values = (-m..=m).map(|k| buf[k.rem_euclid(n as i64) as usize] * dy).collect();
        ChirpTransform { dy, samples, table: UniformTable::new(-(m as f64) * TABLE_STEP, TABLE_STEP, values) }
    }

    /// `∫ e^{iy²/4} χ_raw(y) e^{−iyη} dy`.
    fn eval(&self, eta: f64) -> Complex {
        self.table.eval(eta).unwrap_or_else(|| {
            self.samples.iter().map(|&(y, g)| g * Complex::from_polar(1.0, -y * eta)).sum::<Complex>() * self.dy
        })
    }
}

fn chirp_transform() -> &'static ChirpTransform {
    static TABLE: OnceLock<ChirpTransform> = OnceLock::new();
    TABLE.get_or_init(ChirpTransform::build)
}

/// `Φ̂_v(ξ) = √t e^{−itξ²} e^{iη²} F(η)` with `η = √t(ξ − v/2)` and
/// `F(η) = ∫ e^{iy²/4} χ(y) e^{−iyη} dy`.
pub fn packet_transform(v: f64, t: f64, xi: f64, cfg: &PacketConfig) -> Complex {
    let rt = t.sqrt();
    let eta = rt * (xi - 0.5 * v);
    let f = chirp_transform().eval(eta) / cfg.chi_norm;
    // −tξ² + η² = t(v²/4 − vξ), which stays small where ξ ≈ v/2.
    Complex::from_polar(rt, t * (0.25 * v * v - v * xi)) * f
}

/// `γ(t, v) = (1/2π)∫ û conj(Φ̂_v) dξ`, summed over the modes of `s`.
pub fn gamma_fourier(s: &Spectrum, v: f64, cfg: &PacketConfig) -> Result<Complex> {
    cfg.validate()?;
    let t = s.time();
    check_time(t)?;
    let g = s.grid();
    check_support(v, t, g)?;
    let acc: Complex = s
        .coefficients()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() != 0.0)
        .map(|(j, &c)| c * packet_transform(v, t, g.frequency(j), cfg).conj())
        .sum();
    Ok(acc / g.length())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSource {
    Physical,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketProfile {
    pub time: f64,
    pub velocities: Vec<f64>,
    pub gamma: Vec<Complex>,
    pub source: ProfileSource,
}

impl PacketProfile {
    pub fn validate(&self) -> Result<()> {
        check_time(self.time)?;
        if self.velocities.len() != self.gamma.len() {
            return Err(Error::Consistency(format!(
                "{} velocities for {} profile values",
                self.velocities.len(),
                self.gamma.len()
            )));
        }
        if self.velocities.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidData("velocities must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Velocity spacing of a uniform grid, or 0 for a single velocity.
    pub fn spacing(&self) -> f64 {
        match self.velocities.len() {
            0 | 1 => 0.0,
            n => (self.velocities[n - 1] - self.velocities[0]) / (n - 1) as f64,
        }
    }
}

/// `count` equally spaced velocities on `[−v_max, v_max]`.
pub fn velocity_grid(v_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(v_max > 0.0 && v_max.is_finite()) || count < 2 {
        return Err(Error::domain("velocity grid needs v_max > 0 and at least two points"));
    }
    let h = 2.0 * v_max / (count - 1) as f64;
    Ok((0..count).map(|k| -v_max + k as f64 * h).collect())
}

fn check_velocities(velocities: &[f64]) -> Result<()> {
    if velocities.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidData("velocities must be strictly increasing".into()));
    }
    Ok(())
}

/// `γ(t, v)` over a velocity grid by physical-space quadrature.
pub fn profile(f: &Field, velocities: &[f64], cfg: &PacketConfig) -> Result<PacketProfile> {
    cfg.validate()?;
    check_time(f.time())?;
    check_velocities(velocities)?;
    let fine = refine(f, cfg.refine)?;
    let gamma = velocities.par_iter().map(|&v| gamma_on(&fine, v, cfg)).collect::<Result<_>>()?;
    Ok(PacketProfile { time: f.time(), velocities: velocities.to_vec(), gamma, source: ProfileSource::Physical })
}

/// `γ(t, v)` over a velocity grid from the spectrum.
pub fn profile_fourier(f: &Field, velocities: &[f64], cfg: &PacketConfig) -> Result<PacketProfile> {
    check_velocities(velocities)?;
    let s = to_spectrum(f)?;
    let gamma = velocities.par_iter().map(|&v| gamma_fourier(&s, v, cfg)).collect::<Result<_>>()?;
    Ok(PacketProfile { time: f.time(), velocities: velocities.to_vec(), gamma, source: ProfileSource::Fourier })
}

/// `max|γ_a − γ_b| / max|γ_a|`, or the raw difference when `γ_a` vanishes.
pub fn relative_profile_gap(a: &PacketProfile, b: &PacketProfile) -> Result<f64> {
    if a.velocities != b.velocities || a.time != b.time {
        return Err(Error::Consistency("profiles differ in time or velocity grid".into()));
    }
    let diff = a.gamma.iter().zip(&b.gamma).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let scale = a.gamma.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

/// `√(4π) e^{iπ/4}`: `û(ξ) ≈ κ e^{−itξ²} γ(t, 2ξ)` under `ℱf = ∫ f e^{−ixξ} dx`.
pub fn fourier_profile_factor() -> Complex {
    Complex::from_polar((4.0 * PI).sqrt(), 0.25 * PI)
}

fn sup(values: &[Complex]) -> f64 {
    values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Trapezoid-rule L² norm over a uniform grid of spacing `h`.
fn l2_uniform(values: &[Complex], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values.iter().map(|z| z.norm_sqr()).sum::<f64>()
        - 0.5 * (values[0].norm_sqr() + values[n - 1].norm_sqr());
    (inner * h).sqrt()
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// The five normalized differences between `u` and its packet profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceReport {
    pub time: f64,
    /// `t^{3/4}‖u(t,vt) − t^{−1/2}e^{iφ}γ‖_{L^∞_v} / ‖Lu‖₂`
    pub r1: f64,
    /// `t ‖u(t,vt) − t^{−1/2}e^{iφ}γ‖_{L²_v} / ‖Lu‖₂`
    pub r2: f64,
    /// `t^{3/4}‖u_x(t,vt) − (i/2)t^{−1/2}e^{iφ}vγ‖_{L^∞_v} / (‖Lu‖₂ + ‖Lu_x‖₂)`
    pub r3: f64,
    /// `t^{1/4}‖û(ξ) − κe^{−itξ²}γ(t,2ξ)‖_{L^∞_ξ} / ‖Lu‖₂`
    pub r4: f64,
    /// `t^{1/2}‖û(ξ) − κe^{−itξ²}γ(t,2ξ)‖_{L²_ξ} / ‖Lu‖₂`
    pub r5: f64,
}

impl DifferenceReport {
    pub fn to_map(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([("r1", self.r1), ("r2", self.r2), ("r3", self.r3), ("r4", self.r4), ("r5", self.r5)])
    }
}

pub fn difference_report(f: &Field, p: &PacketProfile) -> Result<DifferenceReport> {
    p.validate()?;
    if (f.time() - p.time).abs() > 1e-12 * p.time.max(1.0) {
        return Err(Error::Consistency(format!("field at t = {} but profile at t = {}", f.time(), p.time)));
    }
    let t = p.time;
    let spec = to_spectrum(f)?;
    let points: Vec<f64> = p.velocities.iter().map(|v| v * t).collect();
    let u_at = interpolate(&spec, &points);
    let ux_spec = spec.apply_symbol(|xi| I * xi);
    let ux_at = interpolate(&ux_spec, &points);
    let lu = apply_l(f)?;
    let lux = apply_l(&crate::grid::from_spectrum(&ux_spec)?)?;
    let lu_norm = lp_norm(&lu, 2.0)?;
    let lux_norm = lp_norm(&lux, 2.0)?;

    let mut d_u = Vec::with_capacity(points.len());
    let mut d_ux = Vec::with_capacity(points.len());
    for (k, (&v, &gamma)) in p.velocities.iter().zip(&p.gamma).enumerate() {
        let wave = Complex::from_polar(t.powf(-0.5), 0.25 * v * v * t) * gamma;
        d_u.push(u_at[k] - wave);
        d_ux.push(ux_at[k] - 0.5 * I * v * wave);
    }
    let xis: Vec<f64> = p.velocities.iter().map(|v| 0.5 * v).collect();
    let u_hat = transform_at(f, &xis);
    let kappa = fourier_profile_factor();
    let d_hat: Vec<Complex> =
        xis.iter().zip(&u_hat).zip(&p.gamma).map(|((&xi, &uh), &g)| uh - kappa * Complex::from_polar(1.0, -t * xi * xi) * g).collect();
    let hv = p.spacing();
    Ok(DifferenceReport {
        time: t,
        r1: ratio(t.powf(0.75) * sup(&d_u), lu_norm),
        r2: ratio(t * l2_uniform(&d_u, hv), lu_norm),
        r3: ratio(t.powf(0.75) * sup(&d_ux), lu_norm + lux_norm),
        r4: ratio(t.powf(0.25) * sup(&d_hat), lu_norm),
        r5: ratio(t.sqrt() * l2_uniform(&d_hat, 0.5 * hv), lu_norm),
    })
}

/// Weights of the three-point derivative at the middle of `t0 < t1 < t2`.
pub(crate) fn three_point_weights(t0: f64, t1: f64, t2: f64) -> [f64; 3] {
    let (h1, h2) = (t1 - t0, t2 - t1);
    [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))]
}

/// `R = (v t^{−σ}/2)|γ|^{2σ}γ − iγ_t` over a velocity grid from three
/// consecutive profiles; `γ_t` is the three-point derivative at the middle time.
pub fn remainder_from_profiles(profiles: [&PacketProfile; 3], sigma: f64) -> Result<Vec<Complex>> {
    check_sigma(sigma)?;
    let [a, b, c] = profiles;
    for p in profiles {
        p.validate()?;
    }
    if a.velocities != b.velocities || b.velocities != c.velocities {
        return Err(Error::Consistency("profiles use different velocity grids".into()));
    }
    if !(a.time < b.time && b.time < c.time) {
        return Err(Error::InvalidData("profiles must be in increasing time order".into()));
    }
    let w = three_point_weights(a.time, b.time, c.time);
    let t = b.time;
    Ok(b.velocities
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let g = b.gamma[k];
            let gt = w[0] * a.gamma[k] + w[1] * g + w[2] * c.gamma[k];
            0.5 * v * t.powf(-sigma) * modulus_power(g, sigma) * g - I * gt
        })
        .collect())
}

/// `R(t, v)` from the trajectory snapshot at `t` and its two neighbours.
pub fn remainder_r(traj: &Trajectory, t: f64, v: f64, cfg: &PacketConfig) -> Result<Complex> {
    let times = traj.snapshots.times();
    let tol = 1e-9 * t.abs().max(1.0);
    let i = times
        .iter()
        .position(|&s| (s - t).abs() <= tol)
        .ok_or_else(|| Error::InsufficientData(format!("no snapshot at t = {t}")))?;
    if i == 0 || i + 1 >= times.len() {
        return Err(Error::InsufficientData(format!("t = {t} is at the edge of the snapshot range")));
    }
    let fields = traj.snapshots.fields();
    let ps = [i - 1, i, i + 1].map(|j| profile(&fields[j], &[v], cfg));
    let [a, b, c] = ps;
    let (a, b, c) = (a?, b?, c?);
    Ok(remainder_from_profiles([&a, &b, &c], traj.config.sigma)?[0])
}
