//! Time integration on the periodic box.
//!
//! Two fourth-order exponential Runge–Kutta schemes in Fourier space, both
//! propagating the linear part `−iξ²` exactly: exponential time
//! differencing (Cox–Matthews ETDRK4, the default) and the classical RK4
//! stages in the interaction picture (integrating factor). The nonlinear
//! term is evaluated pseudospectrally and its spectrum is truncated by the
//! dealiasing mask.

use std::sync::Arc;

use rustfft::Fft;
use serde::{Deserialize, Serialize};

use crate::equation::{check_sigma, modulus_power, power_nonlinearity, NonlinearForm};
use crate::error::{Error, Result};
use crate::grid::{
    dealias_mask, derivative, forward_plan, inverse_plan, to_spectrum, Complex, Field, Grid1D,
};
use crate::invariants::{ConservedReport, TailGuard};
use crate::norms::TimeSeriesField;

const ZERO: Complex = Complex::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Cox–Matthews exponential time differencing.
    #[default]
    Etdrk4,
    /// Classical RK4 on `e^{iξ²t} û`.
    IfRk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sigma: f64,
    #[serde(default)]
    pub form: NonlinearForm,
    #[serde(default)]
    pub scheme: Scheme,
    pub grid: Grid1D,
    pub dt: f64,
    pub t_end: f64,
    pub dealias_fraction: f64,
    /// Times at which snapshots are recorded, besides the initial state.
    pub snapshot_times: Vec<f64>,
    pub guard: TailGuard,
    /// `dt` must not exceed `dt_safety · dx²`.
    pub dt_safety: f64,
}

impl SimConfig {
    pub fn new(sigma: f64, grid: Grid1D, dt: f64, t_end: f64) -> Self {
        SimConfig {
            sigma,
            form: NonlinearForm::Divergence,
            scheme: Scheme::default(),
            grid,
            dt,
            t_end,
            dealias_fraction: 2.0 / 3.0,
            snapshot_times: vec![t_end],
            guard: TailGuard::default(),
            dt_safety: 1.0,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn with_form(mut self, form: NonlinearForm) -> Self {
        self.form = form;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn max_dt(&self) -> f64 {
        self.dt_safety * self.grid.dx().powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        check_sigma(self.sigma)?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("sim.dt", "must be positive"));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::config("sim.dt_safety", "must lie in (0, 1]"));
        }
        if self.dt > self.max_dt() {
            return Err(Error::config(
                "sim.dt",
                format!("{} exceeds the ceiling {:.3e} = dt_safety·dx²", self.dt, self.max_dt()),
            ));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::config("sim.t_end", "must be finite and non-negative"));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(Error::config("sim.dealias_fraction", "must lie in (0, 1]"));
        }
        if self.snapshot_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("sim.snapshot_times", "must be strictly increasing"));
        }
        if self.snapshot_times.iter().any(|&t| !(t >= 0.0 && t <= self.t_end)) {
            return Err(Error::config("sim.snapshot_times", "must lie in [0, t_end]"));
        }
        self.guard.validate().map_err(|e| Error::config("sim.tail_guard", e.to_string()))
    }
}

/// Why a run stopped before `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbortReason {
    TailMass { fraction: f64, tolerance: f64 },
    BlowUp,
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortReason::TailMass { fraction, tolerance } => {
                write!(f, "edge-zone mass fraction {fraction:.3e} exceeds {tolerance:.3e}")
            }
            AbortReason::BlowUp => f.write_str("non-finite values"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    pub time: f64,
    pub reason: AbortReason,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    pub snapshots: TimeSeriesField,
    pub reports: Vec<ConservedReport>,
    pub aborted: Option<Abort>,
}

impl Trajectory {
    pub fn is_accepted(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn initial(&self) -> &Field {
        &self.snapshots.fields()[0]
    }
}

/// Summary of a streamed run; snapshots went to the observer.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub reports: Vec<ConservedReport>,
    pub aborted: Option<Abort>,
    pub steps: usize,
}

/// Per-mode multipliers for one step size.
struct Coefficients {
    dt: f64,
    /// `e^{z/2}` and `e^{z}` with `z = −iξ²dt`.
    half: Vec<Complex>,
    full: Vec<Complex>,
    /// ETDRK4 weights; empty for the integrating-factor scheme.
    q: Vec<Complex>,
    f1: Vec<Complex>,
    f2: Vec<Complex>,
    f3: Vec<Complex>,
}

/// `(φ₁, φ₂, φ₃)(z)` with `φ_k(z) = Σ_m z^m/(m+k)!`.
fn phi_functions(z: Complex) -> (Complex, Complex, Complex) {
    if z.norm() < 0.5 {
        phi_series(z)
    } else {
        phi_closed(z)
    }
}

// 24 terms reach round-off for |z| < 1/2.
fn phi_series(z: Complex) -> (Complex, Complex, Complex) {
    let mut out = [Complex::new(0.0, 0.0); 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut term = Complex::new(1.0, 0.0);
        let mut fact: f64 = (1..=(k + 1)).map(|j| j as f64).product();
        let mut sum = term / fact;
        for m in 1..24 {
            term *= z;
            fact *= (m + k + 1) as f64;
            sum += term / fact;
        }
        *o = sum;
    }
    (out[0], out[1], out[2])
}

fn phi_closed(z: Complex) -> (Complex, Complex, Complex) {
    let e = z.exp();
    let one = Complex::new(1.0, 0.0);
    let p1 = (e - one) / z;
    let p2 = (e - one - z) / (z * z);
    let p3 = (e - one - z - 0.5 * z * z) / (z * z * z);
    (p1, p2, p3)
}

impl Coefficients {
    fn new(xi2: &[f64], dt: f64, scheme: Scheme) -> Self {
        let half: Vec<Complex> = xi2.iter().map(|&x2| Complex::from_polar(1.0, -0.5 * x2 * dt)).collect();
        let full = half.iter().map(|h| h * h).collect();
        let (mut q, mut f1, mut f2, mut f3) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        if scheme == Scheme::Etdrk4 {
            for &x2 in xi2 {
                let z = Complex::new(0.0, -x2 * dt);
                let (p1, p2, p3) = phi_functions(z);
                let (h1, _, _) = phi_functions(0.5 * z);
                q.push(0.5 * dt * h1);
                f1.push(dt * (p1 - 3.0 * p2 + 4.0 * p3));
                f2.push(dt * (p2 - 2.0 * p3));
                f3.push(dt * (4.0 * p3 - p2));
            }
        }
        Coefficients { dt, half, full, q, f1, f2, f3 }
    }
}

/// Reusable integrator state: FFT plans, multipliers and scratch buffers.
pub struct Stepper {
    grid: Grid1D,
    sigma: f64,
    form: NonlinearForm,
    scheme: Scheme,
    guard: TailGuard,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `−iξ` on kept modes, zero elsewhere.
    nonlinear_symbol: Vec<Complex>,
    /// `iξ` with the Nyquist mode removed.
    derivative_symbol: Vec<Complex>,
    xi2: Vec<f64>,
    /// The regular step and the most recent shortened one.
    cache: Vec<Coefficients>,
    scratch: Vec<Complex>,
    phys: Vec<Complex>,
    aux: Vec<Complex>,
    k: [Vec<Complex>; 4],
    stage: Vec<Complex>,
    stage2: Vec<Complex>,
}

impl Stepper {
    pub fn new(
        grid: Grid1D,
        sigma: f64,
        form: NonlinearForm,
        scheme: Scheme,
        dealias_fraction: f64,
        guard: TailGuard,
    ) -> Result<Self> {
        check_sigma(sigma)?;
        let n = grid.n();
        let mask = dealias_mask(&grid, dealias_fraction)?;
        let nyq = grid.nyquist_index();
        let nonlinear_symbol = (0..n)
            .map(|j| if mask[j] && j != nyq { Complex::new(0.0, -grid.frequency(j)) } else { ZERO })
            .collect();
        let derivative_symbol =
            (0..n).map(|j| if j == nyq { ZERO } else { Complex::new(0.0, grid.frequency(j)) }).collect();
        let fwd = forward_plan(n);
        let inv = inverse_plan(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Ok(Stepper {
            grid,
            sigma,
            form,
            scheme,
            guard,
            fwd,
            inv,
            nonlinear_symbol,
            derivative_symbol,
            xi2: (0..n).map(|j| grid.frequency(j).powi(2)).collect(),
            cache: Vec::with_capacity(2),
            scratch: vec![ZERO; scratch_len],
            phys: vec![ZERO; n],
            aux: vec![ZERO; n],
            k: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
            stage: vec![ZERO; n],
            stage2: vec![ZERO; n],
        })
    }

    pub fn for_config(cfg: &SimConfig) -> Result<Self> {
        Self::new(cfg.grid, cfg.sigma, cfg.form, cfg.scheme, cfg.dealias_fraction, cfg.guard)
    }

    fn coefficients(&mut self, dt: f64) -> usize {
        if let Some(i) = self.cache.iter().position(|c| c.dt == dt) {
            return i;
        }
        let c = Coefficients::new(&self.xi2, dt, self.scheme);
        if self.cache.len() < 2 {
            self.cache.push(c);
            self.cache.len() - 1
        } else {
            // Slot 0 holds the first (regular) step size.
            self.cache[1] = c;
            1
        }
    }

    /// Raw DFT of the samples.
    pub fn forward(&mut self, samples: &[Complex]) -> Vec<Complex> {
        let mut v = samples.to_vec();
        self.fwd.process_with_scratch(&mut v, &mut self.scratch);
        v
    }

    /// Samples from a raw DFT.
    pub fn inverse(&mut self, v: &[Complex]) -> Vec<Complex> {
        let mut u = v.to_vec();
        self.inv.process_with_scratch(&mut u, &mut self.scratch);
        let s = 1.0 / self.grid.n() as f64;
        u.iter_mut().for_each(|z| *z *= s);
        u
    }

    /// Raw DFT of the nonlinear term for the state with raw DFT `v`, into
    /// `self.k[out_index]`; the physical samples of the state are left in
    /// `self.phys`.
    fn nonlinear(&mut self, v: &[Complex], out_index: usize) {
        let n = self.grid.n();
        let inv_n = 1.0 / n as f64;
        self.phys.copy_from_slice(v);
        self.inv.process_with_scratch(&mut self.phys, &mut self.scratch);
        self.phys.iter_mut().for_each(|z| *z *= inv_n);
        let sigma = self.sigma;
        let out = &mut self.k[out_index];
        match self.form {
            NonlinearForm::Divergence => {
                for (o, &u) in out.iter_mut().zip(&self.phys) {
                    *o = power_nonlinearity(u, sigma);
                }
            }
            NonlinearForm::Transport => {
                for ((a, &c), &d) in self.aux.iter_mut().zip(v).zip(&self.derivative_symbol) {
                    *a = c * d * inv_n;
                }
                self.inv.process_with_scratch(&mut self.aux, &mut self.scratch);
                for ((o, &u), &ux) in out.iter_mut().zip(&self.phys).zip(&self.aux) {
                    *o = ux * modulus_power(u, sigma);
                }
            }
        }
        self.fwd.process_with_scratch(out, &mut self.scratch);
        match self.form {
            NonlinearForm::Divergence => {
                for (o, &s) in out.iter_mut().zip(&self.nonlinear_symbol) {
                    *o *= s;
                }
            }
            NonlinearForm::Transport => {
                // Same mask, no derivative: N = −|u|^{2σ} u_x.
                for (o, &s) in out.iter_mut().zip(&self.nonlinear_symbol) {
                    *o = if s == ZERO { ZERO } else { -*o };
                }
            }
        }
    }

    /// Advance the raw DFT `v` by `dt`. Returns the edge-zone mass
    /// fraction of the state at the start of the step.
    pub fn advance(&mut self, v: &mut [Complex], dt: f64) -> f64 {
        let ci = self.coefficients(dt);
        self.nonlinear(v, 0);
        let edge = self.guard.edge_fraction_of(&self.phys);
        match self.scheme {
            Scheme::Etdrk4 => self.etdrk4(v, ci),
            Scheme::IfRk4 => self.ifrk4(v, ci),
        }
        edge
    }

    fn ifrk4(&mut self, v: &mut [Complex], ci: usize) {
        let dt = self.cache[ci].dt;
        let h = 0.5 * dt;
        let mut stage = std::mem::take(&mut self.stage);
        {
            let c = &self.cache[ci];
            for j in 0..v.len() {
                stage[j] = c.half[j] * (v[j] + h * self.k[0][j]);
            }
        }
        self.nonlinear(&stage, 1);
        {
            let c = &self.cache[ci];
            for j in 0..v.len() {
                stage[j] = c.half[j] * v[j] + h * self.k[1][j];
            }
        }
        self.nonlinear(&stage, 2);
        {
            let c = &self.cache[ci];
            for j in 0..v.len() {
                stage[j] = c.full[j] * v[j] + dt * c.half[j] * self.k[2][j];
            }
        }
        self.nonlinear(&stage, 3);
        self.stage = stage;
        let sixth = dt / 6.0;
        let c = &self.cache[ci];
        for j in 0..v.len() {
            let e = c.half[j];
            let e2 = c.full[j];
            v[j] = e2 * v[j]
                + sixth * (e2 * self.k[0][j] + 2.0 * e * (self.k[1][j] + self.k[2][j]) + self.k[3][j]);
        }
    }

    fn etdrk4(&mut self, v: &mut [Complex], ci: usize) {
        let mut a = std::mem::take(&mut self.stage);
        let mut b = std::mem::take(&mut self.stage2);
        {
            let c = &self.cache[ci];
            for j in 0..v.len() {
                a[j] = c.half[j] * v[j] + c.q[j] * self.k[0][j];
            }
        }
        self.nonlinear(&a, 1);
        {
            let c = &self.cache[ci];
            for j in 0..v.len() {
                b[j] = c.half[j] * v[j] + c.q[j] * self.k[1][j];
            }
        }
        self.nonlinear(&b, 2);
        {
            let c = &self.cache[ci];
            for j in 0..v.len() {
                // Reuse `a` for the third stage.
                a[j] = c.half[j] * a[j] + c.q[j] * (2.0 * self.k[2][j] - self.k[0][j]);
            }
        }
        self.nonlinear(&a, 3);
        let c = &self.cache[ci];
        for j in 0..v.len() {
            v[j] = c.full[j] * v[j]
                + c.f1[j] * self.k[0][j]
                + 2.0 * c.f2[j] * (self.k[1][j] + self.k[2][j])
                + c.f3[j] * self.k[3][j];
        }
        self.stage = a;
        self.stage2 = b;
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
}

fn all_finite(v: &[Complex]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `N(u) = −∂_x(|u|^{2σ}u)` with the product spectrum dealiased.
pub fn nonlinear_term(f: &Field, sigma: f64, dealias_fraction: f64) -> Result<Field> {
    nonlinear_term_for(f, sigma, dealias_fraction, NonlinearForm::Divergence)
}

pub fn nonlinear_term_for(f: &Field, sigma: f64, dealias_fraction: f64, form: NonlinearForm) -> Result<Field> {
    f.validate()?;
    let mut st = Stepper::new(*f.grid(), sigma, form, Scheme::default(), dealias_fraction, TailGuard::default())?;
    let v = st.forward(f.samples());
    st.nonlinear(&v, 0);
    let k = std::mem::take(&mut st.k[0]);
    let samples = st.inverse(&k);
    Field::new(*f.grid(), f.time(), samples)
}

/// One step of size `cfg.dt` with the configured scheme.
pub fn step(f: &Field, cfg: &SimConfig) -> Result<Field> {
    f.validate()?;
    if !f.grid().same_as(&cfg.grid) {
        return Err(Error::Consistency("field is not on the configured grid".into()));
    }
    let mut st = Stepper::for_config(cfg)?;
    let mut v = st.forward(f.samples());
    st.advance(&mut v, cfg.dt);
    if !all_finite(&v) {
        return Err(Error::BlowUp { time: f.time() + cfg.dt });
    }
    let samples = st.inverse(&v);
    Field::new(cfg.grid, f.time() + cfg.dt, samples)
}

/// Integrate and hand every snapshot (initial state first) to `observer`.
///
/// Snapshot times are hit exactly by shortening the step that would
/// overshoot them.
pub fn run_streaming(u0: &Field, cfg: &SimConfig, mut observer: impl FnMut(Field) -> Result<()>) -> Result<RunSummary> {
    cfg.validate()?;
    u0.validate()?;
    if !u0.grid().same_as(&cfg.grid) {
        return Err(Error::Consistency("initial data is not on the configured grid".into()));
    }
    let t0 = u0.time();
    let mut st = Stepper::for_config(cfg)?;
    let mut v = st.forward(u0.samples());

    let first = ConservedReport::measure(u0, cfg.sigma, cfg.form, None)?;
    let reference = Some((first.mass, first.energy));
    let mut reports = vec![first];
    observer(u0.clone())?;

    let targets: Vec<f64> = cfg.snapshot_times.iter().copied().filter(|&t| t > t0 + 1e-12 * cfg.dt).collect();
    let mut base = t0;
    let mut count: u64 = 0;
    let mut steps = 0usize;
    let mut t = t0;
    for &target in &targets {
        loop {
            let remaining = target - t;
            let h = if remaining <= cfg.dt * (1.0 + 1e-9) { remaining } else { cfg.dt };
            if h > 1e-12 * cfg.dt {
                let edge = st.advance(&mut v, h);
                steps += 1;
                if edge > cfg.guard.tolerance {
                    let reason = AbortReason::TailMass { fraction: edge, tolerance: cfg.guard.tolerance };
                    return Ok(RunSummary { reports, aborted: Some(Abort { time: t, reason }), steps });
                }
                if !all_finite(&v) {
                    return Ok(RunSummary {
                        reports,
                        aborted: Some(Abort { time: t + h, reason: AbortReason::BlowUp }),
                        steps,
                    });
                }
            }
            if h == remaining {
                t = target;
                base = target;
                count = 0;
                break;
            }
            count += 1;
            t = base + count as f64 * cfg.dt;
        }
        let samples = st.inverse(&v);
        let snap = Field::from_parts(cfg.grid, t, samples);
        let edge = cfg.guard.edge_fraction(&snap);
        if edge > cfg.guard.tolerance {
            let reason = AbortReason::TailMass { fraction: edge, tolerance: cfg.guard.tolerance };
            return Ok(RunSummary { reports, aborted: Some(Abort { time: t, reason }), steps });
        }
        reports.push(ConservedReport::measure(&snap, cfg.sigma, cfg.form, reference)?);
        observer(snap)?;
    }
    Ok(RunSummary { reports, aborted: None, steps })
}

pub fn run(u0: &Field, cfg: &SimConfig) -> Result<Trajectory> {
    let mut snapshots = TimeSeriesField::empty();
    let summary = run_streaming(u0, cfg, |f| snapshots.push(f))?;
    Ok(Trajectory { config: cfg.clone(), snapshots, reports: summary.reports, aborted: summary.aborted })
}

/// `‖i(after − before)/δt + ∂_x² m + i∂_x(|m|^{2σ} m)‖₂` with `m` the average.
pub fn pde_residual(before: &Field, after: &Field, sigma: f64) -> Result<f64> {
    pde_residual_for(before, after, sigma, NonlinearForm::Divergence)
}

pub fn pde_residual_for(before: &Field, after: &Field, sigma: f64, form: NonlinearForm) -> Result<f64> {
    check_sigma(sigma)?;
    let dt = after.time() - before.time();
    if dt == 0.0 {
        return Err(Error::domain("snapshots must be separated in time"));
    }
    let mid = before.zip_with(after, |a, b| 0.5 * (a + b))?;
    let uxx = derivative(&mid, 2)?;
    let nl = match form {
        NonlinearForm::Divergence => derivative(&mid.map(|_, z| power_nonlinearity(z, sigma)), 1)?,
        NonlinearForm::Transport => derivative(&mid, 1)?.zip_with(&mid, |d, z| d * modulus_power(z, sigma))?,
    };
    let i = Complex::new(0.0, 1.0);
    let dx = before.grid().dx();
    let sum: f64 = (0..mid.samples().len())
        .map(|j| {
            let dtu = (after.samples()[j] - before.samples()[j]) / dt;
            (i * dtu + uxx.samples()[j] + i * nl.samples()[j]).norm_sqr()
        })
        .sum();
    Ok((sum * dx).sqrt())
}

/// Smallest `ξ_q ≥ 0` such that the spectral energy at `|ξ| > ξ_q` is at
/// most `quantile` of the total.
pub fn energy_quantile_frequency(f: &Field, quantile: f64) -> Result<f64> {
    let spec = to_spectrum(f)?;
    let g = spec.grid();
    let mut modes: Vec<(f64, f64)> =
        spec.coefficients().iter().enumerate().map(|(j, c)| (g.frequency(j).abs(), c.norm_sqr())).collect();
    let total: f64 = modes.iter().map(|m| m.1).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    modes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut tail = 0.0;
    for (xi, e) in modes {
        if tail + e > quantile * total {
            return Ok(xi);
        }
        tail += e;
    }
    Ok(0.0)
}

/// Largest group velocity `2ξ_q` carried by the data (1e-8 energy quantile).
pub fn velocity_bound(f: &Field) -> Result<f64> {
    Ok(2.0 * energy_quantile_frequency(f, 1e-8)?)
}

/// Box length `8 · v_max · t_end`.
pub fn box_length(v_max: f64, t_end: f64) -> f64 {
    8.0 * v_max * t_end
}
