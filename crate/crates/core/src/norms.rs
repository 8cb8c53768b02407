//! Lebesgue, Sobolev, Lorentz and mixed space-time norms of sampled fields.
//!
//! Samples are read as a step function that is constant on cells of width
//! `dx`, so the Lorentz quasi-norms reduce to closed-form sums over the
//! sorted magnitudes.

use crate::error::{Error, Result};
use crate::grid::{to_spectrum, Field, Grid1D, SobolevKind};

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("exponent must be >= 1, got {p}")))
    }
}

/// `(Σ |u_j|^p dx)^{1/p}`, or the largest magnitude for `p = ∞`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    check_p(p)?;
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    let dx = f.grid().dx();
    let sum: f64 = if p == 2.0 {
        f.samples().iter().map(|z| z.norm_sqr()).sum()
    } else if p == 1.0 {
        f.samples().iter().map(|z| z.norm()).sum()
    } else {
        // Scale by the maximum to keep large p from overflowing.
        let m = f.sup_norm();
        if m == 0.0 {
            return Ok(0.0);
        }
        let s: f64 = f.samples().iter().map(|z| (z.norm() / m).powf(p)).sum();
        return Ok(m * (s * dx).powf(1.0 / p));
    };
    Ok((sum * dx).powf(1.0 / p))
}

/// `‖J^s f‖₂` or `‖D^s f‖₂`, evaluated on the coefficients.
pub fn sobolev_norm(f: &Field, s: f64, kind: SobolevKind) -> Result<f64> {
    let spec = to_spectrum(f)?;
    let grid = spec.grid();
    let nyquist = grid.nyquist_index();
    let mut acc = 0.0;
    for (j, c) in spec.coefficients().iter().enumerate() {
        if s > 0.0 && j == nyquist {
            continue;
        }
        let m = kind.symbol(grid.frequency(j), s);
        if c.norm_sqr() == 0.0 {
            continue;
        }
        if !m.is_finite() {
            return Err(Error::domain(format!("multiplier of order {s} is singular at frequency 0")));
        }
        acc += m * m * c.norm_sqr();
    }
    Ok((acc / grid.length()).sqrt())
}

/// `(i^r - (i-1)^r)` for `i ≥ 1` without cancellation.
fn power_increment(i: usize, r: f64) -> f64 {
    if i == 1 {
        return 1.0;
    }
    let fi = i as f64;
    -fi.powf(r) * (r * (-1.0 / fi).ln_1p()).exp_m1()
}

fn lorentz_sorted(sorted_desc: &[f64], dx: f64, p: f64, q: f64) -> f64 {
    if q.is_infinite() {
        return sorted_desc
            .iter()
            .enumerate()
            .map(|(i, &a)| a * ((i + 1) as f64 * dx).powf(1.0 / p))
            .fold(0.0, f64::max);
    }
    let m = sorted_desc.first().copied().unwrap_or(0.0);
    if m == 0.0 {
        return 0.0;
    }
    let r = q / p;
    let sum: f64 = sorted_desc
        .iter()
        .enumerate()
        .take_while(|(_, &a)| a > 0.0)
        .map(|(i, &a)| (a / m).powf(q) * power_increment(i + 1, r))
        .sum();
    m * ((p / q) * dx.powf(r) * sum).powf(1.0 / q)
}

/// Lorentz quasi-norm `(∫_0^∞ (s^{1/p} f*(s))^q ds/s)^{1/q}`, with the
/// supremum for `q = ∞`.
pub fn lorentz_norm(f: &Field, p: f64, q: f64) -> Result<f64> {
    check_p(p)?;
    if p.is_infinite() {
        return Err(Error::domain("Lorentz exponent p must be finite"));
    }
    if !(q >= 1.0) {
        return Err(Error::domain(format!("Lorentz exponent q must be >= 1, got {q}")));
    }
    let mut mags: Vec<f64> = f.samples().iter().map(|z| z.norm()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(lorentz_sorted(&mags, f.grid().dx(), p, q))
}

/// Snapshots `u(t_k, ·)` on one grid at strictly increasing times.
#[derive(Debug, Clone)]
pub struct TimeSeriesField {
    times: Vec<f64>,
    fields: Vec<Field>,
}

impl TimeSeriesField {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        let times: Vec<f64> = fields.iter().map(|f| f.time()).collect();
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidData("snapshot times must be strictly increasing".into()));
        }
        if let Some(first) = fields.first() {
            let g: Grid1D = *first.grid();
            if fields.iter().any(|f| !f.grid().same_as(&g)) {
                return Err(Error::InvalidData("snapshots must share one grid".into()));
            }
        }
        Ok(TimeSeriesField { times, fields })
    }

    pub fn empty() -> Self {
        TimeSeriesField { times: Vec::new(), fields: Vec::new() }
    }

    pub(crate) fn push(&mut self, f: Field) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(f.time() > last) {
                return Err(Error::InvalidData("snapshot times must be strictly increasing".into()));
            }
            if !f.grid().same_as(self.fields[0].grid()) {
                return Err(Error::InvalidData("snapshots must share one grid".into()));
            }
        }
        self.times.push(f.time());
        self.fields.push(f);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Snapshot whose time is within `tol` of `t`.
    pub fn at(&self, t: f64, tol: f64) -> Option<&Field> {
        let idx = self.times.partition_point(|&s| s < t - tol);
        self.fields.get(idx).filter(|f| (f.time() - t).abs() <= tol)
    }
}

/// `L^q_t L^p_x` norm with the trapezoid rule in time.
pub fn mixed_norm(ts: &TimeSeriesField, q: f64, p: f64) -> Result<f64> {
    if ts.len() < 2 {
        return Err(Error::InsufficientData("mixed norm needs at least two snapshots".into()));
    }
    check_p(q)?;
    let spatial = ts.fields().iter().map(|f| lp_norm(f, p)).collect::<Result<Vec<_>>>()?;
    if q.is_infinite() {
        return Ok(spatial.iter().copied().fold(0.0, f64::max));
    }
    let integral: f64 = ts
        .times()
        .windows(2)
        .zip(spatial.windows(2))
        .map(|(t, n)| 0.5 * (t[1] - t[0]) * (n[0].powf(q) + n[1].powf(q)))
        .sum();
    Ok(integral.powf(1.0 / q))
}
