//! Periodic grid, Fourier transforms and spectral multipliers.
//!
//! Transform convention: `û(ξ) = ∫ u(x) e^{-ixξ} dx`, inverse with `1/(2π)`.
//! On the grid this is the rectangle rule, so a `Spectrum` holds
//! `dx · Σ_j u_j e^{-iξ_k x_j}` (the phase of the left endpoint included),
//! and `Σ_j |u_j|² dx = (1/L) Σ_k |û_k|²`.
//!
//! Coefficients are stored in FFT order: index `j < n/2` is mode `k = j`,
//! index `j ≥ n/2` is mode `k = j - n`.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = Complex64;

const I: Complex = Complex::new(0.0, 1.0);

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

pub(crate) fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    planner().lock().expect("fft planner poisoned").plan_fft_forward(n)
}

pub(crate) fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    planner().lock().expect("fft planner poisoned").plan_fft_inverse(n)
}

/// Uniform periodic grid on `[origin, origin + length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    length: f64,
    origin: f64,
}

impl Grid1D {
    /// Grid centred on the origin, `x ∈ [-L/2, L/2)`.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        Self::with_origin(n, length, -0.5 * length)
    }

    pub fn with_origin(n: usize, length: f64, origin: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::domain(format!("grid size must be even and >= 8, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::domain(format!("grid length must be positive, got {length}")));
        }
        if !origin.is_finite() {
            return Err(Error::domain("grid origin must be finite"));
        }
        Ok(Grid1D { n, length, origin })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.dx()
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Signed mode number of FFT index `j`, in `-n/2 ..= n/2 - 1`.
    pub fn mode(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// FFT index of signed mode `k`.
    pub fn index_of_mode(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    /// Angular frequency `ξ = 2πk/L` of FFT index `j`.
    pub fn frequency(&self, j: usize) -> f64 {
        2.0 * PI * self.mode(j) as f64 / self.length
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.frequency(j)).collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Largest resolved frequency `π/dx`.
    pub fn max_frequency(&self) -> f64 {
        PI / self.dx()
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n == other.n && self.length == other.length && self.origin == other.origin
    }
}

fn check_finite(values: &[Complex], what: &str) -> Result<()> {
    match values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        Some(j) => Err(Error::InvalidData(format!("non-finite {what} at index {j}"))),
        None => Ok(()),
    }
}

/// Samples of `u(t, ·)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    time: f64,
    samples: Vec<Complex>,
}

impl Field {
    pub fn new(grid: Grid1D, time: f64, samples: Vec<Complex>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::InvalidData(format!(
                "expected {} samples, got {}",
                grid.n(),
                samples.len()
            )));
        }
        if !time.is_finite() {
            return Err(Error::InvalidData("non-finite time stamp".into()));
        }
        check_finite(&samples, "sample")?;
        Ok(Field { grid, time, samples })
    }

    /// Skips the finiteness scan; callers must uphold the invariant.
    pub(crate) fn from_parts(grid: Grid1D, time: f64, samples: Vec<Complex>) -> Self {
        debug_assert_eq!(samples.len(), grid.n());
        Field { grid, time, samples }
    }

    pub fn zeros(grid: Grid1D, time: f64) -> Self {
        Field { grid, time, samples: vec![Complex::new(0.0, 0.0); grid.n()] }
    }

    pub fn from_fn(grid: Grid1D, time: f64, f: impl Fn(f64) -> Complex) -> Result<Self> {
        let samples = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        Self::new(grid, time, samples)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn samples(&self) -> &[Complex] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex> {
        self.samples
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_finite(&self.samples, "sample")
    }

    pub fn map(&self, f: impl Fn(f64, Complex) -> Complex) -> Self {
        let samples =
            self.samples.iter().enumerate().map(|(j, &z)| f(self.grid.x(j), z)).collect();
        Field { grid: self.grid, time: self.time, samples }
    }

    pub fn scale(&self, c: Complex) -> Self {
        self.map(|_, z| c * z)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(Complex, Complex) -> Complex) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Consistency("fields live on different grids".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid, time: self.time, samples })
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Index and value of the largest sample magnitude.
    pub fn argmax(&self) -> (usize, f64) {
        self.samples
            .iter()
            .enumerate()
            .map(|(j, z)| (j, z.norm()))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best })
    }
}

/// Fourier coefficients of a field, FFT ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid1D,
    time: f64,
    coefficients: Vec<Complex>,
}

impl Spectrum {
    pub fn new(grid: Grid1D, time: f64, coefficients: Vec<Complex>) -> Result<Self> {
        if coefficients.len() != grid.n() {
            return Err(Error::InvalidData(format!(
                "expected {} coefficients, got {}",
                grid.n(),
                coefficients.len()
            )));
        }
        check_finite(&coefficients, "coefficient")?;
        Ok(Spectrum { grid, time, coefficients })
    }

    pub(crate) fn from_parts(grid: Grid1D, time: f64, coefficients: Vec<Complex>) -> Self {
        Spectrum { grid, time, coefficients }
    }

    pub fn zeros(grid: Grid1D, time: f64) -> Self {
        Spectrum { grid, time, coefficients: vec![Complex::new(0.0, 0.0); grid.n()] }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<Complex> {
        self.coefficients
    }

    /// Coefficient of signed mode `k`, zero outside the resolved band.
    pub fn mode(&self, k: i64) -> Complex {
        self.grid.index_of_mode(k).map_or(Complex::new(0.0, 0.0), |j| self.coefficients[j])
    }

    /// `(1/L) Σ |û_k|²`, equal to `∫|u|² dx` by Parseval.
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.length()
    }

    /// Multiply coefficient `j` by `symbol(ξ_j)`.
    pub fn apply_symbol(&self, symbol: impl Fn(f64) -> Complex) -> Self {
        let coefficients = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, &c)| c * symbol(self.grid.frequency(j)))
            .collect();
        Spectrum { grid: self.grid, time: self.time, coefficients }
    }
}

/// In-place forward transform of raw samples into coefficients.
pub(crate) fn forward_in_place(grid: &Grid1D, buf: &mut [Complex], plan: &dyn Fft<f64>) {
    plan.process(buf);
    let dx = grid.dx();
    let origin = grid.origin();
    if origin == 0.0 {
        buf.iter_mut().for_each(|c| *c *= dx);
    } else {
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= dx * Complex::from_polar(1.0, -grid.frequency(j) * origin);
        }
    }
}

/// In-place inverse transform of coefficients into samples.
pub(crate) fn inverse_in_place(grid: &Grid1D, buf: &mut [Complex], plan: &dyn Fft<f64>) {
    let inv_l = 1.0 / grid.length();
    let origin = grid.origin();
    if origin == 0.0 {
        buf.iter_mut().for_each(|c| *c *= inv_l);
    } else {
        for (j, c) in buf.iter_mut().enumerate() {
            *c *= inv_l * Complex::from_polar(1.0, grid.frequency(j) * origin);
        }
    }
    plan.process(buf);
}

pub fn to_spectrum(f: &Field) -> Result<Spectrum> {
    f.validate()?;
    let grid = *f.grid();
    let mut buf = f.samples().to_vec();
    forward_in_place(&grid, &mut buf, forward_plan(grid.n()).as_ref());
    Ok(Spectrum::from_parts(grid, f.time(), buf))
}

pub fn from_spectrum(s: &Spectrum) -> Result<Field> {
    check_finite(s.coefficients(), "coefficient")?;
    let grid = *s.grid();
    let mut buf = s.coefficients().to_vec();
    inverse_in_place(&grid, &mut buf, inverse_plan(grid.n()).as_ref());
    Ok(Field::from_parts(grid, s.time(), buf))
}

/// `∂_x^order f` by multiplication with `(iξ)^order`; the Nyquist mode is dropped.
pub fn derivative(f: &Field, order: u32) -> Result<Field> {
    if order == 0 {
        return Err(Error::domain("derivative order must be at least 1"));
    }
    let spec = to_spectrum(f)?;
    let nyquist = f.grid().nyquist_index();
    let mut spec = spec.apply_symbol(|xi| (I * xi).powu(order));
    spec.coefficients_mut()[nyquist] = Complex::new(0.0, 0.0);
    from_spectrum(&spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SobolevKind {
    /// Symbol `|ξ|^s`.
    Homogeneous,
    /// Symbol `(1 + ξ²)^{s/2}`.
    Inhomogeneous,
}

impl SobolevKind {
    pub fn symbol(self, xi: f64, s: f64) -> f64 {
        match self {
            SobolevKind::Homogeneous => {
                if xi == 0.0 {
                    if s == 0.0 {
                        1.0
                    } else if s > 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    xi.abs().powf(s)
                }
            }
            SobolevKind::Inhomogeneous => (1.0 + xi * xi).powf(0.5 * s),
        }
    }
}

/// `D^s f` or `J^s f` for `s ≥ 0`.
pub fn fractional_derivative(f: &Field, s: f64, kind: SobolevKind) -> Result<Field> {
    if !(s >= 0.0) {
        return Err(Error::domain(format!("fractional order must be >= 0, got {s}")));
    }
    let spec = to_spectrum(f)?;
    if s == 0.0 && kind == SobolevKind::Inhomogeneous {
        return from_spectrum(&spec);
    }
    let nyquist = f.grid().nyquist_index();
    let mut spec = spec.apply_symbol(|xi| Complex::new(kind.symbol(xi, s), 0.0));
    if s > 0.0 {
        spec.coefficients_mut()[nyquist] = Complex::new(0.0, 0.0);
    }
    from_spectrum(&spec)
}

/// Zero every coefficient with `|k| > keep_fraction · n/2`.
pub fn dealias(s: &Spectrum, keep_fraction: f64) -> Result<Spectrum> {
    let mask = dealias_mask(s.grid(), keep_fraction)?;
    let coefficients = s
        .coefficients()
        .iter()
        .zip(&mask)
        .map(|(&c, &keep)| if keep { c } else { Complex::new(0.0, 0.0) })
        .collect();
    Ok(Spectrum::from_parts(*s.grid(), s.time(), coefficients))
}

pub(crate) fn dealias_mask(grid: &Grid1D, keep_fraction: f64) -> Result<Vec<bool>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::domain(format!("keep fraction must lie in (0, 1], got {keep_fraction}")));
    }
    let cutoff = keep_fraction * (grid.n() / 2) as f64;
    Ok((0..grid.n()).map(|j| (grid.mode(j).abs() as f64) <= cutoff).collect())
}

/// Evaluate the trigonometric interpolant of `s` at arbitrary points.
///
/// The Nyquist coefficient is split evenly between `±n/2` so that the
/// interpolant reproduces the grid samples exactly.
pub fn interpolate(s: &Spectrum, points: &[f64]) -> Vec<Complex> {
    let grid = s.grid();
    let n = grid.n();
    let nyq = grid.nyquist_index();
    let inv_l = 1.0 / grid.length();
    let base = 2.0 * PI / grid.length();
    points
        .iter()
        .map(|&x| {
            // Recurrence on e^{i·base·x} keeps this at one sincos per point.
            let step = Complex::from_polar(1.0, base * x);
            let step_inv = step.conj();
            let mut pos = Complex::new(1.0, 0.0);
            let mut neg = Complex::new(1.0, 0.0);
            let mut acc = s.coefficients()[0];
            for k in 1..nyq {
                pos *= step;
                neg *= step_inv;
                acc += s.coefficients()[k] * pos + s.coefficients()[n - k] * neg;
            }
            let edge = Complex::from_polar(1.0, base * nyq as f64 * x);
            let c = s.coefficients()[nyq];
            acc += 0.5 * c * (edge + edge.conj());
            acc * inv_l
        })
        .collect()
}

/// Continuous-transform estimate `dx Σ_j u_j e^{-iξ x_j}` at arbitrary `ξ`.
pub fn transform_at(f: &Field, frequencies: &[f64]) -> Vec<Complex> {
    let grid = f.grid();
    let dx = grid.dx();
    frequencies
        .iter()
        .map(|&xi| {
            let step = Complex::from_polar(1.0, -xi * dx);
            let mut phase = Complex::from_polar(dx, -xi * grid.origin());
            let mut acc = Complex::new(0.0, 0.0);
            for &u in f.samples() {
                acc += u * phase;
                phase *= step;
            }
            acc
        })
        .collect()
}

/// Band-limited upsampling by an integer factor (zero padding in Fourier).
pub fn refine(f: &Field, factor: usize) -> Result<Field> {
    if factor == 0 {
        return Err(Error::domain("refinement factor must be positive"));
    }
    if factor == 1 {
        return Ok(f.clone());
    }
    let grid = *f.grid();
    let fine = Grid1D::with_origin(grid.n() * factor, grid.length(), grid.origin())?;
    let spec = to_spectrum(f)?;
    let mut coeffs = vec![Complex::new(0.0, 0.0); fine.n()];
    let nyq = grid.nyquist_index();
    for j in 0..grid.n() {
        if j == nyq {
            continue;
        }
        let k = grid.mode(j);
        coeffs[fine.index_of_mode(k).expect("mode fits on finer grid")] = spec.coefficients()[j];
    }
    let c = spec.coefficients()[nyq];
    let k = nyq as i64;
    coeffs[fine.index_of_mode(k).expect("mode fits")] = 0.5 * c;
    coeffs[fine.index_of_mode(-k).expect("mode fits")] = 0.5 * c;
    from_spectrum(&Spectrum::from_parts(fine, f.time(), coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn random_field(grid: Grid1D, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..grid.n()).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        Field::new(grid, 0.0, samples.collect()).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid1D::new(6, 1.0).is_err());
        assert!(Grid1D::new(9, 1.0).is_err());
        assert!(Grid1D::new(16, 0.0).is_err());
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        assert!((g.dx() - 2.0 * PI / 16.0).abs() < 1e-15);
        assert_eq!(g.mode(8), -8);
        assert_eq!(g.index_of_mode(-1), Some(15));
    }

    #[test]
    fn constant_has_only_zero_mode() {
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        let f = Field::from_fn(g, 0.0, |_| c(1.0, 0.0)).unwrap();
        let s = to_spectrum(&f).unwrap();
        assert!((s.mode(0) - c(2.0 * PI, 0.0)).norm() < 1e-12);
        for j in 1..16 {
            assert!(s.coefficients()[j].norm() < 1e-12);
        }
        let back = from_spectrum(&s).unwrap();
        for z in back.samples() {
            assert!((z - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn pure_mode_is_single_coefficient() {
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        let f = Field::from_fn(g, 0.0, |x| Complex::from_polar(1.0, x)).unwrap();
        let s = to_spectrum(&f).unwrap();
        assert!((s.mode(1) - c(2.0 * PI, 0.0)).norm() < 1e-12);
        let others: f64 = (0..16).filter(|&j| j != 1).map(|j| s.coefficients()[j].norm()).sum();
        assert!(others < 1e-12);
    }

    #[test]
    fn zero_spectrum_gives_zero_field() {
        let g = Grid1D::new(32, 3.0).unwrap();
        let f = from_spectrum(&Spectrum::zeros(g, 0.0)).unwrap();
        assert_eq!(f.sup_norm(), 0.0);
    }

    #[test]
    fn random_round_trip() {
        let g = Grid1D::with_origin(256, 7.5, 1.25).unwrap();
        let f = random_field(g, 3);
        let back = from_spectrum(&to_spectrum(&f).unwrap()).unwrap();
        let err = f.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 10.0 * f64::EPSILON * 256.0 * f.sup_norm(), "round trip error {err}");
    }

    #[test]
    fn arbitrary_spectrum_round_trip() {
        let g = Grid1D::new(128, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coeffs: Vec<Complex> = (0..128).map(|_| c(rng.gen(), rng.gen())).collect();
        let s = Spectrum::new(g, 0.0, coeffs).unwrap();
        let back = to_spectrum(&from_spectrum(&s).unwrap()).unwrap();
        let scale = s.coefficients().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (a, b) in s.coefficients().iter().zip(back.coefficients()) {
            assert!((a - b).norm() < 1e-13 * scale);
        }
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        let g = Grid1D::new(8, 1.0).unwrap();
        let mut samples = vec![c(0.0, 0.0); 8];
        samples[3] = c(f64::NAN, 0.0);
        assert!(matches!(Field::new(g, 0.0, samples), Err(Error::InvalidData(_))));
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = Grid1D::new(64, 2.0 * PI).unwrap();
        let f = Field::from_fn(g, 0.0, |x| c(x.sin(), 0.0)).unwrap();
        let d = derivative(&f, 1).unwrap();
        for (j, z) in d.samples().iter().enumerate() {
            assert!((z - c(g.x(j).cos(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_constant_and_eigenfunction() {
        let g = Grid1D::new(32, 2.0 * PI).unwrap();
        let one = Field::from_fn(g, 0.0, |_| c(3.0, -1.0)).unwrap();
        assert!(derivative(&one, 1).unwrap().sup_norm() < 1e-13);
        let e2 = Field::from_fn(g, 0.0, |x| Complex::from_polar(1.0, 2.0 * x)).unwrap();
        let d2 = derivative(&e2, 2).unwrap();
        for (a, b) in d2.samples().iter().zip(e2.samples()) {
            assert!((a + 4.0 * b).norm() < 1e-12);
        }
        assert!(derivative(&e2, 0).is_err());
    }

    #[test]
    fn fractional_derivative_cases() {
        let g = Grid1D::new(32, 2.0 * PI).unwrap();
        let one = Field::from_fn(g, 0.0, |_| c(1.0, 0.0)).unwrap();
        assert!(fractional_derivative(&one, 0.3, SobolevKind::Homogeneous).unwrap().sup_norm() < 1e-13);
        let f = random_field(g, 5);
        let j0 = fractional_derivative(&f, 0.0, SobolevKind::Inhomogeneous).unwrap();
        for (a, b) in j0.samples().iter().zip(f.samples()) {
            assert!((a - b).norm() < 1e-13);
        }
        let e1 = Field::from_fn(g, 0.0, |x| Complex::from_polar(1.0, x)).unwrap();
        let h = fractional_derivative(&e1, 0.5, SobolevKind::Homogeneous).unwrap();
        for (a, b) in h.samples().iter().zip(e1.samples()) {
            assert!((a - b).norm() < 1e-13);
        }
        assert!(fractional_derivative(&e1, -0.1, SobolevKind::Homogeneous).is_err());
    }

    #[test]
    fn homogeneous_order_one_is_derivative_magnitude() {
        let g = Grid1D::new(64, 5.0).unwrap();
        let f = random_field(g, 9);
        let a = to_spectrum(&fractional_derivative(&f, 1.0, SobolevKind::Homogeneous).unwrap()).unwrap();
        let b = to_spectrum(&derivative(&f, 1).unwrap()).unwrap();
        let scale = a.coefficients().iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (x, y) in a.coefficients().iter().zip(b.coefficients()) {
            assert!((x.norm() - y.norm()).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn dealias_cases() {
        let g = Grid1D::new(16, 2.0 * PI).unwrap();
        let f = random_field(g, 1);
        let s = to_spectrum(&f).unwrap();
        assert_eq!(dealias(&s, 1.0).unwrap(), s);
        let top = Field::from_fn(g, 0.0, |x| Complex::from_polar(1.0, 7.0 * x)).unwrap();
        let d = dealias(&to_spectrum(&top).unwrap(), 0.5).unwrap();
        assert!(d.coefficients().iter().all(|z| z.norm() < 1e-12));
        assert!(dealias(&s, 0.0).is_err());
        assert!(dealias(&s, 1.5).is_err());
    }

    #[test]
    fn interpolation_reproduces_samples_and_smooth_functions() {
        let g = Grid1D::new(64, 20.0).unwrap();
        let f = Field::from_fn(g, 0.0, |x| Complex::new((-x * x).exp(), (-(x - 1.0).powi(2)).exp())).unwrap();
        let s = to_spectrum(&f).unwrap();
        let on_grid = interpolate(&s, &g.coordinates());
        for (a, b) in on_grid.iter().zip(f.samples()) {
            assert!((a - b).norm() < 1e-13);
        }
        let pts = [0.123, -0.77, 2.5];
        for (p, z) in pts.iter().zip(interpolate(&s, &pts)) {
            let exact = Complex::new((-p * p).exp(), (-(p - 1.0).powi(2)).exp());
            assert!((z - exact).norm() < 1e-6, "{p}: {z} vs {exact}");
        }
        let fine = refine(&f, 4).unwrap();
        for (j, z) in fine.samples().iter().enumerate() {
            let x = fine.grid().x(j);
            let exact = Complex::new((-x * x).exp(), (-(x - 1.0).powi(2)).exp());
            assert!((z - exact).norm() < 1e-6);
        }
    }

    #[test]
    fn transform_at_matches_grid_coefficients() {
        let g = Grid1D::new(64, 12.0).unwrap();
        let f = random_field(g, 21);
        let s = to_spectrum(&f).unwrap();
        let xi: Vec<f64> = (0..64).map(|j| g.frequency(j)).collect();
        for (a, b) in transform_at(&f, &xi).iter().zip(s.coefficients()) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn parseval_holds(seed in any::<u64>(), log_n in 3usize..12, length in 0.5f64..100.0) {
                let g = Grid1D::new(1 << log_n, length).unwrap();
                let f = random_field(g, seed);
                let s = to_spectrum(&f).unwrap();
                let phys: f64 = f.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() * g.dx();
                prop_assert!((phys - s.energy()).abs() <= 1e-12 * phys);
            }

            #[test]
            fn round_trip_within_bound(seed in any::<u64>(), log_n in 3usize..12, origin in -50.0f64..50.0) {
                let g = Grid1D::with_origin(1 << log_n, 13.0, origin).unwrap();
                let f = random_field(g, seed);
                let back = from_spectrum(&to_spectrum(&f).unwrap()).unwrap();
                let err = f.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                prop_assert!(err <= 10.0 * f64::EPSILON * g.n() as f64 * f.sup_norm());
            }

            #[test]
            fn second_derivative_composes(seed in any::<u64>()) {
                let g = Grid1D::new(64, 9.0).unwrap();
                let f = random_field(g, seed);
                let twice = to_spectrum(&derivative(&derivative(&f, 1).unwrap(), 1).unwrap()).unwrap();
                let direct = to_spectrum(&derivative(&f, 2).unwrap()).unwrap();
                let scale = direct.coefficients().iter().map(|z| z.norm()).fold(1e-300, f64::max);
                for (a, b) in twice.coefficients().iter().zip(direct.coefficients()) {
                    prop_assert!((a - b).norm() <= 1e-12 * scale);
                }
            }

            #[test]
            fn dealias_never_adds_energy(seed in any::<u64>(), frac in 0.01f64..1.0) {
                let g = Grid1D::new(128, 4.0).unwrap();
                let s = to_spectrum(&random_field(g, seed)).unwrap();
                prop_assert!(dealias(&s, frac).unwrap().energy() <= s.energy());
            }
        }
    }
}
