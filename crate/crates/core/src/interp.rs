//! Local Lagrange interpolation on uniform tables.

use crate::grid::Complex;

/// Uniformly sampled complex table `values[j] ≈ g(start + j·step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformTable {
    start: f64,
    step: f64,
    values: Vec<Complex>,
}

/// Stencil width used by [`UniformTable::eval`].
pub const STENCIL: usize = 8;

impl UniformTable {
    pub fn new(start: f64, step: f64, values: Vec<Complex>) -> Self {
        assert!(step > 0.0 && values.len() >= STENCIL, "table needs a positive step and 8 samples");
        UniformTable { start, step, values }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn end(&self) -> f64 {
        self.start + (self.values.len() - 1) as f64 * self.step
    }

    pub fn values(&self) -> &[Complex] {
        &self.values
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end()
    }

    /// Eight-point Lagrange interpolation; `None` outside the table.
    pub fn eval(&self, x: f64) -> Option<Complex> {
        if !self.contains(x) {
            return None;
        }
        let s = (x - self.start) / self.step;
        let last = self.values.len() - 1;
        let base = (s.floor() as isize - (STENCIL as isize / 2 - 1)).clamp(0, (last + 1 - STENCIL) as isize)
            as usize;
        let local = s - base as f64;
        // Exact hit avoids 0/0 in the barycentric-free form below.
        let nearest = local.round();
        if (local - nearest).abs() < 1e-14 && nearest >= 0.0 && (nearest as usize) < STENCIL {
            return Some(self.values[base + nearest as usize]);
        }
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..STENCIL {
            let mut w = 1.0;
            for j in 0..STENCIL {
                if i != j {
                    w *= (local - j as f64) / (i as f64 - j as f64);
                }
            }
            acc += self.values[base + i] * w;
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_function() {
        let step = 0.05;
        let values = (0..200).map(|j| {
            let x = -3.0 + j as f64 * step;
            Complex::new(x.sin(), (0.5 * x).cos())
        });
        let t = UniformTable::new(-3.0, step, values.collect());
        for &x in &[-3.0, -2.987, 0.0, 1.2345, t.end() - 1e-3, t.end()] {
            let z = t.eval(x).unwrap();
            assert!((z - Complex::new(x.sin(), (0.5 * x).cos())).norm() < 1e-11, "{x}");
        }
        assert!(t.eval(-3.1).is_none());
        assert!(t.eval(t.end() + 0.1).is_none());
    }
}
