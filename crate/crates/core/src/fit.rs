//! Ordinary least squares for straight lines.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit `y ≈ slope·x + intercept`. A series with no spread in `y` is a
/// perfect fit.
pub(crate) fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Consistency(format!("{} abscissae for {} ordinates", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData("a line fit needs two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= 1e-30 * (1.0 + my * my) { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(LineFit { slope, intercept, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_lines() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let f = line_fit(&xs, &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert_eq!(f.r_squared, 1.0);
        let flat = line_fit(&xs, &[4.0; 4]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert_eq!(flat.r_squared, 1.0);
        assert!(line_fit(&[1.0], &[1.0]).is_err());
        assert!(line_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }
}
