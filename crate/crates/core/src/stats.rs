//! Least-squares line fits with Student-t confidence bands.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// 95% two-sided confidence interval for the slope.
    pub slope_ci: (f64, f64),
    pub points: usize,
    /// All `y` equal (or all `x` equal): the slope carries no information.
    pub degenerate: bool,
}

/// Ordinary least squares `y ≈ a + b x`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Validation(
            "a line fit needs at least 3 paired samples".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite sample in line fit".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Ok(LineFit {
            slope: 0.0,
            intercept: my,
            slope_stderr: 0.0,
            slope_ci: (0.0, 0.0),
            points: x.len(),
            degenerate: true,
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let dof = n - 2.0;
    let stderr = (rss / dof / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::Validation(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: stderr,
        slope_ci: (slope - q * stderr, slope + q * stderr),
        points: x.len(),
        degenerate: false,
    })
}

/// Fit of `ln y` against `ln x`; every sample must be positive.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Validation("log-log fit needs positive samples".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    line_fit(&lx, &ly)
}

/// Empirical order `log(e_coarse/e_fine)/log(ratio)`.
pub fn convergence_order(e_coarse: f64, e_fine: f64, ratio: f64) -> f64 {
    (e_coarse / e_fine).ln() / ratio.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [1e-4, 1e-3, 1e-2, 1e-1];
        let y: Vec<f64> = x.iter().map(|t: &f64| 3.0 * t.powf(0.25)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        assert!((f.slope - 0.25).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(f.slope_ci.0 <= f.slope && f.slope <= f.slope_ci.1);
    }

    #[test]
    fn band_matches_textbook_quantile() {
        // Residuals ±1 around y = x with x = 0..4; t_{0.975, 3} = 3.182446.
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 0.0, 3.0, 2.0, 5.0];
        let f = line_fit(&x, &y).unwrap();
        let half = f.slope_ci.1 - f.slope;
        assert!((half / f.slope_stderr - 3.182446).abs() < 1e-5);
    }

    #[test]
    fn constant_data_is_degenerate() {
        let f = line_fit(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5]).unwrap();
        assert!(f.degenerate);
        assert!(loglog_fit(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]).is_err());
    }
}
