use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.exponent * x.ln()).exp()
    }
}

pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::Structural(format!("{} abscissae for {} ordinates", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::Config(format!("a fit needs at least 3 points, got {}", x.len())));
    }
    if let Some((a, b)) = x.iter().zip(y).find(|(a, b)| !(**a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())) {
        return Err(Error::Domain(format!("cannot take logs of ({a}, {b})")));
    }
    let points: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all abscissae coincide".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    // a flat exact fit explains everything there is to explain
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(FitResult { exponent, intercept, r_squared, points })
}
