use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares fit `y ≈ limit + slope/p`.
#[derive(Clone, Debug, Serialize)]
pub struct Extrapolation {
    pub limit: f64,
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// Residual above 5% of the data range.
    pub poor_fit: bool,
    pub p_used: Vec<f64>,
}

pub fn extrapolate(values: &[(f64, f64)]) -> Result<Extrapolation> {
    let mut ps: Vec<f64> = values.iter().map(|v| v.0).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    if ps.len() != values.len() {
        return Err(Error::invalid("extrapolation needs distinct exponents"));
    }
    if values.len() < 3 {
        return Err(Error::invalid(format!("extrapolation needs at least 3 points, got {}", values.len())));
    }
    if values.iter().any(|&(p, y)| !(p.is_finite() && p > 0.0 && y.is_finite())) {
        return Err(Error::invalid("extrapolation data must be finite with p > 0"));
    }
    let n = values.len() as f64;
    let xs: Vec<f64> = values.iter().map(|v| 1.0 / v.0).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = values.iter().map(|v| v.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(values).map(|(x, v)| (x - xm) * (v.1 - ym)).sum();
    let slope = sxy / sxx;
    let limit = ym - slope * xm;
    let residual =
        (xs.iter().zip(values).map(|(x, v)| (v.1 - limit - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    let lo = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Extrapolation { limit, slope, residual, poor_fit: residual > 0.05 * (hi - lo), p_used: ps })
}
