//! Log-log least squares, used to read off the power of `Q` a quantity grows with.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Pairs used in the fit.
    pub used: usize,
    /// Pairs dropped because the value was zero.
    pub excluded_zero: usize,
}

/// Least squares of `log value` on `log Q`. Zero values are dropped and
/// counted; at least three usable pairs are required.
pub fn fit_slope(pairs: &[(f64, f64)]) -> Result<SlopeFit> {
    if let Some(&(q, v)) = pairs.iter().find(|&&(q, v)| !(q > 0.0) || !(v >= 0.0) || !q.is_finite() || !v.is_finite()) {
        return Err(Error::domain(format!("fit needs positive Q and nonnegative finite values, got ({q}, {v})")));
    }
    let pts: Vec<(f64, f64)> = pairs.iter().filter(|p| p.1 > 0.0).map(|&(q, v)| (q.ln(), v.ln())).collect();
    let excluded_zero = pairs.len() - pts.len();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable pairs, need at least 3", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all Q values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r2, used: pts.len(), excluded_zero })
}
