//! Ordinary least squares of log(error) against log(sigma): power-law
//! exponents for the convergence-rate experiments.

use crate::error::{Error, Result};

/// A fitted power law error ~ C * sigma^slope.
#[derive(Debug, Clone)]
pub struct RateFit {
    /// The (sigma, error) points that entered the fit.
    pub points: Vec<(f64, f64)>,
    /// Points dropped because their error was not strictly positive.
    pub dropped: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// r2 < 0.9 marks the fit as unreliable.
    pub low_confidence: bool,
}

/// Fits log(error) = intercept + slope * log(sigma) by least squares.
///
/// Points with nonpositive error (machine-zero gaps) are dropped with a
/// count; fewer than 3 surviving points with distinct sigma is an error.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    for &(sigma, _) in points {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("rate fit needs positive sigma, got {sigma}")));
        }
    }
    let kept: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(_, e)| e > 0.0 && e.is_finite())
        .collect();
    let dropped = points.len() - kept.len();

    let mut sigmas: Vec<f64> = kept.iter().map(|p| p.0).collect();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    if sigmas.len() < 3 {
        return Err(Error::Domain(format!(
            "rate fit needs at least 3 points with distinct sigma, got {} ({} dropped)",
            sigmas.len(),
            dropped
        )));
    }

    let n = kept.len() as f64;
    let xs: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };

    Ok(RateFit {
        points: kept,
        dropped,
        slope,
        intercept,
        r2,
        low_confidence: r2 < 0.9,
    })
}
