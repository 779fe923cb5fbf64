use serde::Serialize;

use super::ConvergenceRecord;
use crate::error::{Error, Result};

/// Values below this are treated as zero by the rate fit.
pub const FLOOR: f64 = 1e-13;

/// `Δ ≈ amplitude · N^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least squares of `log Δ` against `log N` over the points with
/// `Δ ≥ FLOOR`.
pub fn fit_power_law(ns: &[f64], deltas: &[f64]) -> Result<PowerLawFit> {
    if ns.len() != deltas.len() {
        return Err(Error::DimensionMismatch {
            expected: ns.len(),
            got: deltas.len(),
        });
    }
    if !deltas.is_empty() && deltas.iter().all(|d| d.abs() < FLOOR) {
        return Err(Error::AtNumericalFloor);
    }
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(deltas)
        .filter(|(n, d)| **n > 0.0 && **d >= FLOOR && d.is_finite())
        .map(|(n, d)| (n.ln(), d.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all N values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(PowerLawFit {
        exponent: slope,
        amplitude: intercept.exp(),
        r_squared,
        points: pts.len(),
    })
}

/// Fit of `Δ` over the records of one level.
pub fn fit_level(records: &[ConvergenceRecord], level: usize) -> Result<PowerLawFit> {
    let (ns, ds): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.level == level)
        .map(|r| (r.n as f64, r.delta))
        .unzip();
    fit_power_law(&ns, &ds)
}

/// Each value at most `(1 + jitter)` times its predecessor.
pub fn nonincreasing_within(values: &[f64], jitter: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + jitter))
}

/// Each value at least `(1 − jitter)` times its predecessor.
pub fn nondecreasing_within(values: &[f64], jitter: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] * (1.0 - jitter))
}
