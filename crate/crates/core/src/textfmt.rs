//! Plain-text number formatting shared by the on-disk formats.

use crate::error::{Error, Result};

/// 17 significant digits; parsing the output gives back the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn parse_f64(token: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: {token:?}")))
}

pub fn parse_usize(token: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("not an unsigned integer: {token:?}")))
}

/// Scale a nonnegative vector to sum 1. Rejects sums further than `tol` from 1.
pub fn renormalize(probs: &mut [f64], tol: f64, what: &str) -> Result<()> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidDistribution(format!("{what}: negative or non-finite entry")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("{what}: sums to {sum}")));
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    Ok(())
}
