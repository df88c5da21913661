//! Absolute and squared error of point estimates against known truth.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mae: f64,
    pub mse: f64,
    pub n: usize,
}

pub fn error_metrics(estimates: &[f64], truth: &[f64]) -> Result<ErrorMetrics> {
    if estimates.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} estimates for {} true values",
            estimates.len(),
            truth.len()
        )));
    }
    if estimates.is_empty() {
        return Err(invalid("no values to compare"));
    }
    let n = estimates.len() as f64;
    let (abs, sq) = estimates
        .iter()
        .zip(truth)
        .fold((0.0, 0.0), |(a, s), (e, t)| (a + (e - t).abs(), s + (e - t) * (e - t)));
    Ok(ErrorMetrics {
        mae: abs / n,
        mse: sq / n,
        n: estimates.len(),
    })
}

/// Error table by parameter group, laid out like a recovery table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTable {
    pub difficulty: ErrorMetrics,
    pub discrimination: ErrorMetrics,
    pub ability: ErrorMetrics,
}
