use serde::Serialize;

use crate::error::{Error, Result};

/// Summary of angular errors, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub count: usize,
}

/// Mean, median (mean of the middle two for even counts) and maximum.
pub fn error_stats(samples: &[f64]) -> Result<ErrorStats> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let median = if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    };
    let mean = s.iter().sum::<f64>() / n as f64;
    let max = s[n - 1];
    Ok(ErrorStats {
        // Rounding can push the mean of near-equal values a hair past the max.
        mean: mean.min(max),
        median,
        max,
        count: n,
    })
}
