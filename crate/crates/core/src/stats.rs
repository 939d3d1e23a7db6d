//! Small statistics helpers shared by the Monte Carlo code and the reports.

use serde::Serialize;

use crate::error::{Error, Result};

/// Mean of i.i.d. samples with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl MCEstimate {
    /// Aggregates values in the given order (Welford's update).
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Result<Self> {
        let mut w = Welford::default();
        for v in values {
            w.push(v);
        }
        w.estimate()
    }

    /// `|mean - target| <= k * stderr`.
    pub fn within_sigmas(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }

    pub fn relative_stderr(&self) -> f64 {
        self.stderr / self.mean.abs()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn estimate(&self) -> Result<MCEstimate> {
        if self.count < 2 {
            return Err(Error::invalid("an estimate needs at least two samples"));
        }
        Ok(MCEstimate {
            mean: self.mean,
            stderr: (self.variance() / self.count as f64).sqrt(),
            samples: self.count,
        })
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, 7.0, 3.0, 3.0];
        let e = MCEstimate::from_values(xs).unwrap();
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((e.mean - mean).abs() < 1e-14);
        assert!((e.stderr - (var / 6.0).sqrt()).abs() < 1e-14);
        assert!(MCEstimate::from_values([1.0]).is_err());
    }

    #[test]
    fn slope_of_a_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((regression_slope(&xs, &ys).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(regression_slope(&[1.0], &[1.0]), None);
    }
}
