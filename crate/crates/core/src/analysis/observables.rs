//! Scalar observables of a transmission state and basic ensemble statistics.

use crate::state::in_open_domain;
use crate::{Error, Result};

/// Dimensionless conductance: the sum of the transmission values.
pub fn landauer_g(t: &[f64]) -> f64 {
    t.iter().sum()
}

/// The collision/boundary Lyapunov functional
/// `f(T) = Σ_k (−2 log T_k − 2 log(1−T_k) − Σ_{l≠k} log|T_k−T_l|)`.
/// Nonnegative on the strictly ordered interior, `+∞` on its boundary.
pub fn lyapunov_f(t: &[f64]) -> f64 {
    if !in_open_domain(t, 0.0) {
        return f64::INFINITY;
    }
    let n = t.len();
    let mut f = 0.0;
    for k in 0..n {
        f += -2.0 * t[k].ln() - 2.0 * (1.0 - t[k]).ln();
        for l in 0..n {
            if l != k {
                f -= (t[k] - t[l]).abs().ln();
            }
        }
    }
    f
}

/// Per-grid-time mean/variance/standard-error of one scalar observable.
#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub observable: String,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// `√(variance / paths)` per grid time.
    pub std_error: Vec<f64>,
    pub paths: u64,
    pub master_seed: u64,
}

impl EnsembleSummary {
    /// Reduces per-path samples (`samples[i]` holds all paths at `grid[i]`).
    pub fn from_samples(
        observable: &str,
        grid: &[f64],
        samples: &[Vec<f64>],
        master_seed: u64,
    ) -> Result<Self> {
        if grid.len() != samples.len() {
            return Err(Error::Domain("grid and sample rows must align".into()));
        }
        let paths = samples.first().map_or(0, |s| s.len());
        if paths < 2 {
            return Err(Error::Domain("variance reports need at least two paths".into()));
        }
        let mut mean = Vec::with_capacity(grid.len());
        let mut variance = Vec::with_capacity(grid.len());
        let mut std_error = Vec::with_capacity(grid.len());
        for row in samples {
            if row.len() != paths {
                return Err(Error::Domain("ragged sample rows".into()));
            }
            let (m, v) = mean_variance(row);
            mean.push(m);
            variance.push(v);
            std_error.push((v / paths as f64).sqrt());
        }
        Ok(Self {
            observable: observable.to_string(),
            grid: grid.to_vec(),
            mean,
            variance,
            std_error,
            paths: paths as u64,
            master_seed,
        })
    }
}

/// Sample mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Standard error of the sample variance from the fourth central moment:
/// `Var(s²) ≈ (m₄ − s⁴ (n−3)/(n−1)) / n`.
pub fn variance_std_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mean, var) = mean_variance(xs);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}
