//! Time-averaged sample correlation of a measurement and the deterministic
//! lag autocorrelation `Φ(τ)` of a known transfer function.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::signals::{SignalBuffer, TransferFunction};

/// Symmetric Toeplitz correlation matrix stored by its first row.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    lags: Vec<f64>,
    sample_count: usize,
}

impl CorrelationMatrix {
    /// Builds a matrix from lags `r(0)..r(n-1)`; `n` must be odd.
    pub fn from_lags(lags: Vec<f64>, sample_count: usize) -> Result<Self> {
        if lags.len().is_multiple_of(2) {
            return Err(Error::EvenOrder(lags.len()));
        }
        if let Some(index) = lags.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self { lags, sample_count })
    }

    pub fn order(&self) -> usize {
        self.lags.len()
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// `M[i][j] = r(|i - j|)`
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.order();
        DMatrix::from_fn(n, n, |i, j| self.lags[i.abs_diff(j)])
    }
}

/// Options for [`estimate_correlation_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationOptions {
    /// Require at least `min_length_factor · n` samples. Zero disables the guard.
    pub min_length_factor: usize,
    pub execution: Execution,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        Self {
            min_length_factor: 10,
            execution: Execution::default(),
        }
    }
}

fn lag_product_sum(x: &[f64], tau: usize) -> f64 {
    x[tau..].iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Biased estimate `r(τ) = (1/N) Σ_{t=τ}^{N-1} x[t] x[t-τ]` for `τ = 0..n-1`,
/// requiring at least `10·n` samples.
pub fn estimate_correlation(x: &SignalBuffer, n: usize) -> Result<CorrelationMatrix> {
    estimate_correlation_with(x, n, &CorrelationOptions::default())
}

pub fn estimate_correlation_with(x: &SignalBuffer, n: usize, options: &CorrelationOptions) -> Result<CorrelationMatrix> {
    if n.is_multiple_of(2) {
        return Err(Error::EvenOrder(n));
    }
    let len = x.len();
    if n > len {
        return Err(Error::OrderExceedsLength { order: n, len });
    }
    let required = options.min_length_factor.saturating_mul(n);
    if len < required {
        return Err(Error::TooShort { required, len });
    }
    let s = x.samples();
    let lags = par::map_range(options.execution, n, |tau| lag_product_sum(s, tau) / len as f64);
    Ok(CorrelationMatrix {
        lags,
        sample_count: len,
    })
}

/// `(1/N) Σ x[t]²`, identical to lag zero of [`estimate_correlation`].
pub fn mean_power(x: &SignalBuffer) -> f64 {
    lag_product_sum(x.samples(), 0) / x.len() as f64
}

/// Deterministic autocorrelation `Φ(τ) = Σ_{i-j=τ} h_i h_j` of filter taps.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMatrix {
    values: Vec<f64>,
}

impl PhiMatrix {
    /// Number of taps of the generating filter.
    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// `Φ(τ)` for any integer lag; zero beyond the filter length.
    pub fn at(&self, tau: isize) -> f64 {
        self.values.get(tau.unsigned_abs()).copied().unwrap_or(0.0)
    }

    /// Non-negative lags `Φ(0)..Φ(n-1)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The model correlation `κ·Φ(τ)` as an `order × order` matrix.
    pub fn correlation(&self, kappa: f64, order: usize) -> Result<CorrelationMatrix> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::param("kappa", "must be positive"));
        }
        let lags = (0..order).map(|t| kappa * self.at(t as isize)).collect();
        CorrelationMatrix::from_lags(lags, 0)
    }
}

pub fn phi_from_tf(h: &TransferFunction) -> PhiMatrix {
    let c = h.coefficients();
    let values = (0..c.len()).map(|tau| lag_product_sum(c, tau)).collect();
    PhiMatrix { values }
}
