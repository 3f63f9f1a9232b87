//! Mahalanobis whitening of the measured correlation and the zero-phase
//! deconvolution filter taken from its central column.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::signals::SignalBuffer;

/// Default relative eigenvalue floor for [`inverse_sqrt_psd`].
pub const DEFAULT_EIGEN_FLOOR: f64 = 1e-10;

/// `M^{-1/2}` of a symmetric positive semi-definite matrix.
///
/// Eigenvalues below `eigen_floor · λ_max` are raised to that value before
/// inversion, which regularizes near-singular inputs.
pub fn inverse_sqrt_psd(m: &DMatrix<f64>, eigen_floor: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::param("matrix", format!("must be square and non-empty, got {}x{}", n, m.ncols())));
    }
    if !(eigen_floor.is_finite() && eigen_floor >= 0.0) {
        return Err(Error::param("eigen_floor", "must be finite and non-negative"));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("matrix", "contains non-finite entries"));
    }
    let norm = m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * norm {
        return Err(Error::NotSymmetric(asym));
    }

    let eig = SymmetricEigen::new(m.clone());
    let lambda_max = eig.eigenvalues.max();
    if !(lambda_max > 0.0) {
        return Err(Error::NotPositive);
    }
    let floor = eigen_floor * lambda_max;
    let scaled = DMatrix::from_fn(n, n, |i, j| {
        eig.eigenvectors[(i, j)] / eig.eigenvalues[j].max(floor).sqrt()
    });
    let a = &scaled * eig.eigenvectors.transpose();
    Ok((&a + a.transpose()) * 0.5)
}

/// `G = σ̄_x · R^{-1/2}` with `σ̄_x² = r(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    matrix: DMatrix<f64>,
    scale: f64,
}

impl WhiteningTransform {
    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `σ̄_x = √r(0)`
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Wraps an arbitrary square matrix, e.g. for testing filter extraction.
    pub fn from_matrix(matrix: DMatrix<f64>, scale: f64) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::param("matrix", "must be square and non-empty"));
        }
        Ok(Self { matrix, scale })
    }
}

pub fn whitening_transform(r: &CorrelationMatrix, eigen_floor: f64) -> Result<WhiteningTransform> {
    let r0 = r.lags()[0];
    if !(r0 > 0.0) {
        return Err(Error::NotPositive);
    }
    let scale = r0.sqrt();
    let matrix = inverse_sqrt_psd(&r.to_matrix(), eigen_floor)? * scale;
    Ok(WhiteningTransform { matrix, scale })
}

/// Odd-length, zero-phase FIR deconvolution filter.
#[derive(Debug, Clone, PartialEq)]
pub struct DeconvFilter {
    coefficients: Vec<f64>,
}

impl DeconvFilter {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len().is_multiple_of(2) {
            return Err(Error::EvenOrder(coefficients.len()));
        }
        if let Some(index) = coefficients.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        if coefficients.iter().all(|&c| c == 0.0) {
            return Err(Error::param("coefficients", "all zero"));
        }
        Ok(Self { coefficients })
    }

    /// Unit impulse of length `n` at the center tap.
    pub fn identity(n: usize) -> Result<Self> {
        if n.is_multiple_of(2) {
            return Err(Error::EvenOrder(n));
        }
        let mut c = vec![0.0; n];
        c[n / 2] = 1.0;
        Self::new(c)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `(n - 1) / 2`
    pub fn center_index(&self) -> usize {
        self.coefficients.len() / 2
    }

    /// Largest `|g_i - g_{n-1-i}|` relative to `max |g|`.
    pub fn asymmetry(&self) -> f64 {
        let c = &self.coefficients;
        let peak = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = c
            .iter()
            .zip(c.iter().rev())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst / peak
    }
}

/// Central column `G e_{(n-1)/2}` of the whitening transform.
pub fn extract_filter(g: &WhiteningTransform) -> Result<DeconvFilter> {
    let n = g.order();
    if n.is_multiple_of(2) {
        return Err(Error::EvenOrder(n));
    }
    DeconvFilter::new(g.matrix.column(n / 2).iter().copied().collect())
}

/// Filters `x` with `g` and compensates the `(n-1)/2` sample group delay.
///
/// `y[t] = Σ_i g_i x[t + c - i]` with `c` the center index and `x` taken as
/// zero outside the record, so a centered unit impulse returns `x` unchanged.
pub fn deconvolve(g: &DeconvFilter, x: &SignalBuffer) -> Result<SignalBuffer> {
    deconvolve_with(Execution::default(), g, x)
}

pub fn deconvolve_with(exec: Execution, g: &DeconvFilter, x: &SignalBuffer) -> Result<SignalBuffer> {
    let n = g.len();
    let len = x.len();
    if n > len {
        return Err(Error::OrderExceedsLength { order: n, len });
    }
    let c = g.center_index();
    let taps = g.coefficients();
    let s = x.samples();
    let mut y = vec![0.0; len];
    par::fill_indexed(exec, &mut y, |t| {
        // Taps i with 0 <= t + c - i < len.
        let lo = (t + c + 1).saturating_sub(len);
        let hi = n.min(t + c + 1);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += taps[i] * s[t + c - i];
        }
        acc
    });
    SignalBuffer::new(y, x.sample_rate())
}
