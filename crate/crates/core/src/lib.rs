//! Blind deconvolution and envelope estimation for second-order
//! cyclostationary (CS2) signals.
//!
//! A measurement `x = h * (q·r + w)` is whitened with the inverse square root
//! of its sample correlation matrix, which removes the unknown transfer
//! function `h`. The envelope `q` is then read off the squared whitened
//! signal through a Welch-averaged, peak-gated spectrum.
//!
//! ```
//! use cs2::{pipeline, r_squared, simulate_measurement, PipelineParams, SimConfig};
//!
//! let sim = simulate_measurement(&SimConfig::reference_scenario(7)).unwrap();
//! let params = PipelineParams { sigma_w2: Some(sim.sigma_w2), ..PipelineParams::default() };
//! let out = pipeline(&sim.x, &params).unwrap();
//! let r2 = r_squared(&sim.q_true, &out.envelope.q_hat).unwrap();
//! assert!(r2.is_finite());
//! ```

pub mod correlation;
pub mod envelope;
pub mod error;
pub mod metrics;
pub mod par;
pub mod seed;
pub mod signals;
pub mod whitening;

pub use correlation::{estimate_correlation, mean_power, phi_from_tf, CorrelationMatrix, PhiMatrix};
pub use envelope::{
    estimate_envelope, gate_peaks_by_median, reconstruct_power, welch_average_amplitude, BiasMode, EnvelopeEstimate,
    PhaseSource, SpectralEstimate, Window,
};
pub use error::{Error, Result, Stage};
pub use metrics::{
    pipeline, r_squared, run_sweep, snr_db, GridPoint, PipelineOutput, PipelineParams, Randomization, RunRecord,
    SweepConfig, SweepResult,
};
pub use par::Execution;
pub use signals::{
    apply_fir, generate_envelope, generate_transfer_function, simulate_measurement, EnvelopeComponent, EnvelopeSpec,
    NoiseLevel, PoleModel, PolePlacement, SignalBuffer, SimConfig, SimOutput, TransferFunction,
};
pub use whitening::{deconvolve, extract_filter, inverse_sqrt_psd, whitening_transform, DeconvFilter, WhiteningTransform};
