//! End-to-end pipeline, R² scoring and the Monte Carlo SNR sweep.

use rand::Rng;

use crate::correlation::{estimate_correlation_with, CorrelationOptions};
use crate::envelope::{
    estimate_envelope, gate_peaks_by_median, reconstruct_power_with, welch_average_amplitude_with, EnvelopeEstimate,
    PhaseSource, SpectralEstimate, Window, DEFAULT_GATE_SPREAD,
};
use crate::error::{Error, Result, Stage, StageExt};
use crate::par::{self, Execution};
use crate::seed::{self, Purpose};
use crate::signals::{
    mean_square, simulate_measurement, EnvelopeSpec, NoiseLevel, SignalBuffer, SimConfig, DEFAULT_AMPLITUDE_RANGE,
};
use crate::whitening::{deconvolve_with, extract_filter, whitening_transform, DeconvFilter, DEFAULT_EIGEN_FLOOR};

/// Coefficient of determination `1 - SSE/SST`; negative for estimates worse
/// than the mean.
pub fn r_squared(q_true: &SignalBuffer, q_hat: &SignalBuffer) -> Result<f64> {
    if q_true.len() != q_hat.len() {
        return Err(Error::LengthMismatch {
            left: q_true.len(),
            right: q_hat.len(),
        });
    }
    let q = q_true.samples();
    let mean = q.iter().sum::<f64>() / q.len() as f64;
    let sst: f64 = q.iter().map(|v| (v - mean) * (v - mean)).sum();
    if !(sst > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let sse: f64 = q.iter().zip(q_hat.samples()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - sse / sst)
}

/// `10·log10(mean(q²) / σ_w²)`
pub fn snr_db(q: &SignalBuffer, sigma_w2: f64) -> Result<f64> {
    if !(sigma_w2.is_finite() && sigma_w2 > 0.0) {
        return Err(Error::param("sigma_w2", format!("must be positive, got {sigma_w2}")));
    }
    Ok(10.0 * (mean_square(q.samples()) / sigma_w2).log10())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    /// Deconvolution filter length `n`; odd.
    pub filter_order: usize,
    /// Welch frame length `L`; even, at least 16.
    pub frame_length: usize,
    pub overlap_fraction: f64,
    pub window: Window,
    pub eigen_floor: f64,
    /// Known noise variance; `None` falls back to min-subtraction.
    pub sigma_w2: Option<f64>,
    pub gating: bool,
    /// Robust-spread multiplier of the gate threshold.
    pub gate_spread: f64,
    pub phase_source: PhaseSource,
    /// The input must hold at least this many times `filter_order` samples.
    pub min_length_factor: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            filter_order: 41,
            frame_length: 2048,
            overlap_fraction: 0.5,
            window: Window::Hann,
            eigen_floor: DEFAULT_EIGEN_FLOOR,
            sigma_w2: None,
            gating: true,
            gate_spread: DEFAULT_GATE_SPREAD,
            phase_source: PhaseSource::PerFrame,
            min_length_factor: 10,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        if self.filter_order.is_multiple_of(2) {
            return Err(Error::EvenOrder(self.filter_order));
        }
        if self.frame_length < 16 || self.frame_length % 2 == 1 {
            return Err(Error::param("frame_length", format!("must be even and at least 16, got {}", self.frame_length)));
        }
        if !(0.0..=0.9).contains(&self.overlap_fraction) {
            return Err(Error::param("overlap_fraction", "must lie in [0, 0.9]"));
        }
        if !(self.eigen_floor.is_finite() && self.eigen_floor >= 0.0) {
            return Err(Error::param("eigen_floor", "must be finite and non-negative"));
        }
        if let Some(s) = self.sigma_w2 {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::NegativeNoiseVariance(s));
            }
        }
        if !(self.gate_spread.is_finite() && self.gate_spread >= 0.0) {
            return Err(Error::param("gate_spread", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Everything the pipeline computes on the way to the envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub filter: DeconvFilter,
    /// Whitened, delay-compensated signal `y`.
    pub deconvolved: SignalBuffer,
    /// Spectrum of `y²` after optional gating.
    pub spectrum: SpectralEstimate,
    /// Estimate of `E{y²(t)}`.
    pub power: SignalBuffer,
    pub envelope: EnvelopeEstimate,
}

/// Blind deconvolution and envelope estimation of one measurement.
pub fn pipeline(x: &SignalBuffer, params: &PipelineParams) -> Result<PipelineOutput> {
    pipeline_with(Execution::default(), x, params)
}

pub fn pipeline_with(exec: Execution, x: &SignalBuffer, params: &PipelineParams) -> Result<PipelineOutput> {
    params.validate()?;
    let options = CorrelationOptions {
        min_length_factor: params.min_length_factor,
        execution: exec,
    };
    let r = estimate_correlation_with(x, params.filter_order, &options).at(Stage::Correlation)?;
    let g = whitening_transform(&r, params.eigen_floor).at(Stage::Whitening)?;
    let filter = extract_filter(&g).at(Stage::FilterExtraction)?;
    let deconvolved = deconvolve_with(exec, &filter, x).at(Stage::Deconvolution)?;

    let y2 = deconvolved.map(|v| v * v).at(Stage::Spectrum)?;
    let mut spectrum =
        welch_average_amplitude_with(exec, &y2, params.frame_length, params.overlap_fraction, params.window)
            .at(Stage::Spectrum)?;
    if params.gating {
        spectrum = gate_peaks_by_median(&spectrum, params.gate_spread).at(Stage::Spectrum)?;
    }
    let power = reconstruct_power_with(exec, &spectrum, x.len(), params.phase_source).at(Stage::Reconstruction)?;
    let envelope = estimate_envelope(&power, params.sigma_w2).at(Stage::Envelope)?;
    Ok(PipelineOutput {
        filter,
        deconvolved,
        spectrum,
        power,
        envelope,
    })
}

/// Whether sweep scenarios are redrawn for every run or once per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Randomization {
    /// Component count, pole count, frequencies and phases drawn per run.
    #[default]
    PerRun,
    /// One scenario per grid point; only carrier and noise vary between runs.
    PerPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Template for every run. Its envelope, pole count, noise level and
    /// seed are replaced per run.
    pub base: SimConfig,
    pub snr_grid: Vec<f64>,
    pub runs_per_point: usize,
    pub params: PipelineParams,
    pub master_seed: u64,
    pub randomization: Randomization,
    /// Inclusive range of envelope component counts.
    pub k_range: (usize, usize),
    /// Inclusive range of pole counts.
    pub pole_range: (usize, usize),
    pub amplitude_range: (f64, f64),
}

impl SweepConfig {
    pub fn new(snr_grid: Vec<f64>, runs_per_point: usize, master_seed: u64) -> Self {
        Self {
            base: SimConfig::reference_scenario(master_seed),
            snr_grid,
            runs_per_point,
            params: PipelineParams::default(),
            master_seed,
            randomization: Randomization::default(),
            k_range: (5, 20),
            pole_range: (5, 20),
            amplitude_range: DEFAULT_AMPLITUDE_RANGE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_grid.is_empty() {
            return Err(Error::param("snr_grid", "must contain at least one point"));
        }
        if let Some(v) = self.snr_grid.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("snr_grid", format!("{v} is not finite")));
        }
        if self.runs_per_point == 0 {
            return Err(Error::param("runs_per_point", "must be at least 1"));
        }
        let (k0, k1) = self.k_range;
        if k0 == 0 || k0 > k1 {
            return Err(Error::param("k_range", format!("[{k0}, {k1}] is empty or includes zero")));
        }
        let (p0, p1) = self.pole_range;
        if p0 == 0 || p0 > p1 {
            return Err(Error::param("pole_range", format!("[{p0}, {p1}] is empty or includes zero")));
        }
        self.params.validate()
    }
}

/// One Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub grid_index: usize,
    pub run_index: usize,
    pub seed: u64,
    pub components: usize,
    pub poles: usize,
    /// R² of the run, or the error that stopped it.
    pub outcome: std::result::Result<f64, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub snr_db: f64,
    /// Successful runs entering the statistics.
    pub runs: usize,
    pub failures: usize,
    /// NaN when every run failed.
    pub r2_mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub r2_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: Vec<GridPoint>,
    pub records: Vec<RunRecord>,
    pub params: PipelineParams,
    pub master_seed: u64,
}

struct Scenario {
    envelope: EnvelopeSpec,
    poles: usize,
}

fn draw_scenario(config: &SweepConfig, seed: u64) -> Result<Scenario> {
    let mut rng = seed::stream(seed, Purpose::Scenario);
    let k = rng.random_range(config.k_range.0..=config.k_range.1);
    let poles = rng.random_range(config.pole_range.0..=config.pole_range.1);
    let mut env_rng = seed::stream(seed, Purpose::Envelope);
    let envelope = EnvelopeSpec::random(k, config.amplitude_range, &mut env_rng)?;
    Ok(Scenario { envelope, poles })
}

fn run_one(config: &SweepConfig, grid_index: usize, run_index: usize) -> RunRecord {
    let seed = seed::derive(config.master_seed, &[grid_index as u64, run_index as u64]);
    let scenario_seed = match config.randomization {
        Randomization::PerRun => seed,
        Randomization::PerPoint => seed::derive(config.master_seed, &[grid_index as u64]),
    };
    let mut record = RunRecord {
        grid_index,
        run_index,
        seed,
        components: 0,
        poles: 0,
        outcome: Err(Error::EmptyEnvelope),
    };
    record.outcome = (|| {
        let scenario = draw_scenario(config, scenario_seed)?;
        record.components = scenario.envelope.components().len();
        record.poles = scenario.poles;
        let mut sim = config.base.clone();
        sim.envelope = scenario.envelope;
        sim.poles.count = scenario.poles;
        sim.noise = NoiseLevel::SnrDb(config.snr_grid[grid_index]);
        sim.rng_seed = seed;
        let measured = simulate_measurement(&sim)?;
        let params = PipelineParams {
            sigma_w2: Some(measured.sigma_w2),
            ..config.params.clone()
        };
        // Runs are already spread over the pool; keep each one sequential.
        let out = pipeline_with(Execution::Sequential, &measured.x, &params)?;
        let r2 = r_squared(&measured.q_true, &out.envelope.q_hat)?;
        if r2.is_finite() {
            Ok(r2)
        } else {
            Err(Error::param("r_squared", "non-finite score"))
        }
    })();
    record
}

fn aggregate(snr_db: f64, records: &[RunRecord]) -> GridPoint {
    let scores: Vec<f64> = records.iter().filter_map(|r| r.outcome.as_ref().ok().copied()).collect();
    let runs = scores.len();
    let failures = records.len() - runs;
    let (r2_mean, r2_std) = match runs {
        0 => (f64::NAN, 0.0),
        1 => (scores[0], 0.0),
        _ => {
            let mean = par::pairwise_sum(&scores) / runs as f64;
            let dev: Vec<f64> = scores.iter().map(|s| (s - mean) * (s - mean)).collect();
            (mean, (par::pairwise_sum(&dev) / (runs - 1) as f64).sqrt())
        }
    };
    GridPoint {
        snr_db,
        runs,
        failures,
        r2_mean,
        r2_std,
    }
}

/// Simulates and scores `runs_per_point` measurements at every grid SNR,
/// with the true noise variance supplied to the pipeline.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(Execution::default(), config)
}

/// Results are identical for every execution mode and thread count.
pub fn run_sweep_with(exec: Execution, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let per = config.runs_per_point;
    let total = config.snr_grid.len() * per;
    let records = par::map_range(exec, total, |i| run_one(config, i / per, i % per));
    let grid = config
        .snr_grid
        .iter()
        .enumerate()
        .map(|(g, &snr)| aggregate(snr, &records[g * per..(g + 1) * per]))
        .collect();
    Ok(SweepResult {
        grid,
        records,
        params: config.params.clone(),
        master_seed: config.master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buf(v: &[f64]) -> SignalBuffer {
        SignalBuffer::from_samples(v.to_vec()).unwrap()
    }

    #[test]
    fn r_squared_examples() {
        let q = buf(&[1.0, 2.0, 3.0]);
        assert_eq!(r_squared(&q, &q).unwrap(), 1.0);
        assert_eq!(r_squared(&q, &buf(&[2.0, 2.0, 2.0])).unwrap(), 0.0);
        assert_eq!(r_squared(&q, &buf(&[1.0, 2.0, 2.0])).unwrap(), 0.5);
        assert_eq!(r_squared(&buf(&[4.0; 3]), &q), Err(Error::ZeroVariance));
        assert!(matches!(r_squared(&q, &buf(&[1.0])), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn snr_examples() {
        assert_eq!(snr_db(&buf(&[1.0, -1.0]), 1.0).unwrap(), 0.0);
        assert!((snr_db(&buf(&[10.0; 3]), 1.0).unwrap() - 20.0).abs() < 1e-12);
        assert!((snr_db(&buf(&[1.0; 3]), 100.0).unwrap() + 20.0).abs() < 1e-12);
        assert!(snr_db(&buf(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn pipeline_tags_stage() {
        let x = buf(&[1.0; 100]);
        let err = pipeline(&x, &PipelineParams::default()).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Correlation));
        assert!(matches!(err.root(), Error::TooShort { .. }));

        let zeros = buf(&vec![0.0; 5000]);
        let err = pipeline(&zeros, &PipelineParams::default()).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Whitening));
        assert_eq!(err.root(), &Error::NotPositive);
    }

    #[test]
    fn aggregate_counts_failures() {
        let rec = |outcome| RunRecord {
            grid_index: 0,
            run_index: 0,
            seed: 0,
            components: 1,
            poles: 1,
            outcome,
        };
        let p = aggregate(0.0, &[rec(Ok(1.0)), rec(Err(Error::NotPositive)), rec(Ok(3.0))]);
        assert_eq!((p.runs, p.failures, p.r2_mean), (2, 1, 2.0));
        assert!((p.r2_std - 2f64.sqrt()).abs() < 1e-15);
        let p = aggregate(0.0, &[rec(Ok(0.25))]);
        assert_eq!((p.r2_mean, p.r2_std), (0.25, 0.0));
    }
}
