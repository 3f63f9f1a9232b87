use std::time::Instant;

use serde::Serialize;

use cs2::correlation::mean_power;
use cs2::envelope::{reconstruct_power_with, welch_average_amplitude_with};
use cs2::{
    estimate_envelope, gate_peaks_by_median, pipeline as run_pipeline, r_squared, run_sweep, simulate_measurement,
    BiasMode, Execution, PhaseSource, PipelineParams, SignalBuffer, SpectralEstimate, Window,
};

use crate::config::Config;
use crate::output::{num, OutputDir};
use crate::plot::{decimate, Band, Plot, Series};
use crate::{sigfile, CliError, Common, WithInput};

const BLUE: &str = "#1f77b4";
const ORANGE: &str = "#ff7f0e";
/// Samples shown in waveform plots.
const WAVEFORM_SPAN: usize = 4000;

fn load(common: &Common) -> Result<Config, CliError> {
    let mut config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(s) = common.sigma_w2 {
        config.sigma_w2 = Some(s);
    }
    Ok(config)
}

fn open(common: &Common, command: &'static str, config: &Config) -> Result<OutputDir, CliError> {
    OutputDir::create(&common.out, command, common.config.as_deref(), config.seed)
}

fn window_name(w: Window) -> &'static str {
    match w {
        Window::Hann => "hann",
        Window::Rectangular => "rectangular",
    }
}

fn bias_name(b: BiasMode) -> &'static str {
    match b {
        BiasMode::KnownNoise => "KnownNoise",
        BiasMode::MinSubtraction => "MinSubtraction",
    }
}

fn phase_name(p: PhaseSource) -> &'static str {
    match p {
        PhaseSource::PerFrame => "per_frame",
        PhaseSource::SingleFrame => "single_frame",
    }
}

fn elapsed(start: Instant, enabled: bool) -> Option<f64> {
    enabled.then(|| start.elapsed().as_secs_f64())
}

fn waveform_svg(title: &str, series: &[(&str, &str, &SignalBuffer)]) -> String {
    let data: Vec<(Vec<f64>, Vec<f64>)> = series
        .iter()
        .map(|(_, _, s)| {
            let n = s.len().min(WAVEFORM_SPAN);
            decimate(&s.samples()[..n], WAVEFORM_SPAN)
        })
        .collect();
    Plot {
        title,
        x_label: "sample",
        y_label: "amplitude",
        series: series
            .iter()
            .zip(&data)
            .map(|((label, color, _), (x, y))| Series {
                label,
                color,
                x,
                y,
            })
            .collect(),
        band: None,
        y_clamp: None,
        markers: false,
    }
    .render()
}

fn spectrum_rows(spec: &SpectralEstimate) -> impl Iterator<Item = Vec<String>> + '_ {
    let l = spec.frame_length();
    spec.amplitude()[..=l / 2]
        .iter()
        .enumerate()
        .map(move |(k, &a)| vec![k.to_string(), num(k as f64 / l as f64), num(a)])
}

fn spectrum_svg(spec: &SpectralEstimate) -> String {
    let l = spec.frame_length();
    let x: Vec<f64> = (1..=l / 2).map(|k| k as f64 / l as f64).collect();
    let y = spec.amplitude()[1..=l / 2].to_vec();
    Plot {
        title: "Welch amplitude of y² (DC omitted)",
        x_label: "frequency (cycles/sample)",
        y_label: "amplitude",
        series: vec![Series {
            label: if spec.is_gated() { "gated" } else { "ungated" },
            color: BLUE,
            x: &x,
            y: &y,
        }],
        band: None,
        y_clamp: None,
        markers: false,
    }
    .render()
}

fn filter_rows(g: &[f64]) -> impl Iterator<Item = Vec<String>> + '_ {
    g.iter().enumerate().map(|(i, &v)| vec![i.to_string(), num(v)])
}

#[derive(Serialize)]
struct SimulateMeta<'a> {
    seed: u64,
    n_samples: usize,
    sample_rate: f64,
    sigma_w2: f64,
    snr_db_realized: Option<f64>,
    tf_length: usize,
    tf_energy: f64,
    poles: Vec<[f64; 2]>,
    envelope: Vec<[f64; 3]>,
    config: &'a Config,
}

pub fn simulate(common: &Common) -> Result<(), CliError> {
    let config = load(common)?;
    let sim_config = config.sim_config()?;
    let sim = simulate_measurement(&sim_config)?;
    let mut out = open(common, "simulate", &config)?;

    out.signal("measurement", "x.sig", &sim.x)?;
    out.signal("ground_truth", "q_true.sig", &sim.q_true)?;
    out.csv("transfer_function", "tf.csv", &["index", "coefficient"], filter_rows(sim.tf.coefficients()))?;
    let meta = SimulateMeta {
        seed: config.seed,
        n_samples: sim.x.len(),
        sample_rate: sim.x.sample_rate(),
        sigma_w2: sim.sigma_w2,
        snr_db_realized: cs2::snr_db(&sim.q_true, sim.sigma_w2).ok(),
        tf_length: sim.tf.len(),
        tf_energy: sim.tf.energy(),
        poles: sim.tf.poles().unwrap_or_default().iter().map(|p| [p.re, p.im]).collect(),
        envelope: sim_config
            .envelope
            .components()
            .iter()
            .map(|c| [c.amplitude, c.frequency, c.phase])
            .collect(),
        config: &config,
    };
    out.json("metadata", "meta.json", &meta)?;
    let svg = waveform_svg(
        "Simulated measurement and envelope",
        &[("x", BLUE, &sim.x), ("q_true", ORANGE, &sim.q_true)],
    );
    out.write("plot", "signal.svg", svg.as_bytes())?;
    if common.csv {
        out.signal_csv("measurement_csv", "x.csv", &sim.x)?;
        out.signal_csv("ground_truth_csv", "q_true.csv", &sim.q_true)?;
    }
    out.finish()?;
    Ok(())
}

/// Largest normalized sample autocorrelation magnitude at lags `1..=max_lag`.
fn max_lag_correlation(y: &SignalBuffer, max_lag: usize) -> f64 {
    let s = y.samples();
    let r0: f64 = s.iter().map(|v| v * v).sum();
    (1..=max_lag.min(s.len() - 1))
        .map(|t| (s[t..].iter().zip(s).map(|(a, b)| a * b).sum::<f64>() / r0).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize)]
struct DeconvReport {
    n_samples: usize,
    filter_order: usize,
    filter_asymmetry: f64,
    input_mean_power: f64,
    output_mean_power: f64,
    max_lag_correlation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_seconds: Option<f64>,
}

pub fn deconv(args: &WithInput) -> Result<(), CliError> {
    let start = Instant::now();
    let config = load(&args.common)?;
    let params = config.pipeline_params();
    let x = sigfile::read(&args.input)?;

    let options = cs2::correlation::CorrelationOptions {
        min_length_factor: params.min_length_factor,
        execution: Execution::default(),
    };
    let r = cs2::correlation::estimate_correlation_with(&x, params.filter_order, &options)?;
    let g = cs2::whitening_transform(&r, params.eigen_floor)?;
    let filter = cs2::extract_filter(&g)?;
    let y = cs2::deconvolve(&filter, &x)?;

    let mut out = open(&args.common, "deconv", &config)?;
    out.csv("filter", "g.csv", &["index", "coefficient"], filter_rows(filter.coefficients()))?;
    out.signal("deconvolved", "y.sig", &y)?;
    if args.common.csv {
        out.signal_csv("deconvolved_csv", "y.csv", &y)?;
    }
    let report = DeconvReport {
        n_samples: x.len(),
        filter_order: filter.len(),
        filter_asymmetry: filter.asymmetry(),
        input_mean_power: mean_power(&x),
        output_mean_power: mean_power(&y),
        max_lag_correlation: max_lag_correlation(&y, filter.len()),
        timing_seconds: elapsed(start, args.common.timing),
    };
    out.json("report", "report.json", &report)?;
    out.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct EnvelopeReport {
    n_samples: usize,
    frame_length: usize,
    hop: usize,
    n_frames: usize,
    overlap_fraction: f64,
    window: &'static str,
    gating: bool,
    gate_spread: f64,
    retained_bins: usize,
    phase_source: &'static str,
    bias_mode: &'static str,
    sigma_w2_used: f64,
    clipped_fraction: f64,
    r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter_asymmetry: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_seconds: Option<f64>,
}

impl EnvelopeReport {
    fn new(params: &PipelineParams, spec: &SpectralEstimate, env: &cs2::EnvelopeEstimate, r2: Option<f64>) -> Self {
        Self {
            n_samples: env.q_hat.len(),
            frame_length: spec.frame_length(),
            hop: spec.hop(),
            n_frames: spec.n_frames(),
            overlap_fraction: params.overlap_fraction,
            window: window_name(params.window),
            gating: params.gating,
            gate_spread: params.gate_spread,
            retained_bins: spec.amplitude().iter().filter(|&&a| a > 0.0).count(),
            phase_source: phase_name(params.phase_source),
            bias_mode: bias_name(env.bias_mode),
            sigma_w2_used: env.sigma_w2_used,
            clipped_fraction: env.clipped_fraction,
            r2,
            filter_order: None,
            filter_asymmetry: None,
            timing_seconds: None,
        }
    }
}

fn score(truth: Option<&std::path::Path>, q_hat: &SignalBuffer) -> Result<Option<(SignalBuffer, f64)>, CliError> {
    match truth {
        None => Ok(None),
        Some(path) => {
            let q = sigfile::read(path)?;
            let r2 = r_squared(&q, q_hat)?;
            Ok(Some((q, r2)))
        }
    }
}

fn envelope_svg(q_hat: &SignalBuffer, truth: Option<&SignalBuffer>) -> String {
    let mut series = Vec::new();
    if let Some(q) = truth {
        series.push(("q_true", BLUE, q));
    }
    series.push(("q_hat", ORANGE, q_hat));
    waveform_svg("Envelope estimate", &series)
}

pub fn envelope(args: &WithInput) -> Result<(), CliError> {
    let start = Instant::now();
    let config = load(&args.common)?;
    let params = config.pipeline_params();
    params.validate()?;
    let y = sigfile::read(&args.input)?;

    let exec = Execution::default();
    let y2 = y.map(|v| v * v)?;
    let mut spec = welch_average_amplitude_with(exec, &y2, params.frame_length, params.overlap_fraction, params.window)?;
    if params.gating {
        spec = gate_peaks_by_median(&spec, params.gate_spread)?;
    }
    let power = reconstruct_power_with(exec, &spec, y.len(), params.phase_source)?;
    let env = estimate_envelope(&power, params.sigma_w2)?;
    let scored = score(args.truth.as_deref(), &env.q_hat)?;

    let mut out = open(&args.common, "envelope", &config)?;
    out.signal("envelope", "q_hat.sig", &env.q_hat)?;
    out.csv("spectrum", "spectrum.csv", &["bin", "frequency", "amplitude"], spectrum_rows(&spec))?;
    if args.common.csv {
        out.signal_csv("envelope_csv", "q_hat.csv", &env.q_hat)?;
    }
    out.write("plot", "envelope.svg", envelope_svg(&env.q_hat, scored.as_ref().map(|s| &s.0)).as_bytes())?;
    let mut report = EnvelopeReport::new(&params, &spec, &env, scored.map(|s| s.1));
    report.timing_seconds = elapsed(start, args.common.timing);
    out.json("report", "report.json", &report)?;
    out.finish()?;
    Ok(())
}

pub fn pipeline(args: &WithInput) -> Result<(), CliError> {
    let start = Instant::now();
    let config = load(&args.common)?;
    let params = config.pipeline_params();
    let x = sigfile::read(&args.input)?;
    let result = run_pipeline(&x, &params)?;
    let scored = score(args.truth.as_deref(), &result.envelope.q_hat)?;

    let mut out = open(&args.common, "pipeline", &config)?;
    out.csv("filter", "g.csv", &["index", "coefficient"], filter_rows(result.filter.coefficients()))?;
    out.signal("envelope", "q_hat.sig", &result.envelope.q_hat)?;
    out.csv("spectrum", "spectrum.csv", &["bin", "frequency", "amplitude"], spectrum_rows(&result.spectrum))?;
    if args.common.csv {
        out.signal_csv("envelope_csv", "q_hat.csv", &result.envelope.q_hat)?;
    }
    let svg = envelope_svg(&result.envelope.q_hat, scored.as_ref().map(|s| &s.0));
    out.write("plot", "envelope.svg", svg.as_bytes())?;
    out.write("plot", "spectrum.svg", spectrum_svg(&result.spectrum).as_bytes())?;

    let mut report = EnvelopeReport::new(&params, &result.spectrum, &result.envelope, scored.map(|s| s.1));
    report.filter_order = Some(result.filter.len());
    report.filter_asymmetry = Some(result.filter.asymmetry());
    report.timing_seconds = elapsed(start, args.common.timing);
    out.json("report", "report.json", &report)?;
    out.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepReport {
    master_seed: u64,
    runs_per_point: usize,
    grid_points: usize,
    total_failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_seconds: Option<f64>,
}

pub fn sweep(common: &Common) -> Result<(), CliError> {
    let start = Instant::now();
    let config = load(common)?;
    let sweep_config = config.sweep_config()?;
    let result = run_sweep(&sweep_config)?;

    let mut out = open(common, "sweep", &config)?;
    let rows = result.grid.iter().map(|p| {
        vec![
            num(p.snr_db),
            p.runs.to_string(),
            p.failures.to_string(),
            num(p.r2_mean),
            num(p.r2_std),
        ]
    });
    out.csv("sweep", "sweep.csv", &["snr_db", "runs", "failures", "r2_mean", "r2_std"], rows)?;

    let runs = result.records.iter().map(|r| {
        let (r2, error) = match &r.outcome {
            Ok(v) => (num(*v), String::new()),
            Err(e) => (String::new(), e.to_string()),
        };
        vec![
            r.grid_index.to_string(),
            r.run_index.to_string(),
            num(sweep_config.snr_grid[r.grid_index]),
            r.seed.to_string(),
            r.components.to_string(),
            r.poles.to_string(),
            r2,
            error,
        ]
    });
    out.csv(
        "runs",
        "runs.csv",
        &["grid_index", "run_index", "snr_db", "seed", "components", "poles", "r2", "error"],
        runs,
    )?;

    let x: Vec<f64> = result.grid.iter().map(|p| p.snr_db).collect();
    let mean: Vec<f64> = result.grid.iter().map(|p| p.r2_mean).collect();
    let lower: Vec<f64> = result.grid.iter().map(|p| p.r2_mean - p.r2_std).collect();
    let upper: Vec<f64> = result.grid.iter().map(|p| p.r2_mean + p.r2_std).collect();
    let svg = Plot {
        title: "R² vs. SNR (mean ± 1 std)",
        x_label: "SNR (dB)",
        y_label: "R²",
        series: vec![Series {
            label: "mean R²",
            color: BLUE,
            x: &x,
            y: &mean,
        }],
        band: Some(Band {
            x: &x,
            lower: &lower,
            upper: &upper,
            color: BLUE,
        }),
        // Low-SNR scores are unbounded below; keep the informative range visible.
        y_clamp: Some((-2.0, 1.0)),
        markers: true,
    }
    .render();
    out.write("plot", "sweep.svg", svg.as_bytes())?;

    let report = SweepReport {
        master_seed: result.master_seed,
        runs_per_point: sweep_config.runs_per_point,
        grid_points: result.grid.len(),
        total_failures: result.grid.iter().map(|p| p.failures).sum(),
        timing_seconds: elapsed(start, common.timing),
    };
    out.json("report", "report.json", &report)?;
    out.finish()?;
    Ok(())
}
