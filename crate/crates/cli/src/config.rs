//! Flat JSON configuration shared by every command.
//!
//! Every key is optional; unknown keys are rejected so that a typo cannot
//! silently fall back to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use cs2::seed::{self, Purpose};
use cs2::signals::DEFAULT_AMPLITUDE_RANGE;
use cs2::{
    EnvelopeComponent, EnvelopeSpec, NoiseLevel, PhaseSource, PipelineParams, PoleModel, PolePlacement,
    Randomization, SimConfig, SweepConfig, Window,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowName {
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementName {
    Spaced,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseName {
    PerFrame,
    SingleFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomizationName {
    PerRun,
    PerPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    // Simulation.
    pub n_samples: usize,
    pub sample_rate: f64,
    /// Number of random envelope components, ignored when `envelope` is set.
    pub components: usize,
    /// Explicit `[amplitude, frequency, phase]` triples.
    pub envelope: Option<Vec<[f64; 3]>>,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub allow_negative: bool,
    pub pole_count: usize,
    pub pole_radius: f64,
    pub pole_placement: PlacementName,
    pub tf_truncation_energy: f64,
    pub unit_energy_tf: bool,
    pub snr_db: f64,
    /// Overrides `snr_db` with an explicit noise variance.
    pub noise_variance: Option<f64>,
    pub carrier_variance: f64,
    pub seed: u64,

    // Pipeline.
    pub filter_order: usize,
    pub frame_length: usize,
    pub overlap_fraction: f64,
    pub window: WindowName,
    pub eigen_floor: f64,
    pub sigma_w2: Option<f64>,
    pub gating: bool,
    pub gate_spread: f64,
    pub phase_source: PhaseName,
    pub min_length_factor: usize,

    // Sweep.
    pub snr_grid: Vec<f64>,
    pub runs_per_point: usize,
    pub randomization: RandomizationName,
    pub k_min: usize,
    pub k_max: usize,
    pub poles_min: usize,
    pub poles_max: usize,
}

impl Default for Config {
    fn default() -> Self {
        let pipeline = PipelineParams::default();
        let poles = PoleModel::default();
        Self {
            n_samples: 24_000,
            sample_rate: 24_000.0,
            components: 6,
            envelope: None,
            amplitude_min: DEFAULT_AMPLITUDE_RANGE.0,
            amplitude_max: DEFAULT_AMPLITUDE_RANGE.1,
            allow_negative: false,
            pole_count: poles.count,
            pole_radius: poles.radius,
            pole_placement: PlacementName::Spaced,
            tf_truncation_energy: poles.truncation_energy,
            unit_energy_tf: true,
            snr_db: -5.0,
            noise_variance: None,
            carrier_variance: 1.0,
            seed: 0,
            filter_order: pipeline.filter_order,
            frame_length: pipeline.frame_length,
            overlap_fraction: pipeline.overlap_fraction,
            window: WindowName::Hann,
            eigen_floor: pipeline.eigen_floor,
            sigma_w2: None,
            gating: pipeline.gating,
            gate_spread: pipeline.gate_spread,
            phase_source: PhaseName::PerFrame,
            min_length_factor: pipeline.min_length_factor,
            snr_grid: vec![-20.0, -10.0, -5.0, 0.0, 10.0, 20.0],
            runs_per_point: 100,
            randomization: RandomizationName::PerRun,
            k_min: 5,
            k_max: 20,
            poles_min: 5,
            poles_max: 20,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn envelope_spec(&self) -> Result<EnvelopeSpec, cs2::Error> {
        match &self.envelope {
            Some(triples) => {
                let components = triples
                    .iter()
                    .map(|&[amplitude, frequency, phase]| EnvelopeComponent {
                        amplitude,
                        frequency,
                        phase,
                    })
                    .collect();
                if self.allow_negative {
                    EnvelopeSpec::allowing_negative(components)
                } else {
                    EnvelopeSpec::new(components)
                }
            }
            None => {
                let mut rng = seed::stream(self.seed, Purpose::Envelope);
                EnvelopeSpec::random(self.components, (self.amplitude_min, self.amplitude_max), &mut rng)
            }
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig, cs2::Error> {
        Ok(SimConfig {
            n_samples: self.n_samples,
            sample_rate: self.sample_rate,
            envelope: self.envelope_spec()?,
            poles: PoleModel {
                count: self.pole_count,
                radius: self.pole_radius,
                truncation_energy: self.tf_truncation_energy,
                placement: match self.pole_placement {
                    PlacementName::Spaced => PolePlacement::Spaced,
                    PlacementName::Random => PolePlacement::Random,
                },
            },
            unit_energy_tf: self.unit_energy_tf,
            noise: match self.noise_variance {
                Some(v) => NoiseLevel::Variance(v),
                None => NoiseLevel::SnrDb(self.snr_db),
            },
            carrier_variance: self.carrier_variance,
            rng_seed: self.seed,
        })
    }

    pub fn pipeline_params(&self) -> PipelineParams {
        PipelineParams {
            filter_order: self.filter_order,
            frame_length: self.frame_length,
            overlap_fraction: self.overlap_fraction,
            window: match self.window {
                WindowName::Hann => Window::Hann,
                WindowName::Rectangular => Window::Rectangular,
            },
            eigen_floor: self.eigen_floor,
            sigma_w2: self.sigma_w2,
            gating: self.gating,
            gate_spread: self.gate_spread,
            phase_source: match self.phase_source {
                PhaseName::PerFrame => PhaseSource::PerFrame,
                PhaseName::SingleFrame => PhaseSource::SingleFrame,
            },
            min_length_factor: self.min_length_factor,
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, cs2::Error> {
        Ok(SweepConfig {
            base: self.sim_config()?,
            snr_grid: self.snr_grid.clone(),
            runs_per_point: self.runs_per_point,
            params: self.pipeline_params(),
            master_seed: self.seed,
            randomization: match self.randomization {
                RandomizationName::PerRun => Randomization::PerRun,
                RandomizationName::PerPoint => Randomization::PerPoint,
            },
            k_range: (self.k_min, self.k_max),
            pole_range: (self.poles_min, self.poles_max),
            amplitude_range: (self.amplitude_min, self.amplitude_max),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(Config::parse("{}").unwrap(), Config::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Config::parse(r#"{"snr_bd": 3}"#).unwrap_err();
        assert!(err.contains("snr_bd"), "{err}");
    }

    #[test]
    fn explicit_envelope() {
        let c = Config::parse(r#"{"envelope": [[0.5, 0.1, 0.0], [1.0, -0.2, 1.0]], "window": "rectangular"}"#).unwrap();
        assert_eq!(c.envelope_spec().unwrap().components().len(), 2);
        assert_eq!(c.pipeline_params().window, Window::Rectangular);
        let c = Config::parse(r#"{"envelope": [[1.5, 0.1, 0.0]]}"#).unwrap();
        assert!(c.envelope_spec().is_err());
    }

    #[test]
    fn defaults_match_reference_scenario() {
        let sim = Config::default().sim_config().unwrap();
        assert_eq!(sim, SimConfig::reference_scenario(0));
    }
}
