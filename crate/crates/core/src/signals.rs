//! Sampled signals, the CS2 envelope/transfer-function model and the
//! measurement simulator.
//!
//! A measurement is `x = h * (q·r + w)`: a non-negative periodic envelope
//! `q` modulating a white Gaussian carrier `r`, plus white noise `w`, all
//! passed through an FIR transfer function `h`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::seed::{self, Purpose};

/// Uniformly sampled real-valued time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBuffer {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl SignalBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidSampleRate(sample_rate));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Index-based signal with unit sample rate.
    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, 1.0)
    }

    pub fn with_sample_rate(self, sample_rate: f64) -> Result<Self> {
        Self::new(self.samples, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false: a buffer holds at least one sample.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Elementwise map producing a buffer with the same sample rate.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.samples.iter().map(|&v| f(v)).collect(), self.sample_rate)
    }
}

/// One cyclic component `1 + B·cos(ω t + φ)` of an envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeComponent {
    pub amplitude: f64,
    /// Radians per sample.
    pub frequency: f64,
    pub phase: f64,
}

/// Envelope `q(t) = Σ_k (1 + B_k cos(ω_k t + φ_k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSpec {
    components: Vec<EnvelopeComponent>,
    allow_negative: bool,
}

impl EnvelopeSpec {
    pub fn new(components: Vec<EnvelopeComponent>) -> Result<Self> {
        Self::build(components, false)
    }

    /// Accepts modulation depths above one, which can make `q` negative.
    pub fn allowing_negative(components: Vec<EnvelopeComponent>) -> Result<Self> {
        Self::build(components, true)
    }

    fn build(components: Vec<EnvelopeComponent>, allow_negative: bool) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyEnvelope);
        }
        for (index, c) in components.iter().enumerate() {
            let bad = |reason: &str| Error::InvalidComponent {
                index,
                reason: reason.to_string(),
            };
            if !(c.amplitude.is_finite() && c.amplitude >= 0.0) {
                return Err(bad("amplitude must be finite and non-negative"));
            }
            if c.amplitude > 1.0 && !allow_negative {
                return Err(bad("amplitude above 1 makes the envelope negative"));
            }
            if !(c.frequency > -PI && c.frequency < PI) {
                return Err(bad("frequency must lie in (-pi, pi)"));
            }
            if !(c.phase > -PI && c.phase < PI) {
                return Err(bad("phase must lie in (-pi, pi)"));
            }
        }
        Ok(Self {
            components,
            allow_negative,
        })
    }

    /// Draws `k` components: amplitudes uniform on `amplitude_range`,
    /// frequencies and phases uniform on (-pi, pi).
    pub fn random<R: Rng + ?Sized>(k: usize, amplitude_range: (f64, f64), rng: &mut R) -> Result<Self> {
        let (lo, hi) = amplitude_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return Err(Error::param("amplitude_range", format!("[{lo}, {hi}] is not a valid range")));
        }
        let components = (0..k)
            .map(|_| EnvelopeComponent {
                amplitude: lo + (hi - lo) * rng.random::<f64>(),
                frequency: open_angle(rng),
                phase: open_angle(rng),
            })
            .collect();
        Self::build(components, hi > 1.0)
    }

    pub fn components(&self) -> &[EnvelopeComponent] {
        &self.components
    }

    pub fn allows_negative(&self) -> bool {
        self.allow_negative
    }
}

/// Uniform draw on the open interval (-pi, pi).
fn open_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let v = PI * (2.0 * rng.random::<f64>() - 1.0);
        if v > -PI {
            return v;
        }
    }
}

pub fn generate_envelope(spec: &EnvelopeSpec, n_samples: usize) -> Result<SignalBuffer> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let q = (0..n_samples)
        .map(|t| {
            let t = t as f64;
            spec.components
                .iter()
                .map(|c| 1.0 + c.amplitude * (c.frequency * t + c.phase).cos())
                .sum()
        })
        .collect();
    SignalBuffer::from_samples(q)
}

/// FIR transfer function `h`, optionally remembering the poles it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    coefficients: Vec<f64>,
    poles: Option<Vec<Complex64>>,
}

impl TransferFunction {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidTransferFunction("no coefficients".into()));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidTransferFunction("non-finite coefficient".into()));
        }
        if coefficients.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidTransferFunction("all coefficients are zero".into()));
        }
        Ok(Self {
            coefficients,
            poles: None,
        })
    }

    pub fn with_poles(mut self, poles: Vec<Complex64>) -> Result<Self> {
        if let Some(p) = poles.iter().find(|p| !(p.norm() < 1.0)) {
            return Err(Error::InvalidTransferFunction(format!(
                "pole {p} lies outside the open unit disk"
            )));
        }
        self.poles = Some(poles);
        Ok(self)
    }

    /// The identity filter `[1]`.
    pub fn identity() -> Self {
        Self {
            coefficients: vec![1.0],
            poles: None,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn poles(&self) -> Option<&[Complex64]> {
        self.poles.as_deref()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `Σ h_i²`
    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// Appends one zero when the length is even.
    pub fn padded_to_odd(mut self) -> Self {
        if self.coefficients.len().is_multiple_of(2) {
            self.coefficients.push(0.0);
        }
        self
    }

    /// Rescales to `Σ h_i² = 1`.
    pub fn unit_energy(mut self) -> Self {
        let norm = self.energy().sqrt();
        self.coefficients.iter_mut().for_each(|c| *c /= norm);
        self
    }
}

/// How the poles of a simulated transfer function are placed on their circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolePlacement {
    /// Equally spaced angles, conjugate symmetric; one real pole at `+radius`
    /// when the count is odd.
    #[default]
    Spaced,
    /// Conjugate pairs at uniform random angles in (0, pi); one real pole of
    /// random sign when the count is odd.
    Random,
}

/// Parameters of the all-pole transfer function model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleModel {
    pub count: usize,
    pub radius: f64,
    /// Fraction of impulse-response energy kept by truncation, in (0, 1].
    pub truncation_energy: f64,
    pub placement: PolePlacement,
}

impl Default for PoleModel {
    fn default() -> Self {
        Self {
            count: 8,
            radius: 0.9,
            truncation_energy: 0.9999,
            placement: PolePlacement::Spaced,
        }
    }
}

const MAX_IMPULSE_LEN: usize = 1 << 22;

/// Realizes the all-pole filter `1 / Π(1 - p_k z⁻¹)` as a truncated FIR.
///
/// The impulse response is cut at the shortest length holding at least
/// `truncation_energy` of its total energy, then padded to odd length.
pub fn generate_transfer_function<R: Rng + ?Sized>(model: &PoleModel, rng: &mut R) -> Result<TransferFunction> {
    let PoleModel {
        count,
        radius,
        truncation_energy,
        placement,
    } = *model;
    if count == 0 {
        return Err(Error::param("pole_count", "must be at least 1"));
    }
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::param(
            "pole_radius",
            format!("{radius} is outside (0, 1); the transfer function must be stable and invertible"),
        ));
    }
    if !(truncation_energy > 0.0 && truncation_energy <= 1.0) {
        return Err(Error::param("tf_truncation_energy", "must lie in (0, 1]"));
    }

    let poles = place_poles(count, radius, placement, rng);
    let denominator = real_polynomial(&poles);
    let response = impulse_response(&denominator)?;

    let total: f64 = response.iter().map(|v| v * v).sum();
    let target = truncation_energy * total;
    let mut acc = 0.0;
    let mut keep = response.len();
    for (i, v) in response.iter().enumerate() {
        acc += v * v;
        if acc >= target {
            keep = i + 1;
            break;
        }
    }
    let mut coefficients = response;
    coefficients.truncate(keep);
    TransferFunction::new(coefficients)?
        .with_poles(poles)
        .map(TransferFunction::padded_to_odd)
}

fn place_poles<R: Rng + ?Sized>(count: usize, radius: f64, placement: PolePlacement, rng: &mut R) -> Vec<Complex64> {
    match placement {
        PolePlacement::Spaced => {
            let offset = if count.is_multiple_of(2) { PI / count as f64 } else { 0.0 };
            (0..count)
                .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / count as f64 + offset))
                .collect()
        }
        PolePlacement::Random => {
            let mut poles = Vec::with_capacity(count);
            for _ in 0..count / 2 {
                let angle = PI * rng.random::<f64>();
                let p = Complex64::from_polar(radius, angle);
                poles.push(p);
                poles.push(p.conj());
            }
            if count % 2 == 1 {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                poles.push(Complex64::new(sign * radius, 0.0));
            }
            poles
        }
    }
}

/// Coefficients `a_0..a_P` of `Π(1 - p_k z⁻¹)`; imaginary parts cancel for
/// conjugate-symmetric pole sets.
fn real_polynomial(poles: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &p in poles {
        let mut next = coeffs.clone();
        next.push(Complex64::new(0.0, 0.0));
        for k in 1..next.len() {
            next[k] -= p * coeffs[k - 1];
        }
        coeffs = next;
    }
    coeffs.into_iter().map(|c| c.re).collect()
}

fn impulse_response(denominator: &[f64]) -> Result<Vec<f64>> {
    let order = denominator.len() - 1;
    let span = order.max(1);
    let mut h: Vec<f64> = Vec::new();
    let mut energy = 0.0;
    for i in 0..MAX_IMPULSE_LEN {
        let mut v = if i == 0 { 1.0 } else { 0.0 };
        for k in 1..=order.min(i) {
            v -= denominator[k] * h[i - k];
        }
        h.push(v);
        energy += v * v;
        // The recursion state is the last `order` outputs; once they carry
        // no energy the response has ended.
        if i >= span {
            let tail: f64 = h[i + 1 - span..].iter().map(|x| x * x).sum();
            if tail <= 1e-30 * energy {
                return Ok(h);
            }
        }
    }
    Err(Error::InvalidTransferFunction(
        "impulse response did not decay; pole radius too close to 1".into(),
    ))
}

pub(crate) fn convolve_causal(exec: Execution, h: &[f64], s: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; s.len()];
    par::fill_indexed(exec, &mut out, |t| {
        let upto = h.len().min(t + 1);
        let mut acc = 0.0;
        for (i, hi) in h[..upto].iter().enumerate() {
            acc += hi * s[t - i];
        }
        acc
    });
    out
}

/// Causal convolution `Σ_i h_i s[t-i]` with zero pre-history, same length as `s`.
pub fn apply_fir(h: &TransferFunction, s: &SignalBuffer) -> SignalBuffer {
    let out = convolve_causal(Execution::default(), &h.coefficients, &s.samples);
    SignalBuffer {
        samples: out,
        sample_rate: s.sample_rate,
    }
}

/// Additive noise level: either from an SNR or an explicit variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    /// `10·log10(mean(q²) / σ_w²)` in decibels.
    SnrDb(f64),
    /// `σ_w²` directly; zero gives a noiseless measurement.
    Variance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_samples: usize,
    pub sample_rate: f64,
    pub envelope: EnvelopeSpec,
    pub poles: PoleModel,
    /// Rescale the truncated impulse response to unit energy so the
    /// measurement keeps the source power.
    pub unit_energy_tf: bool,
    pub noise: NoiseLevel,
    pub carrier_variance: f64,
    pub rng_seed: u64,
}

impl SimConfig {
    /// The reference scenario: 24 000 samples, 6 random envelope components,
    /// an 8-pole transfer function and -5 dB SNR.
    pub fn reference_scenario(rng_seed: u64) -> Self {
        let mut rng = seed::stream(rng_seed, Purpose::Envelope);
        let envelope = EnvelopeSpec::random(6, DEFAULT_AMPLITUDE_RANGE, &mut rng)
            .expect("default amplitude range is valid");
        Self {
            n_samples: 24_000,
            sample_rate: 24_000.0,
            envelope,
            poles: PoleModel::default(),
            unit_energy_tf: true,
            noise: NoiseLevel::SnrDb(-5.0),
            carrier_variance: 1.0,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::param("n_samples", "must be at least 1"));
        }
        if self.poles.count == 0 {
            return Err(Error::param("pole_count", "must be at least 1"));
        }
        if !(self.carrier_variance.is_finite() && self.carrier_variance > 0.0) {
            return Err(Error::param("carrier_variance", "must be positive"));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidSampleRate(self.sample_rate));
        }
        match self.noise {
            NoiseLevel::SnrDb(db) if !db.is_finite() => {
                Err(Error::param("snr_db", "must be finite; use an explicit noise variance for the noiseless case"))
            }
            NoiseLevel::Variance(v) if !(v.is_finite() && v >= 0.0) => Err(Error::NegativeNoiseVariance(v)),
            _ => Ok(()),
        }
    }
}

/// Default range of envelope modulation depths `B_k`.
pub const DEFAULT_AMPLITUDE_RANGE: (f64, f64) = (0.3, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// Measurement `x = h * y`.
    pub x: SignalBuffer,
    /// Source before the transfer function, `y = q·r + w`.
    pub source: SignalBuffer,
    pub q_true: SignalBuffer,
    pub tf: TransferFunction,
    pub sigma_w2: f64,
    pub rng_seed: u64,
}

/// Mean of squares.
pub(crate) fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64
}

/// Draws one measurement. Deterministic given `config.rng_seed`.
pub fn simulate_measurement(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let n = config.n_samples;
    let q = generate_envelope(&config.envelope, n)?;

    let mut tf_rng = seed::stream(config.rng_seed, Purpose::TransferFunction);
    let mut tf = generate_transfer_function(&config.poles, &mut tf_rng)?;
    if config.unit_energy_tf {
        tf = tf.unit_energy();
    }

    let sigma_w2 = match config.noise {
        NoiseLevel::SnrDb(db) => mean_square(q.samples()) / 10f64.powf(db / 10.0),
        NoiseLevel::Variance(v) => v,
    };
    let carrier_scale = config.carrier_variance.sqrt();
    let noise_scale = sigma_w2.sqrt();

    let mut carrier = seed::stream(config.rng_seed, Purpose::Carrier);
    let mut noise = seed::stream(config.rng_seed, Purpose::Noise);
    let y: Vec<f64> = q
        .samples()
        .iter()
        .map(|&qt| {
            let r: f64 = carrier.sample(StandardNormal);
            let w: f64 = noise.sample(StandardNormal);
            qt * carrier_scale * r + noise_scale * w
        })
        .collect();
    let source = SignalBuffer::new(y, config.sample_rate)?;
    let x = apply_fir(&tf, &source);

    Ok(SimOutput {
        x,
        source,
        q_true: q.with_sample_rate(config.sample_rate)?,
        tf,
        sigma_w2,
        rng_seed: config.rng_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    fn buf(v: &[f64]) -> SignalBuffer {
        SignalBuffer::from_samples(v.to_vec()).unwrap()
    }

    fn tf(v: &[f64]) -> TransferFunction {
        TransferFunction::new(v.to_vec()).unwrap()
    }

    #[test]
    fn buffer_rejects_bad_input() {
        assert_eq!(SignalBuffer::from_samples(vec![]), Err(Error::EmptySignal));
        assert_eq!(
            SignalBuffer::from_samples(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteSample { index: 1 })
        );
        assert!(matches!(SignalBuffer::new(vec![1.0], 0.0), Err(Error::InvalidSampleRate(_))));
    }

    #[test]
    fn envelope_zero_modulation_is_constant() {
        let spec = EnvelopeSpec::new(vec![EnvelopeComponent {
            amplitude: 0.0,
            frequency: 1.3,
            phase: -0.4,
        }])
        .unwrap();
        assert_eq!(generate_envelope(&spec, 4).unwrap().samples(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn envelope_full_modulation_quarter_rate() {
        let spec = EnvelopeSpec::new(vec![EnvelopeComponent {
            amplitude: 1.0,
            frequency: PI / 2.0,
            phase: 0.0,
        }])
        .unwrap();
        let q = generate_envelope(&spec, 4).unwrap();
        for (got, want) in q.samples().iter().zip([2.0, 1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn envelope_validation() {
        assert_eq!(EnvelopeSpec::new(vec![]), Err(Error::EmptyEnvelope));
        let deep = EnvelopeComponent {
            amplitude: 1.5,
            frequency: 0.1,
            phase: 0.0,
        };
        assert!(matches!(
            EnvelopeSpec::new(vec![deep]),
            Err(Error::InvalidComponent { index: 0, .. })
        ));
        let spec = EnvelopeSpec::allowing_negative(vec![deep]).unwrap();
        let q = generate_envelope(&spec, 64).unwrap();
        assert!(q.samples().iter().any(|&v| v < 0.0));
        let bad_freq = EnvelopeComponent {
            amplitude: 0.5,
            frequency: PI,
            phase: 0.0,
        };
        assert!(EnvelopeSpec::new(vec![bad_freq]).is_err());
        let shallow = EnvelopeComponent { amplitude: 0.2, ..deep };
        assert!(generate_envelope(&EnvelopeSpec::new(vec![shallow]).unwrap(), 0).is_err());
    }

    #[test]
    fn random_envelope_is_nonnegative() {
        let mut rng = stream(3, Purpose::Envelope);
        let spec = EnvelopeSpec::random(20, DEFAULT_AMPLITUDE_RANGE, &mut rng).unwrap();
        assert_eq!(spec.components().len(), 20);
        let q = generate_envelope(&spec, 5000).unwrap();
        assert!(q.samples().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn apply_fir_examples() {
        assert_eq!(apply_fir(&tf(&[1.0]), &buf(&[3.0, -1.0, 2.0])).samples(), &[3.0, -1.0, 2.0]);
        assert_eq!(
            apply_fir(&tf(&[1.0, 1.0]), &buf(&[1.0, 0.0, 0.0, 1.0])).samples(),
            &[1.0, 1.0, 0.0, 1.0]
        );
        let delay = tf(&[0.0, 0.0, 0.0, 1.0]);
        let s = buf(&[4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(apply_fir(&delay, &s).samples(), &[0.0, 0.0, 0.0, 4.0, 5.0]);
    }

    #[test]
    fn single_real_pole_matches_long_division() {
        // 1 / (1 - 0.5 z^-1) = Σ 0.5^i z^-i; total energy 4/3, so 0.9999 of it
        // needs 0.25^(m+1) <= 1e-4, i.e. seven taps.
        let model = PoleModel {
            count: 1,
            radius: 0.5,
            truncation_energy: 0.9999,
            placement: PolePlacement::Spaced,
        };
        let h = generate_transfer_function(&model, &mut stream(0, Purpose::TransferFunction)).unwrap();
        assert_eq!(h.len(), 7);
        for (i, c) in h.coefficients().iter().enumerate() {
            assert!((c - 0.5f64.powi(i as i32)).abs() < 1e-15);
        }
        assert_eq!(h.poles().unwrap().len(), 1);
    }

    #[test]
    fn transfer_function_shapes() {
        let mut rng = stream(11, Purpose::TransferFunction);
        for count in 1..=20 {
            for placement in [PolePlacement::Spaced, PolePlacement::Random] {
                let model = PoleModel {
                    count,
                    placement,
                    ..PoleModel::default()
                };
                let h = generate_transfer_function(&model, &mut rng).unwrap();
                assert_eq!(h.len() % 2, 1);
                assert!(h.coefficients().iter().all(|c| c.is_finite()));
                assert_eq!(h.coefficients()[0], 1.0);
                let poles = h.poles().unwrap();
                assert_eq!(poles.len(), count);
                assert!(poles.iter().all(|p| (p.norm() - 0.9).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn unstable_radius_rejected() {
        let model = PoleModel {
            radius: 1.0,
            ..PoleModel::default()
        };
        let err = generate_transfer_function(&model, &mut stream(0, Purpose::TransferFunction)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "pole_radius", .. }));
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = SimConfig::reference_scenario(42);
        let a = simulate_measurement(&cfg).unwrap();
        let b = simulate_measurement(&cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_measurement(&SimConfig::reference_scenario(43)).unwrap();
        assert_ne!(a.x, c.x);
        assert_eq!(a.x.len(), 24_000);
        assert_eq!(a.q_true.len(), 24_000);
        assert!((a.tf.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snr_sets_noise_variance() {
        let mut cfg = SimConfig::reference_scenario(1);
        cfg.noise = NoiseLevel::SnrDb(10.0);
        let out = simulate_measurement(&cfg).unwrap();
        let pq = mean_square(out.q_true.samples());
        assert!((10.0 * (pq / out.sigma_w2).log10() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_path() {
        let mut cfg = SimConfig::reference_scenario(5);
        cfg.noise = NoiseLevel::Variance(0.0);
        cfg.n_samples = 2000;
        let out = simulate_measurement(&cfg).unwrap();
        assert_eq!(out.sigma_w2, 0.0);
        // With w = 0, x is exactly h convolved with q·r.
        let refilt = apply_fir(&out.tf, &out.source);
        assert_eq!(refilt, out.x);

        cfg.noise = NoiseLevel::SnrDb(f64::INFINITY);
        assert!(simulate_measurement(&cfg).is_err());
        cfg.noise = NoiseLevel::Variance(-1.0);
        assert_eq!(simulate_measurement(&cfg), Err(Error::NegativeNoiseVariance(-1.0)));
    }
}
