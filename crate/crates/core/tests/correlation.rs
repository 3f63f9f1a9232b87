use proptest::prelude::*;

use cs2::{
    estimate_correlation, mean_power, phi_from_tf, simulate_measurement, CorrelationMatrix, NoiseLevel, SignalBuffer,
    SimConfig,
};

fn min_max_eigen(r: &CorrelationMatrix) -> (f64, f64) {
    let e = r.to_matrix().symmetric_eigen().eigenvalues;
    (e.min(), e.max())
}

fn normalized(lags: &[f64]) -> Vec<f64> {
    lags.iter().map(|v| v / lags[0]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimate_is_psd_toeplitz(x in prop::collection::vec(-5.0..5.0f64, 200..400), half in 0usize..10) {
        let n = 2 * half + 1;
        let r = estimate_correlation(&SignalBuffer::from_samples(x).unwrap(), n).unwrap();
        let (lo, hi) = min_max_eigen(&r);
        prop_assert!(lo >= -1e-10 * hi.abs().max(f64::MIN_POSITIVE), "{} {}", lo, hi);
        let m = r.to_matrix();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(m[(i, j)], r.lags()[i.abs_diff(j)]);
            }
        }
    }

    #[test]
    fn mean_power_is_lag_zero(x in prop::collection::vec(-5.0..5.0f64, 100..300), half in 0usize..5) {
        let x = SignalBuffer::from_samples(x).unwrap();
        let r = estimate_correlation(&x, 2 * half + 1).unwrap();
        prop_assert_eq!(mean_power(&x), r.lags()[0]);
    }
}

/// Lag-normalized correlation of a long measurement follows Φ(τ)/Φ(0).
#[test]
fn factorization_matches_phi() {
    for seed in 0..5 {
        let mut cfg = SimConfig::reference_scenario(seed);
        cfg.n_samples = 240_000;
        cfg.noise = NoiseLevel::SnrDb(0.0);
        let sim = simulate_measurement(&cfg).unwrap();
        let n = 41;
        let r = estimate_correlation(&sim.x, n).unwrap();
        let phi = phi_from_tf(&sim.tf);
        let tol = 5.0 / (cfg.n_samples as f64).sqrt();
        for (tau, est) in normalized(r.lags()).iter().enumerate() {
            let want = phi.at(tau as isize) / phi.at(0);
            assert!((est - want).abs() < tol, "seed {seed} lag {tau}: {est} vs {want}");
        }
    }
}

/// Even and odd time samples see the same normalized correlation structure.
#[test]
fn interleaved_halves_agree() {
    let sim = simulate_measurement(&SimConfig::reference_scenario(9)).unwrap();
    let x = sim.x.samples();
    let n = x.len();
    // Products x[t]x[t-τ] split by the parity of t.
    let half = |parity: usize| -> Vec<f64> {
        (0..11)
            .map(|tau| {
                (tau..n)
                    .filter(|t| t % 2 == parity)
                    .map(|t| x[t] * x[t - tau])
                    .sum::<f64>()
            })
            .collect()
    };
    let (a, b) = (normalized(&half(0)), normalized(&half(1)));
    let tol = 4.0 * (2.0 * 2.0 / n as f64).sqrt();
    for tau in 0..11 {
        assert!((a[tau] - b[tau]).abs() < tol, "lag {tau}: {} vs {}", a[tau], b[tau]);
    }
}

#[test]
fn white_noise_lags() {
    let mut cfg = SimConfig::reference_scenario(2);
    cfg.envelope = cs2::EnvelopeSpec::new(vec![cs2::EnvelopeComponent {
        amplitude: 0.0,
        frequency: 0.1,
        phase: 0.0,
    }])
    .unwrap();
    cfg.noise = NoiseLevel::Variance(0.0);
    let sim = simulate_measurement(&cfg).unwrap();
    let r = estimate_correlation(&sim.source, 11).unwrap();
    let n = 24_000f64;
    assert!((r.lags()[0] - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
    for &v in &r.lags()[1..] {
        assert!(v.abs() < 4.0 / n.sqrt());
    }
}
