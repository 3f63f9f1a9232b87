use proptest::prelude::*;

use cs2::whitening::DEFAULT_EIGEN_FLOOR;
use cs2::{
    deconvolve, estimate_correlation, extract_filter, mean_power, simulate_measurement, whitening_transform,
    CorrelationMatrix, DeconvFilter, PoleModel, SignalBuffer, SimConfig,
};

fn toeplitz_from(seq: &[f64], n: usize) -> CorrelationMatrix {
    let len = seq.len();
    let lags = (0..n).map(|t| seq[t..].iter().zip(seq).map(|(a, b)| a * b).sum::<f64>() / len as f64).collect();
    CorrelationMatrix::from_lags(lags, len).unwrap()
}

fn filter_for(x: &SignalBuffer, n: usize) -> DeconvFilter {
    let r = estimate_correlation(x, n).unwrap();
    extract_filter(&whitening_transform(&r, DEFAULT_EIGEN_FLOOR).unwrap()).unwrap()
}

fn spd_case() -> impl Strategy<Value = (Vec<f64>, usize)> {
    prop::sample::select(vec![5usize, 11, 41])
        .prop_flat_map(|n| (prop::collection::vec(-1.0..1.0f64, 4 * n..8 * n), Just(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transform_whitens((seq, n) in spd_case()) {
        prop_assume!(seq.iter().any(|v| v.abs() > 1e-3));
        let r = toeplitz_from(&seq, n);
        let g = whitening_transform(&r, DEFAULT_EIGEN_FLOOR).unwrap();
        let m = g.matrix() * r.to_matrix() * g.matrix().transpose();
        let r0 = r.lags()[0];
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { r0 } else { 0.0 };
                prop_assert!((m[(i, j)] - want).abs() < 1e-8 * r0, "({}, {}) {}", i, j, m[(i, j)]);
            }
        }
        prop_assert!((g.matrix() - g.matrix().transpose()).amax() <= 1e-12 * g.matrix().amax());
    }

    #[test]
    fn filter_is_zero_phase((seq, n) in spd_case()) {
        prop_assume!(seq.iter().any(|v| v.abs() > 1e-3));
        let g = extract_filter(&whitening_transform(&toeplitz_from(&seq, n), DEFAULT_EIGEN_FLOOR).unwrap()).unwrap();
        prop_assert!(g.asymmetry() < 1e-6);
        let c = g.center_index() as f64;
        let peak = g.coefficients().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for k in 0..64 {
            let w = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let im: f64 = g.coefficients().iter().enumerate().map(|(i, v)| v * (w * (i as f64 - c)).sin()).sum();
            prop_assert!(im.abs() < 1e-6 * peak * g.len() as f64);
        }
    }

    #[test]
    fn deconvolution_is_scale_equivariant(seed in 0u64..1000, alpha in prop::sample::select(vec![-7.5, 1e-3, 0.5, 3.0, 1e4])) {
        let mut cfg = SimConfig::reference_scenario(seed);
        cfg.n_samples = 4000;
        let x = simulate_measurement(&cfg).unwrap().x;
        let scaled = x.map(|v| alpha * v).unwrap();
        let base = deconvolve(&filter_for(&x, 21), &x).unwrap();
        let y = deconvolve(&filter_for(&scaled, 21), &scaled).unwrap();
        let peak = base.samples().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in y.samples().iter().zip(base.samples()) {
            prop_assert!((a - alpha * b).abs() <= 1e-10 * alpha.abs() * peak, "{} vs {}", a, alpha * b);
        }
    }
}

#[test]
fn deconvolution_keeps_energy() {
    for seed in 0..10 {
        let x = simulate_measurement(&SimConfig::reference_scenario(seed)).unwrap().x;
        let y = deconvolve(&filter_for(&x, 41), &x).unwrap();
        let ratio = mean_power(&y) / mean_power(&x);
        assert!((ratio - 1.0).abs() < 0.02, "seed {seed}: {ratio}");
    }
}

#[test]
fn white_input_is_scaled_identity() {
    let mut cfg = SimConfig::reference_scenario(5);
    cfg.poles = PoleModel { radius: 1e-9, ..PoleModel::default() };
    let sim = simulate_measurement(&cfg).unwrap();
    assert_eq!(sim.tf.coefficients().len(), 1);
    let x = sim.x;
    let y = deconvolve(&filter_for(&x, 41), &x).unwrap();
    let (a, b) = (x.samples(), y.samples());
    let dot: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
    let rho = dot / (mean_power(&x) * mean_power(&y)).sqrt() / a.len() as f64;
    assert!(rho > 0.99, "{rho}");
}
