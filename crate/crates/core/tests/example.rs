use cs2::{pipeline, r_squared, simulate_measurement, PipelineParams, SimConfig};

#[test]
fn crate_level_example() {
    let sim = simulate_measurement(&SimConfig::reference_scenario(7)).unwrap();
    let params = PipelineParams { sigma_w2: Some(sim.sigma_w2), ..PipelineParams::default() };
    let out = pipeline(&sim.x, &params).unwrap();
    let r2 = r_squared(&sim.q_true, &out.envelope.q_hat).unwrap();
    assert!(r2.is_finite());
}
