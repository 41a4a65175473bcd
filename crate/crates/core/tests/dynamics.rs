use attrbounds::bounds::{Nonlinearity, ProblemParams};
use attrbounds::dynamics::{
    reorthonormalize, volume_growth_experiment, BundleInit, FieldState, Flow, GrowthConfig, TangentBundle,
};
use attrbounds::geometry::{discretize, DomainSpec};

#[test]
fn heat_exponents_from_exact_modes() {
    let dom = discretize(&DomainSpec::unit_square(1.0 / 16.0)).unwrap();
    let p = ProblemParams::new(2, 0.5, Nonlinearity::zero());
    let mut cfg = GrowthConfig::new(3, 0.05, 1e-4);
    cfg.burn_in = Some(0.0);
    cfg.bundle = BundleInit::Modes;
    let run = volume_growth_experiment(&p, &dom, &cfg).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    let want = [2.0, 5.0, 5.0].map(|k| -0.5 * pi2 * k);
    for (e, w) in run.summary.exponents.iter().zip(want) {
        assert!((e / w - 1.0).abs() < 0.02, "{e} {w}");
    }
}

#[test]
fn tangent_flow_contracts_volume_for_large_diffusion() {
    let dom = discretize(&DomainSpec::unit_square(1.0 / 16.0)).unwrap();
    let p = ProblemParams::new(2, 5.0, Nonlinearity::allen_cahn());
    let flow = Flow::new(&dom, &p, 1e-3).unwrap();
    let base = FieldState::new(vec![0.0; dom.len()]);
    let mut b = TangentBundle::new(vec![vec![1.0; dom.len()], (0..dom.len()).map(|i| i as f64).collect()]);
    reorthonormalize(&mut b, flow.weight()).unwrap();
    b.reset_accumulators();
    for _ in 0..20 {
        flow.tangent_step(&mut b, &base).unwrap();
        reorthonormalize(&mut b, flow.weight()).unwrap();
    }
    assert!(b.log_volume < 0.0);
    assert!(flow.measured_trace(&b, &base).measured < 0.0);
}

#[test]
fn summary_json_echoes_inputs() {
    let dom = discretize(&DomainSpec::unit_square(1.0 / 8.0)).unwrap();
    let p = ProblemParams::new(2, 0.3, Nonlinearity::allen_cahn());
    let mut cfg = GrowthConfig::new(2, 0.1, 0.01);
    cfg.burn_in = Some(0.1);
    let run = volume_growth_experiment(&p, &dom, &cfg).unwrap();
    let v: serde_json::Value = serde_json::from_str(&run.summary_json().unwrap()).unwrap();
    assert_eq!(v["m"], 2);
    assert_eq!(v["dt"], 0.01);
    assert_eq!(v["initial"]["kind"], "zero");
}
