use pda_core::flow_env::{
    compute_drag_lift, crossing_frequency, make_baseline_snapshot, perturbed_inflow_field,
    FlowEnv, FlowField, LatticeConfig,
};
use pda_core::Error;

fn env() -> FlowEnv {
    FlowEnv::new(LatticeConfig::compact()).unwrap()
}

/// A field with an asymmetric wake, well past the start-up transient.
fn developed(env: &FlowEnv, steps: usize) -> FlowField {
    let mut state = env.reset(Some(&perturbed_inflow_field(env))).unwrap();
    for _ in 0..steps {
        env.step(&mut state, [0.0; 2]).unwrap();
    }
    state.field
}

#[test]
fn mirrored_flow_negates_lift_and_keeps_drag() {
    let env = env();
    let field = developed(&env, 300);
    let mirror = field.mirrored();
    let (cd, cl) = compute_drag_lift(&field, env.config());
    let (mcd, mcl) = compute_drag_lift(&mirror, env.config());
    assert!(cl.abs() > 1e-3, "wake still symmetric, lift {cl}");
    assert!((cd - mcd).abs() <= 1e-9);
    assert!((cl + mcl).abs() <= 1e-9);

    // Stepping commutes with the reflection once the jets swap roles.
    let mut a = env.reset(Some(&field)).unwrap();
    let mut b = env.reset(Some(&mirror)).unwrap();
    let actions = [[0.006, -0.002], [-0.004, 0.009], [0.0, 0.003]];
    for act in actions {
        let oa = env.step(&mut a, act).unwrap();
        let ob = env.step(&mut b, [act[1], act[0]]).unwrap();
        assert!((oa.drag_coeff - ob.drag_coeff).abs() <= 1e-9);
        assert!((oa.lift_coeff + ob.lift_coeff).abs() <= 1e-9);
    }
    let pa = a.field.mirrored().pressure_grid();
    let pb = b.field.pressure_grid();
    let worst = pa
        .iter()
        .zip(&pb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-9, "pressure mismatch {worst}");
}

#[test]
fn step_is_bit_deterministic() {
    let env = env();
    let field = developed(&env, 40);
    let run = || {
        let mut s = env.reset(Some(&field)).unwrap();
        let outs: Vec<_> = [[0.003, -0.001], [0.01, 0.01], [-0.02, 0.0]]
            .into_iter()
            .map(|a| env.step(&mut s, a).unwrap())
            .collect();
        (s, outs)
    };
    let (sa, oa) = run();
    let (sb, ob) = run();
    assert_eq!(sa, sb);
    assert_eq!(oa, ob);
}

#[test]
fn viscous_regime_does_not_shed() {
    let mut cfg = LatticeConfig::compact();
    cfg.reynolds = 1.0;
    let env = FlowEnv::new(cfg).unwrap();
    match make_baseline_snapshot(&env, 400) {
        Err(Error::NoSheddingDetected { .. }) => {}
        other => panic!("expected no shedding, got {:?}", other.map(|(_, s)| s.lift_amplitude)),
    }
}

/// Shedding frequency of the uncontrolled compact channel, frozen from a
/// 2000-step warm-up.
const STROUHAL: f64 = 0.1784;
const STROUHAL_TOL: f64 = 0.02;
const BASELINE_DRAG: f64 = 1.908;

#[test]
fn baseline_is_periodic_and_self_consistent() {
    let env = env();
    let (field, stats) = make_baseline_snapshot(&env, 2000).unwrap();
    assert!(stats.drag_mean > 0.0);
    assert!(
        (stats.drag_mean - BASELINE_DRAG).abs() / BASELINE_DRAG < 0.01,
        "drag {}",
        stats.drag_mean
    );
    assert!(
        (stats.strouhal - STROUHAL).abs() / STROUHAL < STROUHAL_TOL,
        "St {}",
        stats.strouhal
    );
    assert!(stats.lift_mean.abs() < 0.1 * stats.lift_amplitude);

    let mut state = env.reset(Some(&field)).unwrap();
    let mut rewards = Vec::new();
    let mut probe = Vec::new();
    for _ in 0..400 {
        let out = env.step(&mut state, [0.0; 2]).unwrap();
        rewards.push(out.reward);
        probe.push(out.o_pm[0]);
    }
    let last100 = rewards[300..].iter().sum::<f64>() / 100.0;
    assert!(
        ((-last100 - stats.drag_mean) / stats.drag_mean).abs() < 0.01,
        "replay {} vs warm-up {}",
        -last100,
        stats.drag_mean
    );
    let f_probe = crossing_frequency(&probe).unwrap();
    assert!(
        ((f_probe - stats.lift_frequency) / stats.lift_frequency).abs() < 0.05,
        "probe {f_probe} vs lift {}",
        stats.lift_frequency
    );
}
