//! Fixtures shared by the benchmarks.

use ndarray::Array2;
use pda_core::flow_env::{perturbed_inflow_field, FlowEnv, FlowField, LatticeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn compact_env() -> FlowEnv {
    FlowEnv::new(LatticeConfig::compact()).expect("compact config is valid")
}

/// The perturbed inflow advanced by `steps` uncontrolled control steps.
pub fn developed_field(env: &FlowEnv, steps: usize) -> FlowField {
    let init = perturbed_inflow_field(env);
    let mut state = env.reset(Some(&init)).expect("matching grid");
    for _ in 0..steps {
        env.step(&mut state, [0.0; 2]).expect("stable flow");
    }
    state.field
}

pub fn uniform_batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0))
}
