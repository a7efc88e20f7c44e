use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::LatticeConfig;
use super::lattice::{FlowField, Lattice, RHO0};
use super::probes::{sample_pressure, ProbeLayout};

pub type Action = [f64; 2];

/// Current jet amplitudes (wall-normal lattice velocity, top then bottom).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JetState {
    pub q: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub field: FlowField,
    pub jets: JetState,
    pub prev_action: Action,
    pub step_index: u64,
}

/// Probe readings at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub o_fm: Vec<f64>,
    pub o_pm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub o_fm: Vec<f64>,
    pub o_pm: Vec<f64>,
    /// Negative drag coefficient averaged over the control step.
    pub reward: f64,
    pub drag_coeff: f64,
    pub lift_coeff: f64,
}

impl StepOutput {
    pub fn observation(&self) -> Observation {
        Observation {
            o_fm: self.o_fm.clone(),
            o_pm: self.o_pm.clone(),
        }
    }
}

/// Drag and lift coefficients from the obstacle force of the last substep.
pub fn compute_drag_lift(field: &FlowField, cfg: &LatticeConfig) -> (f64, f64) {
    let [fx, fy] = field.obstacle_force();
    let scale = 2.0 / (RHO0 * cfg.inflow_speed * cfg.inflow_speed * cfg.obstacle_side as f64);
    (fx * scale, fy * scale)
}

/// The actuated bluff-body environment. Cheap to clone; the compiled lattice
/// is shared.
#[derive(Debug, Clone)]
pub struct FlowEnv {
    cfg: LatticeConfig,
    lattice: Arc<Lattice>,
    probes: ProbeLayout,
}

impl FlowEnv {
    pub fn new(cfg: LatticeConfig) -> Result<Self> {
        let probes = ProbeLayout::standard(&cfg);
        Self::with_probes(cfg, probes)
    }

    pub fn with_probes(cfg: LatticeConfig, probes: ProbeLayout) -> Result<Self> {
        let lattice = Lattice::channel(&cfg)?;
        probes.validate(&cfg)?;
        Ok(Self {
            cfg,
            lattice: Arc::new(lattice),
            probes,
        })
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn probes(&self) -> &ProbeLayout {
        &self.probes
    }

    pub fn fm_dim(&self) -> usize {
        self.probes.wake.len()
    }

    pub fn pm_dim(&self) -> usize {
        self.probes.base.len()
    }

    pub fn action_bound(&self) -> f64 {
        self.cfg.action_bound
    }

    /// Fresh state from `snapshot`, or from rest when absent.
    pub fn reset(&self, snapshot: Option<&FlowField>) -> Result<EnvState> {
        let field = match snapshot {
            Some(s) => {
                if s.nx() != self.cfg.nx {
                    return Err(Error::shape("snapshot nx", self.cfg.nx, s.nx()));
                }
                if s.ny() != self.cfg.ny {
                    return Err(Error::shape("snapshot ny", self.cfg.ny, s.ny()));
                }
                s.clone()
            }
            None => self.lattice.rest_field(),
        };
        Ok(EnvState {
            field,
            jets: JetState::default(),
            prev_action: [0.0; 2],
            step_index: 0,
        })
    }

    pub fn observe(&self, state: &EnvState) -> Result<Observation> {
        Ok(Observation {
            o_fm: sample_pressure(&state.field, &self.probes.wake)?,
            o_pm: sample_pressure(&state.field, &self.probes.base)?,
        })
    }

    /// Advances one control step: jets are incremented by `action` (clipped
    /// to the actuator limit) and the lattice runs `substeps` updates.
    ///
    /// With zero net mass flux the increments applied are
    /// `((a1 - a2) / 2, (a2 - a1) / 2)`.
    pub fn step(&self, state: &mut EnvState, action: Action) -> Result<StepOutput> {
        let bound = self.cfg.action_bound;
        let mut a = action;
        for v in a.iter_mut() {
            if !v.is_finite() {
                return Err(Error::DimensionMismatch(format!(
                    "non-finite action {action:?}"
                )));
            }
            if v.abs() > bound {
                log::warn!("action {action:?} exceeds bound {bound}; clipping");
                *v = v.clamp(-bound, bound);
            }
        }
        let qmax = self.cfg.jet_max;
        let increment = if self.cfg.zero_net_mass_flux {
            let half = 0.5 * (a[0] - a[1]);
            [half, -half]
        } else {
            a
        };
        for (q, da) in state.jets.q.iter_mut().zip(increment) {
            *q = (*q + da).clamp(-qmax, qmax);
        }
        let (mut cd_sum, mut cl_sum) = (0.0, 0.0);
        for _ in 0..self.cfg.substeps {
            self.lattice.substep(&mut state.field, state.jets.q)?;
            let (cd, cl) = compute_drag_lift(&state.field, &self.cfg);
            cd_sum += cd;
            cl_sum += cl;
        }
        let n = self.cfg.substeps as f64;
        let (drag, lift) = (cd_sum / n, cl_sum / n);
        state.prev_action = a;
        state.step_index += 1;
        let obs = self.observe(state)?;
        Ok(StepOutput {
            o_fm: obs.o_fm,
            o_pm: obs.o_pm,
            reward: -drag,
            drag_coeff: drag,
            lift_coeff: lift,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> FlowEnv {
        FlowEnv::new(LatticeConfig::compact()).unwrap()
    }

    #[test]
    fn rest_field_has_zero_coefficients() {
        let env = env();
        let state = env.reset(None).unwrap();
        assert_eq!(compute_drag_lift(&state.field, env.config()), (0.0, 0.0));
    }

    #[test]
    fn increments_undo_exactly() {
        let env = env();
        let mut state = env.reset(None).unwrap();
        let a = [0.0073, -0.0041];
        env.step(&mut state, a).unwrap();
        let half = 0.5 * (a[0] - a[1]);
        assert_eq!(state.jets.q, [half, -half]);
        env.step(&mut state, [-a[0], -a[1]]).unwrap();
        assert_eq!(state.jets.q, [0.0, 0.0]);
        assert_eq!(state.step_index, 2);
        assert_eq!(state.prev_action, [-a[0], -a[1]]);
    }

    #[test]
    fn independent_jets_take_raw_increments() {
        let mut cfg = LatticeConfig::compact();
        cfg.zero_net_mass_flux = false;
        let env = FlowEnv::new(cfg).unwrap();
        let mut state = env.reset(None).unwrap();
        env.step(&mut state, [0.004, 0.001]).unwrap();
        assert_eq!(state.jets.q, [0.004, 0.001]);
    }

    #[test]
    fn jets_stay_within_limit() {
        let env = env();
        let mut state = env.reset(None).unwrap();
        let b = env.action_bound();
        for k in 0..12 {
            let s = if k < 9 { 1.0 } else { -1.0 };
            env.step(&mut state, [s * b, -s * b * 3.0]).unwrap();
            assert!(state.jets.q.iter().all(|q| q.abs() <= env.config().jet_max));
            assert!(state.prev_action.iter().all(|a| a.abs() <= b));
        }
    }

    #[test]
    fn mismatched_snapshot_is_rejected() {
        let env = env();
        let mut other = LatticeConfig::compact();
        other.nx = 160;
        let field = Lattice::channel(&other).unwrap().rest_field();
        assert!(matches!(
            env.reset(Some(&field)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn reset_is_deterministic() {
        let env = env();
        let mut state = env.reset(None).unwrap();
        for _ in 0..3 {
            env.step(&mut state, [0.002, 0.001]).unwrap();
        }
        let a = env.reset(Some(&state.field)).unwrap();
        let b = env.reset(Some(&state.field)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.jets.q, [0.0; 2]);
        assert_eq!(a.step_index, 0);
    }
}
