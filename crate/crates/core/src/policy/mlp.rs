use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_env::Action;
use crate::nn::{DenseNet, Normalizer};

pub const MLP_HIDDEN: [usize; 3] = [512, 512, 512];

/// `a* tanh(net([z; a_prev]))` with `z` the normalized observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpPolicy {
    pub net: DenseNet,
    pub a_star: f64,
    pub obs_normalizer: Normalizer,
}

impl MlpPolicy {
    /// Glorot-initialized hidden layers; the output layer starts at zero so
    /// the untrained policy does not actuate.
    pub fn new(obs_normalizer: Normalizer, a_star: f64, hidden: &[usize], seed: u64) -> Self {
        let mut net = DenseNet::new(obs_normalizer.dim() + 2, hidden, 2, seed);
        if let Some(last) = net.layers_mut().last_mut() {
            last.weight.fill(0.0);
        }
        Self {
            net,
            a_star,
            obs_normalizer,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_normalizer.dim()
    }

    pub fn act(&self, obs: &[f64], prev_action: Action) -> Result<Action> {
        if obs.len() != self.obs_dim() {
            return Err(Error::shape(
                "policy observation",
                self.obs_dim(),
                obs.len(),
            ));
        }
        let mut input = self.obs_normalizer.apply(obs)?;
        input.extend_from_slice(&prev_action);
        let out = self.net.forward(&input)?;
        Ok([self.a_star * out[0].tanh(), self.a_star * out[1].tanh()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untrained_policy_is_inactive() {
        let p = MlpPolicy::new(Normalizer::identity(5), 0.01, &[16, 16], 3);
        assert_eq!(
            p.act(&[1.0, 2.0, -3.0, 0.5, 9.0], [0.01, -0.01]).unwrap(),
            [0.0, 0.0]
        );
    }

    #[test]
    fn output_bounded() {
        let mut p = MlpPolicy::new(Normalizer::identity(3), 0.005, &MLP_HIDDEN, 4);
        let params: Vec<f64> = p.net.params().iter().map(|v| v + 3.0).collect();
        p.net.set_params(&params).unwrap();
        for x in [-1e6, -1.0, 0.0, 2.0, 1e9] {
            let a = p.act(&[x, -x, 0.5 * x], [0.005, -0.005]).unwrap();
            assert!(a.iter().all(|v| v.abs() <= 0.005));
        }
    }
}
