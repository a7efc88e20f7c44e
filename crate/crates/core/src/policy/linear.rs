use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_env::Action;
use crate::nn::{Activation, DenseNet, Layer, Normalizer};

/// `a* tanh(A z + B a_prev)` with `z` the normalized observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinearRecord", into = "LinearRecord")]
pub struct LinearTanhPolicy {
    /// `2 x obs_dim`.
    pub a: Array2<f64>,
    /// `2 x 2`.
    pub b: Array2<f64>,
    pub a_star: f64,
    pub obs_normalizer: Normalizer,
}

impl LinearTanhPolicy {
    pub fn zeros(obs_normalizer: Normalizer, a_star: f64) -> Self {
        Self {
            a: Array2::zeros((2, obs_normalizer.dim())),
            b: Array2::zeros((2, 2)),
            a_star,
            obs_normalizer,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn pre_activation(&self, obs: &[f64], prev_action: Action) -> Result<[f64; 2]> {
        if obs.len() != self.obs_dim() {
            return Err(Error::shape(
                "policy observation",
                self.obs_dim(),
                obs.len(),
            ));
        }
        let z = Array1::from(self.obs_normalizer.apply(obs)?);
        let h = self.a.dot(&z);
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = h[i] + self.b[[i, 0]] * prev_action[0] + self.b[[i, 1]] * prev_action[1];
        }
        Ok(out)
    }

    pub fn act(&self, obs: &[f64], prev_action: Action) -> Result<Action> {
        let h = self.pre_activation(obs, prev_action)?;
        Ok(h.map(|v| self.a_star * v.tanh()))
    }

    pub fn num_params(&self) -> usize {
        self.a.len() + self.b.len()
    }

    /// `A` then `B`, row-major.
    pub fn params(&self) -> Vec<f64> {
        self.a.iter().chain(self.b.iter()).copied().collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::shape(
                "policy parameters",
                self.num_params(),
                params.len(),
            ));
        }
        for (dst, src) in self.a.iter_mut().chain(self.b.iter_mut()).zip(params) {
            *dst = *src;
        }
        Ok(())
    }
}

/// Stored as a bias-free linear network for `A` next to the `B` block.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearRecord {
    net: DenseNet,
    b: [[f64; 2]; 2],
    a_star: f64,
    obs_normalizer: Normalizer,
}

impl From<LinearTanhPolicy> for LinearRecord {
    fn from(p: LinearTanhPolicy) -> Self {
        let net = DenseNet::from_layers(vec![Layer {
            bias: Array1::zeros(2),
            weight: p.a,
            activation: Activation::Identity,
        }])
        .expect("single layer is consistent");
        Self {
            net,
            b: [[p.b[[0, 0]], p.b[[0, 1]]], [p.b[[1, 0]], p.b[[1, 1]]]],
            a_star: p.a_star,
            obs_normalizer: p.obs_normalizer,
        }
    }
}

impl TryFrom<LinearRecord> for LinearTanhPolicy {
    type Error = Error;

    fn try_from(r: LinearRecord) -> Result<Self> {
        let layer = match r.net.layers() {
            [l] if l.output_dim() == 2 && l.bias.iter().all(|&b| b == 0.0) => l,
            _ => {
                return Err(Error::DimensionMismatch(
                    "linear policy needs one bias-free layer with two outputs".into(),
                ))
            }
        };
        if layer.input_dim() != r.obs_normalizer.dim() {
            return Err(Error::shape(
                "policy normalizer",
                layer.input_dim(),
                r.obs_normalizer.dim(),
            ));
        }
        Ok(Self {
            a: layer.weight.clone(),
            b: Array2::from_shape_fn((2, 2), |(i, j)| r.b[i][j]),
            a_star: r.a_star,
            obs_normalizer: r.obs_normalizer,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrices_give_zero_action() {
        let p = LinearTanhPolicy::zeros(Normalizer::identity(3), 0.005);
        assert_eq!(
            p.act(&[4.0, -1.0, 9.0], [0.003, -0.004]).unwrap(),
            [0.0, 0.0]
        );
    }

    #[test]
    fn saturates_at_bound() {
        let mut p = LinearTanhPolicy::zeros(Normalizer::identity(1), 0.005);
        p.a[[0, 0]] = 1e6;
        p.a[[1, 0]] = -1e6;
        for x in [1.0, 1e3, 1e300] {
            let a = p.act(&[x], [0.0; 2]).unwrap();
            assert_eq!(a, [0.005, -0.005]);
        }
    }

    #[test]
    fn scalar_tanh_value() {
        let mut p = LinearTanhPolicy::zeros(Normalizer::identity(1), 0.005);
        p.a[[0, 0]] = 0.25;
        p.b[[0, 1]] = 100.0;
        // 0.25 * 2 + 100 * 0.005 = 1
        let a = p.act(&[2.0], [0.0, 0.005]).unwrap();
        assert!((a[0] - 0.003_807_970_779_778_824_4).abs() < 1e-15);
        assert_eq!(a[1], 0.0);
    }

    #[test]
    fn rescaled_inputs_with_compensated_matrix() {
        let norm = Normalizer::from_stats(vec![0.1, -0.2, 0.3], vec![0.5, 2.0, 1.0]).unwrap();
        let mut p = LinearTanhPolicy::zeros(norm.clone(), 0.01);
        p.set_params(&[0.3, -1.2, 0.7, 2.0, 0.4, -0.9, 5.0, -3.0, 1.0, 7.0])
            .unwrap();
        let scale = [4.0, 0.25, 10.0];
        let mut q = p.clone();
        q.obs_normalizer = Normalizer::from_stats(
            norm.mean.clone(),
            norm.std.iter().zip(scale).map(|(s, c)| s * c).collect(),
        )
        .unwrap();
        for mut row in q.a.rows_mut() {
            row.iter_mut().zip(scale).for_each(|(a, c)| *a *= c);
        }
        let obs = [0.7, -1.1, 2.3];
        let (x, y) = (
            p.act(&obs, [0.002, -0.001]).unwrap(),
            q.act(&obs, [0.002, -0.001]).unwrap(),
        );
        assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let p = LinearTanhPolicy::zeros(Normalizer::identity(3), 0.005);
        assert!(p.act(&[1.0], [0.0; 2]).is_err());
    }
}
