use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// Affine map followed by an elementwise activation. `weight` is
/// `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }
}

/// Fully connected network with tanh hidden layers and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Gradient of the loss with respect to every layer's weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

impl DenseNet {
    /// Glorot-uniform weights and zero biases.
    pub fn new(input_dim: usize, hidden: &[usize], output_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = Self::chain(input_dim, hidden, output_dim);
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, d)| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weight =
                    Array2::from_shape_fn((fan_out, fan_in), |_| rng.gen_range(-limit..=limit));
                Layer {
                    weight,
                    bias: Array1::zeros(fan_out),
                    activation: if l == last {
                        Activation::Identity
                    } else {
                        Activation::Tanh
                    },
                }
            })
            .collect();
        Self { layers }
    }

    /// All-zero parameters.
    pub fn zeros(input_dim: usize, hidden: &[usize], output_dim: usize) -> Self {
        let mut net = Self::new(input_dim, hidden, output_dim, 0);
        net.layers.iter_mut().for_each(|l| {
            l.weight.fill(0.0);
            l.bias.fill(0.0);
        });
        net
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::DimensionMismatch("network without layers".into()));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {l} emits {} values but layer {} takes {}",
                    pair[0].output_dim(),
                    l + 1,
                    pair[1].input_dim()
                )));
            }
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.output_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "layer {l} bias has {} entries for {} outputs",
                    layer.bias.len(),
                    layer.output_dim()
                )));
            }
            if !layer
                .weight
                .iter()
                .chain(layer.bias.iter())
                .all(|v| v.is_finite())
            {
                return Err(Error::DimensionMismatch(format!(
                    "layer {l} has non-finite parameters"
                )));
            }
        }
        Ok(Self { layers })
    }

    fn chain(input_dim: usize, hidden: &[usize], output_dim: usize) -> Vec<usize> {
        std::iter::once(input_dim)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(output_dim))
            .collect()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::output_dim)
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Parameters in layer order, each layer as row-major weights then bias.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::shape(
                "network parameters",
                self.num_params(),
                params.len(),
            ));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            for (dst, src) in l.weight.iter_mut().chain(l.bias.iter_mut()).zip(&mut it) {
                *dst = *src;
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape("network input", self.input_dim(), x.len()));
        }
        let mut a = Array1::from(x.to_vec());
        for l in &self.layers {
            let mut z = l.weight.dot(&a);
            z += &l.bias;
            z.mapv_inplace(|v| l.activation.apply(v));
            a = z;
        }
        Ok(a.to_vec())
    }

    /// Row-wise forward pass over a batch (`samples x input_dim`).
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self
            .activations(x)?
            .pop()
            .expect("at least the input activation"))
    }

    fn activations(&self, x: ArrayView2<f64>) -> Result<Vec<Array2<f64>>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape("network input", self.input_dim(), x.ncols()));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        for l in &self.layers {
            let prev = acts.last().expect("non-empty");
            let mut z = prev.dot(&l.weight.t());
            z += &l.bias;
            z.mapv_inplace(|v| l.activation.apply(v));
            acts.push(z);
        }
        Ok(acts)
    }

    /// Mean over the batch of the squared error `||net(x) - y||^2`.
    pub fn loss(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
        let out = self.forward_batch(x)?;
        check_targets(&out, y)?;
        Ok(squared_error(&out, y) / x.nrows() as f64)
    }

    /// Loss and its gradient with respect to all parameters.
    pub fn grad(&self, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<(f64, Gradients)> {
        if x.nrows() == 0 {
            return Err(Error::shape("batch rows", 1, 0));
        }
        let acts = self.activations(x)?;
        let out = acts.last().expect("output activation");
        check_targets(out, y)?;
        let batch = x.nrows() as f64;
        let loss = squared_error(out, y) / batch;

        let mut delta = (out - &y) * (2.0 / batch);
        let mut grads = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let a_out = &acts[l + 1];
            let act = layer.activation;
            if act != Activation::Identity {
                delta.zip_mut_with(a_out, |d, &a| *d *= act.derivative_from_output(a));
            }
            let a_in = &acts[l];
            let gw = delta.t().dot(a_in);
            let gb = delta.sum_axis(Axis(0));
            if l > 0 {
                delta = delta.dot(&layer.weight);
            }
            grads.push((gw, gb));
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }
}

fn check_targets(out: &Array2<f64>, y: ArrayView2<f64>) -> Result<()> {
    if out.nrows() != y.nrows() {
        return Err(Error::shape("target rows", out.nrows(), y.nrows()));
    }
    if out.ncols() != y.ncols() {
        return Err(Error::shape("target width", out.ncols(), y.ncols()));
    }
    Ok(())
}

fn squared_error(out: &Array2<f64>, y: ArrayView2<f64>) -> f64 {
    out.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Convenience for building a single input row.
pub fn row(x: &[f64]) -> Array2<f64> {
    ArrayView1::from(x).insert_axis(Axis(0)).to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_weights_emit_bias() {
        let mut net = DenseNet::zeros(3, &[4], 2);
        net.layers_mut()[1].bias = array![0.5, -1.5];
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.5, -1.5]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let net = DenseNet::from_layers(vec![Layer {
            weight: Array2::eye(3),
            bias: Array1::zeros(3),
            activation: Activation::Identity,
        }])
        .unwrap();
        assert_eq!(
            net.forward(&[0.1, 0.2, -0.3]).unwrap(),
            vec![0.1, 0.2, -0.3]
        );
    }

    #[test]
    fn hand_computed_two_two_one() {
        let net = DenseNet::from_layers(vec![
            Layer {
                weight: array![[0.5, -1.0], [2.0, 0.25]],
                bias: array![0.1, -0.2],
                activation: Activation::Tanh,
            },
            Layer {
                weight: array![[1.5, -0.75]],
                bias: array![0.05],
                activation: Activation::Identity,
            },
        ])
        .unwrap();
        let (x0, x1) = (0.3, -0.4);
        let h0 = (0.5 * x0 - 1.0 * x1 + 0.1f64).tanh();
        let h1 = (2.0 * x0 + 0.25 * x1 - 0.2f64).tanh();
        let expected = 1.5 * h0 - 0.75 * h1 + 0.05;
        let got = net.forward(&[x0, x1]).unwrap()[0];
        assert!((got - expected).abs() < 1e-12);
        let batch = net.forward_batch(row(&[x0, x1]).view()).unwrap();
        assert!((batch[[0, 0]] - expected).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let net = DenseNet::new(3, &[5], 2, 1);
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::ShapeMismatch { .. })
        ));
        let x = Array2::zeros((4, 3));
        let y = Array2::zeros((4, 1));
        assert!(net.grad(x.view(), y.view()).is_err());
        assert!(net
            .grad(Array2::zeros((0, 3)).view(), Array2::zeros((0, 2)).view())
            .is_err());
    }

    #[test]
    fn architecture_listing() {
        for hidden in [vec![], vec![128], vec![64, 64], vec![512, 512, 512]] {
            let net = DenseNet::new(10, &hidden, 3, 7);
            assert_eq!(net.hidden_sizes(), hidden);
            assert_eq!(net.params().len(), net.num_params());
        }
    }

    #[test]
    fn glorot_bounds_and_zero_bias() {
        let net = DenseNet::new(30, &[20], 10, 3);
        let limit = (6.0f64 / 50.0).sqrt();
        assert!(net.layers()[0].weight.iter().all(|w| w.abs() <= limit));
        assert!(net.layers()[0].bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let net = DenseNet::new(3, &[6], 2, 11);
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i as f64 - j as f64) * 0.3);
        let y = net.forward_batch(x.view()).unwrap();
        let (loss, g) = net.grad(x.view(), y.view()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicated_batch_keeps_mean_gradient() {
        let net = DenseNet::new(4, &[8, 5], 3, 5);
        let x = Array2::from_shape_fn((6, 4), |(i, j)| ((i * 7 + j * 3) as f64).sin());
        let y = Array2::from_shape_fn((6, 3), |(i, j)| ((i + 2 * j) as f64).cos());
        let x2 = ndarray::concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let y2 = ndarray::concatenate(Axis(0), &[y.view(), y.view()]).unwrap();
        let (_, g1) = net.grad(x.view(), y.view()).unwrap();
        let (_, g2) = net.grad(x2.view(), y2.view()).unwrap();
        for (a, b) in g1.flatten().iter().zip(g2.flatten()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
