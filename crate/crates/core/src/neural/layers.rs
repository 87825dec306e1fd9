use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{join, Parameters, Tensor};
use crate::{Error, Result};

/// Affine map `y = W x + b` with `W: [out, in]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    /// Weights uniform in ±1/sqrt(fan_in), zero bias.
    pub fn new(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        Linear {
            weight: Tensor::uniform(&[output, input], bound, rng),
            bias: Tensor::zeros(&[output]),
        }
    }

    pub fn from_parts(weight: Tensor, bias: Tensor) -> Result<Self> {
        if weight.shape().len() != 2 || bias.shape() != [weight.rows()] {
            return Err(Error::Shape(format!(
                "weight {:?} and bias {:?} are inconsistent",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(Linear { weight, bias })
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "linear layer expects input of length {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut y = self.bias.data().to_vec();
        self.weight.matvec_add(x, &mut y);
        Ok(y)
    }

    /// Accumulates parameter gradients into `grad` and returns dL/dx.
    pub fn backward(&self, x: &[f64], dy: &[f64], grad: &mut Linear) -> Vec<f64> {
        grad.weight.outer_add(dy, x);
        for (g, d) in grad.bias.data_mut().iter_mut().zip(dy) {
            *g += d;
        }
        let mut dx = vec![0.0; self.input_dim()];
        self.weight.matvec_t_add(dy, &mut dx);
        dx
    }
}

impl Parameters for Linear {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor)) {
        f(join(prefix, "weight"), &self.weight);
        f(join(prefix, "bias"), &self.bias);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor)) {
        f(join(prefix, "weight"), &mut self.weight);
        f(join(prefix, "bias"), &mut self.bias);
    }
}

pub fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Masks `dy` where the ReLU output `y` was clamped.
pub fn relu_backward(y: &[f64], dy: &mut [f64]) {
    for (d, &o) in dy.iter_mut().zip(y) {
        if o <= 0.0 {
            *d = 0.0;
        }
    }
}

/// `max(0, W x + b)`.
pub fn linear_relu_forward(x: &[f64], layer: &Linear) -> Result<Vec<f64>> {
    let mut y = layer.forward(x)?;
    relu(&mut y);
    Ok(y)
}

/// Stack of linear layers with ReLU between them and a linear output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

/// Inputs to every layer from a forward pass (post-activation).
#[derive(Clone, Debug)]
pub struct MlpCache {
    pub activations: Vec<Vec<f64>>,
}

impl Mlp {
    /// `dims = [input, hidden..., output]`.
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Self {
        Mlp {
            layers: dims.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty mlp").output_dim()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.forward(&h)?;
            if i < last {
                relu(&mut y);
            }
            activations.push(std::mem::replace(&mut h, y));
        }
        Ok((h, MlpCache { activations }))
    }

    /// Backpropagates `dy` (gradient w.r.t. the output); returns dL/dx.
    pub fn backward(&self, cache: &MlpCache, dy: &[f64], grad: &mut Mlp) -> Vec<f64> {
        let mut d = dy.to_vec();
        for i in (0..self.layers.len()).rev() {
            let x = &cache.activations[i];
            d = self.layers[i].backward(x, &d, &mut grad.layers[i]);
            if i > 0 {
                // x is the ReLU output of layer i - 1
                relu_backward(x, &mut d);
            }
        }
        d
    }
}

impl Parameters for Mlp {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor)) {
        for (i, l) in self.layers.iter().enumerate() {
            l.visit(&join(prefix, &format!("layers.{i}")), f);
        }
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor)) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("layers.{i}")), f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn identity2() -> Linear {
        Linear::from_parts(
            Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Tensor::zeros(&[2]),
        )
        .unwrap()
    }

    #[test]
    fn identity_relu() {
        assert_eq!(linear_relu_forward(&[1.0, -2.0], &identity2()).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn bias_only() {
        let mut l = identity2();
        l.bias = Tensor::from_vec(&[2], vec![3.0, -1.0]).unwrap();
        assert_eq!(linear_relu_forward(&[0.0, 0.0], &l).unwrap(), vec![3.0, 0.0]);
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(identity2().forward(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn random_layer_matches_explicit_matmul() {
        let mut rng = stream_rng(3, 0);
        let mut l = Linear::new(3, 4, &mut rng);
        l.bias = Tensor::uniform(&[4], 1.0, &mut rng);
        let x = [0.3, -1.2, 2.5];
        let y = linear_relu_forward(&x, &l).unwrap();
        for r in 0..4 {
            let mut acc = l.bias.data()[r];
            for c in 0..3 {
                acc += l.weight.data()[r * 3 + c] * x[c];
            }
            let expected = if acc > 0.0 { acc } else { 0.0 };
            assert!((y[r] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn relu_output_is_non_negative() {
        let mut rng = stream_rng(4, 0);
        let mlp = Mlp::new(&[5, 7, 3], &mut rng);
        let (_, cache) = mlp.forward_cached(&[1.0, -2.0, 3.0, -4.0, 5.0]).unwrap();
        assert!(cache.activations[1].iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn forward_is_bit_identical_on_repeat() {
        let mut rng = stream_rng(5, 0);
        let mlp = Mlp::new(&[4, 6, 2], &mut rng);
        let x = [0.1, 0.2, -0.3, 0.4];
        assert_eq!(mlp.forward(&x).unwrap(), mlp.forward(&x).unwrap());
    }

    #[test]
    fn init_bounds() {
        let mut rng = stream_rng(6, 0);
        let l = Linear::new(16, 20, &mut rng);
        assert!(l.weight.data().iter().all(|w| w.abs() <= 0.25));
        assert!(l.bias.data().iter().all(|&b| b == 0.0));
    }
}
