//! Dense feed-forward networks with ELU hidden layers and hand-written
//! backpropagation.
//!
//! A [`Network`] is a stack of [`Dense`] layers. Every layer except the last
//! is followed by an ELU; the last layer produces raw outputs which are
//! interpreted by the network's [`Head`]: a softmax distribution for the actor
//! and a single linear value for the critic.
//!
//! All arithmetic is `f64` so analytic gradients can be compared against
//! central finite differences.

pub mod gradcheck;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use thiserror::Error;

/// ELU slope for the negative branch.
pub const ELU_ALPHA: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("input width {got} does not match network input width {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("non-finite value produced at layer {layer}")]
    NonFinite { layer: usize },
    #[error("shape mismatch at layer {layer}: {detail}")]
    ShapeMismatch { layer: usize, detail: String },
    #[error("network must have at least one layer")]
    Empty,
}

pub fn elu(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        alpha * x.exp_m1()
    }
}

/// Derivative of [`elu`] evaluated at the pre-activation `x`.
pub fn elu_derivative(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        alpha * x.exp()
    }
}

/// Numerically stable softmax (max-subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// How the raw outputs of the final layer are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Actor head: softmax over the outputs.
    Softmax,
    /// Critic head: outputs used as-is.
    Linear,
}

/// One fully connected layer; `weights` is `(outputs, inputs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((outputs, inputs), || rng.gen_range(-limit..=limit));
        Self {
            weights,
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// Intermediates of a batched forward pass, kept for [`Network::backward`].
/// The input batch itself is not copied.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Output of each layer; the last entry holds the raw (pre-head) outputs.
    pub activations: Vec<Array2<f64>>,
    /// Pre-activation values of every layer.
    pub pre: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn outputs(&self) -> &Array2<f64> {
        self.activations.last().expect("network has at least one layer")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<Dense>,
}

impl GradientSet {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    pub fn is_zero(&self) -> bool {
        self.iter_values().all(|v| v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Dense>,
    head: Head,
}

impl Network {
    /// Randomly initialised network with the given layer widths
    /// (`[input, hidden.., output]`).
    pub fn new<R: Rng + ?Sized>(layer_dims: &[usize], head: Head, rng: &mut R) -> Self {
        assert!(layer_dims.len() >= 2, "need at least input and output widths");
        let layers = layer_dims
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], rng))
            .collect();
        Self { layers, head }
    }

    pub fn zeros(layer_dims: &[usize], head: Head) -> Self {
        assert!(layer_dims.len() >= 2, "need at least input and output widths");
        let layers = layer_dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Self { layers, head }
    }

    pub fn from_layers(layers: Vec<Dense>, head: Head) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Empty);
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(NnError::ShapeMismatch {
                    layer: i,
                    detail: format!("bias length {} vs {} outputs", l.bias.len(), l.outputs()),
                });
            }
            if i > 0 && layers[i - 1].outputs() != l.inputs() {
                return Err(NnError::ShapeMismatch {
                    layer: i,
                    detail: format!(
                        "layer expects {} inputs but previous layer emits {}",
                        l.inputs(),
                        layers[i - 1].outputs()
                    ),
                });
            }
        }
        Ok(Self { layers, head })
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(Dense::outputs));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Batched forward pass over the rows of `inputs`.
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<ForwardCache, NnError> {
        if inputs.ncols() != self.input_dim() {
            return Err(NnError::InputLength {
                expected: self.input_dim(),
                got: inputs.ncols(),
            });
        }
        let last = self.layers.len() - 1;
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = if i == 0 {
                inputs.dot(&layer.weights.t())
            } else {
                activations[i - 1].dot(&layer.weights.t())
            };
            z += &layer.bias;
            if !z.iter().all(|v| v.is_finite()) {
                return Err(NnError::NonFinite { layer: i });
            }
            let a = if i == last {
                z.clone()
            } else {
                z.mapv(|v| elu(v, ELU_ALPHA))
            };
            pre.push(z);
            activations.push(a);
        }
        Ok(ForwardCache { activations, pre })
    }

    /// Raw outputs of the final layer for a single input.
    pub fn forward_raw(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let view = ArrayView2::from_shape((1, input.len()), input).expect("row view");
        let cache = self.forward_batch(view)?;
        Ok(cache.outputs().row(0).to_vec())
    }

    /// Head-interpreted output: probabilities for a softmax head, raw values otherwise.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        let raw = self.forward_raw(input)?;
        Ok(match self.head {
            Head::Softmax => softmax(&raw),
            Head::Linear => raw,
        })
    }

    /// Backpropagates `output_grad` (dL/d raw outputs, one row per batch
    /// sample) through the forward pass `cache` computed from `inputs`.
    /// Gradients are summed over the batch.
    pub fn backward(
        &self,
        inputs: ArrayView2<f64>,
        cache: &ForwardCache,
        output_grad: ArrayView2<f64>,
    ) -> Result<GradientSet, NnError> {
        let expected = cache.outputs().dim();
        if output_grad.dim() != expected {
            return Err(NnError::ShapeMismatch {
                layer: self.layers.len() - 1,
                detail: format!("output gradient {:?} vs outputs {:?}", output_grad.dim(), expected),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.to_owned();
        for i in (0..self.layers.len()).rev() {
            if !delta.iter().all(|v| v.is_finite()) {
                return Err(NnError::NonFinite { layer: i });
            }
            let weights = if i == 0 {
                delta.t().dot(&inputs)
            } else {
                delta.t().dot(&cache.activations[i - 1])
            };
            let bias = delta.sum_axis(Axis(0));
            grads.push(Dense { weights, bias });
            if i > 0 {
                let mut upstream = delta.dot(&self.layers[i].weights);
                upstream.zip_mut_with(&cache.pre[i - 1], |d, &z| *d *= elu_derivative(z, ELU_ALPHA));
                delta = upstream;
            }
        }
        grads.reverse();
        Ok(GradientSet { layers: grads })
    }

    /// Plain gradient descent: `w <- w - lr * g`.
    pub fn apply_sgd(&mut self, grads: &GradientSet, lr: f64) -> Result<(), NnError> {
        self.check_congruent(grads)?;
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weights.scaled_add(-lr, &g.weights);
            layer.bias.scaled_add(-lr, &g.bias);
        }
        Ok(())
    }

    fn check_congruent(&self, grads: &GradientSet) -> Result<(), NnError> {
        if grads.layers.len() != self.layers.len() {
            return Err(NnError::ShapeMismatch {
                layer: grads.layers.len().min(self.layers.len()),
                detail: format!("{} gradient layers for {} parameter layers", grads.layers.len(), self.layers.len()),
            });
        }
        for (i, (p, g)) in self.layers.iter().zip(&grads.layers).enumerate() {
            if p.weights.dim() != g.weights.dim() || p.bias.len() != g.bias.len() {
                return Err(NnError::ShapeMismatch {
                    layer: i,
                    detail: format!("params {:?} vs gradient {:?}", p.weights.dim(), g.weights.dim()),
                });
            }
        }
        Ok(())
    }
}

/// Separate actor and critic networks sharing an input width.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub actor: Network,
    pub critic: Network,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], actions: usize, rng: &mut R) -> Self {
        let mut actor_dims = vec![input_dim];
        actor_dims.extend_from_slice(hidden);
        let mut critic_dims = actor_dims.clone();
        actor_dims.push(actions);
        critic_dims.push(1);
        let actor = Network::new(&actor_dims, Head::Softmax, rng);
        let critic = Network::new(&critic_dims, Head::Linear, rng);
        Self { actor, critic }
    }

    pub fn input_dim(&self) -> usize {
        self.actor.input_dim()
    }

    /// Action distribution and state value for one encoded state.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, f64), NnError> {
        let probs = self.actor.forward(input)?;
        let value = self.critic.forward_raw(input)?[0];
        Ok((probs, value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn elu_examples() {
        assert_eq!(elu(0.0, 1.0), 0.0);
        assert_eq!(elu(1.0, 1.0), 1.0);
        assert_abs_diff_eq!(elu(-20.0, 1.0), -1.0, epsilon = 1e-8);
        assert!(elu(-20.0, 1.0) > -1.0);
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let p = softmax(&[1e300, -1e300, 0.0, 1e300, 5.0, -3.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_network_is_uniform_with_zero_value() {
        let ac = ActorCritic {
            actor: Network::zeros(&[10, 4, 6], Head::Softmax),
            critic: Network::zeros(&[10, 4, 1], Head::Linear),
        };
        let (probs, value) = ac.forward(&[0.3; 10]).unwrap();
        for p in probs {
            assert_abs_diff_eq!(p, 1.0 / 6.0, epsilon = 1e-15);
        }
        assert_eq!(value, 0.0);
    }

    #[test]
    fn random_params_give_a_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let ac = ActorCritic::new(16, &[8, 8], 6, &mut rng);
            let x: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (probs, value) = ac.forward(&x).unwrap();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            assert!(probs.iter().all(|&p| p > 0.0));
            assert!(value.is_finite());
        }
    }

    #[test]
    fn matches_straight_line_two_layer_evaluation() {
        let hidden = Dense {
            weights: array![[0.5, -0.25, 0.1], [-0.3, 0.2, 0.4]],
            bias: array![0.05, -0.1],
        };
        let out = Dense {
            weights: array![[1.0, -2.0], [0.5, 0.25]],
            bias: array![0.0, 0.3],
        };
        let net = Network::from_layers(vec![hidden, out], Head::Linear).unwrap();
        let x = [1.0, 2.0, -1.0];
        // Hand evaluation.
        let z0: f64 = 0.5 * 1.0 - 0.25 * 2.0 + 0.1 * -1.0 + 0.05;
        let z1: f64 = -0.3 * 1.0 + 0.2 * 2.0 + 0.4 * -1.0 - 0.1;
        let h0 = if z0 > 0.0 { z0 } else { z0.exp() - 1.0 };
        let h1 = if z1 > 0.0 { z1 } else { z1.exp() - 1.0 };
        let expected = [h0 - 2.0 * h1, 0.5 * h0 + 0.25 * h1 + 0.3];
        let got = net.forward_raw(&x).unwrap();
        assert_abs_diff_eq!(got[0], expected[0], epsilon = 1e-15);
        assert_abs_diff_eq!(got[1], expected[1], epsilon = 1e-15);
    }

    #[test]
    fn input_length_mismatch_is_reported() {
        let net = Network::zeros(&[5, 3], Head::Linear);
        assert_eq!(
            net.forward(&[0.0; 4]),
            Err(NnError::InputLength { expected: 5, got: 4 })
        );
    }

    #[test]
    fn zero_loss_gradient_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Network::new(&[7, 5, 3], Head::Softmax, &mut rng);
        let x = Array2::from_elem((2, 7), 0.4);
        let cache = net.forward_batch(x.view()).unwrap();
        let g = net.backward(x.view(), &cache, Array2::zeros((2, 3)).view()).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn non_finite_output_gradient_names_the_layer() {
        let net = Network::zeros(&[2, 2, 2], Head::Linear);
        let x = Array2::zeros((1, 2));
        let cache = net.forward_batch(x.view()).unwrap();
        let err = net
            .backward(x.view(), &cache, array![[f64::NAN, 0.0]].view())
            .unwrap_err();
        assert_eq!(err, NnError::NonFinite { layer: 1 });
    }

    #[test]
    fn sgd_examples() {
        let mut net = Network::from_layers(
            vec![Dense { weights: array![[1.0]], bias: array![0.0] }],
            Head::Linear,
        )
        .unwrap();
        let grads = GradientSet {
            layers: vec![Dense { weights: array![[2.0]], bias: array![0.0] }],
        };
        let before = net.clone();
        net.apply_sgd(&grads, 0.0).unwrap();
        assert_eq!(net, before);
        net.apply_sgd(&grads, 0.0001).unwrap();
        assert_abs_diff_eq!(net.layers()[0].weights[[0, 0]], 0.9998, epsilon = 1e-15);
    }

    #[test]
    fn sgd_then_negated_sgd_restores_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Network::new(&[6, 4, 2], Head::Linear, &mut rng);
        let original = net.clone();
        let mut grads = GradientSet::zeros_like(&net);
        for l in &mut grads.layers {
            l.weights.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
            l.bias.mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        }
        net.apply_sgd(&grads, 0.01).unwrap();
        net.apply_sgd(&grads, -0.01).unwrap();
        for (a, b) in net.layers().iter().zip(original.layers()) {
            for (x, y) in a.weights.iter().zip(b.weights.iter()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn sgd_rejects_incongruent_gradients() {
        let mut net = Network::zeros(&[3, 2], Head::Linear);
        let other = Network::zeros(&[4, 2], Head::Linear);
        let grads = GradientSet::zeros_like(&other);
        assert!(matches!(net.apply_sgd(&grads, 0.1), Err(NnError::ShapeMismatch { layer: 0, .. })));
    }

    #[test]
    fn actor_loss_leaves_critic_untouched() {
        // Separate networks: an actor-only loss has no path into critic parameters.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut ac = ActorCritic::new(4, &[3], 6, &mut rng);
        let critic_before = ac.critic.clone();
        let x = Array2::from_elem((1, 4), 0.5);
        let cache = ac.actor.forward_batch(x.view()).unwrap();
        let g = ac.actor.backward(x.view(), &cache, Array2::from_elem((1, 6), 0.1).view()).unwrap();
        ac.actor.apply_sgd(&g, 0.5).unwrap();
        assert_eq!(ac.critic, critic_before);
    }

    #[test]
    fn forward_is_bit_identical_across_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ac = ActorCritic::new(32, &[16, 8], 6, &mut rng);
        let x: Vec<f64> = (0..32).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = ac.forward(&x).unwrap();
        let b = ac.forward(&x).unwrap();
        assert_eq!(a.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
    }
}
