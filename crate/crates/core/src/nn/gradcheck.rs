//! Central finite-difference verification of [`Network::backward`].

use super::{GradientSet, Network, NnError};
use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;

/// Step used for the central difference `(L(w+h) - L(w-h)) / 2h`.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor of the relative error.
const REL_FLOOR: f64 = 1e-8;

/// A scalar loss on the network's raw outputs: returns the loss value and
/// its gradient with respect to each raw output.
pub trait OutputLoss {
    fn evaluate(&self, outputs: &[f64]) -> (f64, Vec<f64>);
}

impl<F> OutputLoss for F
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    fn evaluate(&self, outputs: &[f64]) -> (f64, Vec<f64>) {
        self(outputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Weight(usize, usize),
    Bias(usize),
}

fn slots(net: &Network) -> Vec<(usize, Slot)> {
    let mut out = Vec::with_capacity(net.parameter_count());
    for (l, layer) in net.layers().iter().enumerate() {
        for ((r, c), _) in layer.weights.indexed_iter() {
            out.push((l, Slot::Weight(r, c)));
        }
        for i in 0..layer.bias.len() {
            out.push((l, Slot::Bias(i)));
        }
    }
    out
}

fn param_mut(net: &mut Network, layer: usize, slot: Slot) -> &mut f64 {
    let l = &mut net.layers_mut()[layer];
    match slot {
        Slot::Weight(r, c) => &mut l.weights[[r, c]],
        Slot::Bias(i) => &mut l.bias[i],
    }
}

fn grad_at(grads: &GradientSet, layer: usize, slot: Slot) -> f64 {
    let l = &grads.layers[layer];
    match slot {
        Slot::Weight(r, c) => l.weights[[r, c]],
        Slot::Bias(i) => l.bias[i],
    }
}

fn loss_at<L: OutputLoss + ?Sized>(net: &Network, input: &[f64], loss: &L) -> Result<f64, NnError> {
    Ok(loss.evaluate(&net.forward_raw(input)?).0)
}

/// Analytic gradient of `loss` for a single input.
pub fn analytic_gradient<L: OutputLoss + ?Sized>(
    net: &Network,
    input: &[f64],
    loss: &L,
) -> Result<GradientSet, NnError> {
    let view = ArrayView2::from_shape((1, input.len()), input).expect("row view");
    let cache = net.forward_batch(view)?;
    let (_, g) = loss.evaluate(cache.outputs().row(0).as_slice().expect("contiguous"));
    let g = Array2::from_shape_vec((1, g.len()), g).expect("row gradient");
    net.backward(view, &cache, g.view())
}

/// Largest relative error between `analytic` and central finite differences,
/// over `max_samples` randomly chosen parameters (all of them when the
/// network is smaller than that).
pub fn max_relative_error<L, R>(
    net: &Network,
    input: &[f64],
    loss: &L,
    analytic: &GradientSet,
    max_samples: usize,
    rng: &mut R,
) -> Result<f64, NnError>
where
    L: OutputLoss + ?Sized,
    R: Rng + ?Sized,
{
    let all = slots(net);
    let chosen: Vec<(usize, Slot)> = if all.len() <= max_samples {
        all
    } else {
        sample(rng, all.len(), max_samples).into_iter().map(|i| all[i]).collect()
    };
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (layer, slot) in chosen {
        let original = *param_mut(&mut probe, layer, slot);
        *param_mut(&mut probe, layer, slot) = original + FD_STEP;
        let plus = loss_at(&probe, input, loss)?;
        *param_mut(&mut probe, layer, slot) = original - FD_STEP;
        let minus = loss_at(&probe, input, loss)?;
        *param_mut(&mut probe, layer, slot) = original;

        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let a = grad_at(analytic, layer, slot);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Backpropagates `loss` and compares against finite differences.
pub fn gradient_check<L, R>(
    net: &Network,
    input: &[f64],
    loss: &L,
    max_samples: usize,
    rng: &mut R,
) -> Result<f64, NnError>
where
    L: OutputLoss + ?Sized,
    R: Rng + ?Sized,
{
    let analytic = analytic_gradient(net, input, loss)?;
    max_relative_error(net, input, loss, &analytic, max_samples, rng)
}
