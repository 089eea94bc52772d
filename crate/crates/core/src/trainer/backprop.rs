use crate::network::{Mlp, Trace};
use crate::scalar::Scalar;

/// Parameter gradient with the same layout as [`Mlp::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<S> {
    pub(crate) weights: Vec<Vec<S>>,
    pub(crate) bias: Vec<Vec<S>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn zeros(net: &Mlp<S>) -> Self {
        Self {
            weights: net.layers().iter().map(|l| vec![S::zero(); l.weights().len()]).collect(),
            bias: net.layers().iter().map(|l| vec![S::zero(); l.bias().len()]).collect(),
        }
    }

    pub fn flatten(&self) -> Vec<S> {
        self.weights
            .iter()
            .zip(&self.bias)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }

    pub fn scale(&mut self, factor: S) {
        for v in self.weights.iter_mut().chain(self.bias.iter_mut()).flatten() {
            *v = *v * factor;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().chain(&self.bias).flatten().all(|v| v.is_zero())
    }

    /// `params -= lr * self`
    pub fn apply_sgd(&self, net: &mut Mlp<S>, lr: S) {
        for ((layer, gw), gb) in net.layers_mut().iter_mut().zip(&self.weights).zip(&self.bias) {
            for (w, &g) in layer.weights_mut().iter_mut().zip(gw) {
                *w = *w - lr * g;
            }
            for (b, &g) in layer.bias_mut().iter_mut().zip(gb) {
                *b = *b - lr * g;
            }
        }
    }
}

/// Accumulates into `grads` the gradient of a loss whose derivative with
/// respect to each layer's post-activation vector is `post_grads[k]`.
pub(crate) fn backward<S: Scalar>(
    net: &Mlp<S>,
    trace: &Trace<S>,
    post_grads: &[Vec<S>],
    grads: &mut Gradients<S>,
) {
    let layers = net.layers();
    debug_assert_eq!(post_grads.len(), layers.len());
    let mut upstream: Vec<S> = post_grads[layers.len() - 1].clone();
    for k in (0..layers.len()).rev() {
        let layer = &layers[k];
        let kind = layer.activation();
        let dz: Vec<S> = upstream
            .iter()
            .zip(&trace.pre[k])
            .map(|(&g, &z)| g * kind.derivative(z))
            .collect();
        let input = if k == 0 { &trace.input } else { &trace.post[k - 1] };
        let in_dim = layer.in_dim();
        for (i, &d) in dz.iter().enumerate() {
            grads.bias[k][i] = grads.bias[k][i] + d;
            let row = &mut grads.weights[k][i * in_dim..(i + 1) * in_dim];
            for (g, &x) in row.iter_mut().zip(input) {
                *g = *g + d * x;
            }
        }
        if k > 0 {
            upstream = post_grads[k - 1].clone();
            for (i, &d) in dz.iter().enumerate() {
                for (u, &w) in upstream.iter_mut().zip(layer.row(i)) {
                    *u = *u + d * w;
                }
            }
        }
    }
}

/// Softmax cross-entropy of the output logits against `label`, and its
/// derivative with respect to the logits.
pub(crate) fn softmax_cross_entropy<S: Scalar>(logits: &[S], label: usize) -> (S, Vec<S>) {
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: S = exps.iter().copied().sum();
    let loss = sum.ln() - (logits[label] - max);
    let grad = exps
        .iter()
        .enumerate()
        .map(|(i, &e)| e / sum - if i == label { S::one() } else { S::zero() })
        .collect();
    (loss, grad)
}
