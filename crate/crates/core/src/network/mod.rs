//! Dense feed-forward networks and their activation patterns.

mod activation;
mod model_io;
mod pattern;

pub use activation::{apply_activation, sigmoid, ActivationKind, UnknownActivation};
pub use model_io::{load_model, save_model, LayerDoc, ModelDoc};
pub use pattern::{hamming, ActivationPattern, PatternError};

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("malformed weight document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("model has no layers")]
    NoLayers,
    #[error("input_dim must be positive")]
    ZeroInputDim,
    #[error("layer {layer}: {detail}")]
    DimensionMismatch { layer: usize, detail: String },
    #[error("layer {layer}: non-finite {what} at index {index}")]
    NonFinite {
        layer: usize,
        what: &'static str,
        index: usize,
    },
    #[error("input has dimension {got}, expected {expected}")]
    InputDimension { expected: usize, got: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One affine map followed by a pointwise activation.
///
/// Weights are stored row-major with one row per output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<S> {
    weights: Vec<S>,
    bias: Vec<S>,
    in_dim: usize,
    activation: ActivationKind,
    is_output: bool,
}

impl<S: Scalar> Layer<S> {
    /// Builds a layer from `rows` (one per output neuron); `is_output` is set
    /// by [`Mlp::new`].
    pub fn new(rows: Vec<Vec<S>>, bias: Vec<S>, activation: ActivationKind) -> Result<Self, String> {
        let in_dim = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || in_dim == 0 {
            return Err("weight matrix is empty".into());
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != in_dim) {
            return Err(format!(
                "weight row {bad} has {} entries, row 0 has {in_dim}",
                rows[bad].len()
            ));
        }
        if bias.len() != rows.len() {
            return Err(format!(
                "bias length {} does not match weight row count {}",
                bias.len(),
                rows.len()
            ));
        }
        Ok(Self {
            weights: rows.into_iter().flatten().collect(),
            bias,
            in_dim,
            activation,
            is_output: false,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn is_output(&self) -> bool {
        self.is_output
    }

    pub fn weight(&self, row: usize, col: usize) -> S {
        self.weights[row * self.in_dim + col]
    }

    pub fn row(&self, row: usize) -> &[S] {
        &self.weights[row * self.in_dim..(row + 1) * self.in_dim]
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn bias(&self) -> &[S] {
        &self.bias
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [S] {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [S] {
        &mut self.bias
    }

    /// `W·x + b`
    pub fn affine(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.in_dim);
        self.bias
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(b, |acc, (&w, &xi)| acc + w * xi)
            })
            .collect()
    }
}

/// Values produced by one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward<S> {
    /// Post-activation vector of every hidden layer, in layer order.
    pub hidden: Vec<Vec<S>>,
    pub output: Vec<S>,
}

/// Pre- and post-activation values of every layer, output layer included.
#[derive(Debug, Clone)]
pub struct Trace<S> {
    pub input: Vec<S>,
    pub pre: Vec<Vec<S>>,
    pub post: Vec<Vec<S>>,
}

/// A multilayer perceptron; the last layer is the output layer.
///
/// Immutable once built, so a shared reference can be used from any number
/// of threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<S> {
    layers: Vec<Layer<S>>,
    input_dim: usize,
    total_hidden: usize,
}

impl<S: Scalar> Mlp<S> {
    pub fn new(input_dim: usize, mut layers: Vec<Layer<S>>) -> Result<Self, ModelError> {
        if input_dim == 0 {
            return Err(ModelError::ZeroInputDim);
        }
        if layers.is_empty() {
            return Err(ModelError::NoLayers);
        }
        let mut width = input_dim;
        for (k, layer) in layers.iter().enumerate() {
            if layer.in_dim != width {
                return Err(ModelError::DimensionMismatch {
                    layer: k,
                    detail: format!("expects {} inputs, previous width is {width}", layer.in_dim),
                });
            }
            if let Some(index) = layer.weights.iter().position(|w| !w.is_finite()) {
                return Err(ModelError::NonFinite { layer: k, what: "weight", index });
            }
            if let Some(index) = layer.bias.iter().position(|b| !b.is_finite()) {
                return Err(ModelError::NonFinite { layer: k, what: "bias", index });
            }
            width = layer.out_dim();
        }
        let last = layers.len() - 1;
        for (k, layer) in layers.iter_mut().enumerate() {
            layer.is_output = k == last;
        }
        let total_hidden = layers[..last].iter().map(Layer::out_dim).sum();
        Ok(Self {
            layers,
            input_dim,
            total_hidden,
        })
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    /// All weights and biases, layer by layer, weights row-major before bias.
    pub fn parameters(&self) -> Vec<S> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    /// Overwrites the parameters in [`Mlp::parameters`] order.
    ///
    /// Panics if `values` has the wrong length.
    pub fn set_parameters(&mut self, values: &[S]) {
        assert_eq!(values.len(), self.parameter_count(), "parameter count");
        let mut rest = values;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            layer.weights.copy_from_slice(w);
            let (b, tail) = tail.split_at(layer.bias.len());
            layer.bias.copy_from_slice(b);
            rest = tail;
        }
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer<S>] {
        &mut self.layers
    }

    pub fn hidden_layers(&self) -> &[Layer<S>] {
        &self.layers[..self.layers.len() - 1]
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::out_dim)
    }

    /// Number of hidden neurons, i.e. the pattern length.
    pub fn total_hidden(&self) -> usize {
        self.total_hidden
    }

    /// Total count of trainable parameters (weights and biases).
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &[S]) -> Result<(), ModelError> {
        if x.len() != self.input_dim {
            return Err(ModelError::InputDimension {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn trace(&self, x: &[S]) -> Result<Trace<S>, ModelError> {
        self.check_input(x)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<S>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let z = layer.affine(post.last().map_or(x, Vec::as_slice));
            post.push(z.iter().map(|&v| layer.activation.apply(v)).collect());
            pre.push(z);
        }
        Ok(Trace {
            input: x.to_vec(),
            pre,
            post,
        })
    }

    pub fn forward(&self, x: &[S]) -> Result<Forward<S>, ModelError> {
        let mut post = self.trace(x)?.post;
        let output = post.pop().unwrap_or_default();
        Ok(Forward { hidden: post, output })
    }

    /// Thresholds every hidden post-activation at strictly greater than zero.
    pub fn activation_pattern(&self, x: &[S]) -> Result<ActivationPattern, ModelError> {
        self.check_input(x)?;
        let mut pattern = ActivationPattern::with_capacity(self.total_hidden);
        let mut current = x.to_vec();
        for layer in self.hidden_layers() {
            current = layer
                .affine(&current)
                .into_iter()
                .map(|v| layer.activation.apply(v))
                .collect();
            for &v in &current {
                pattern.push(v > S::zero());
            }
        }
        Ok(pattern)
    }
}
