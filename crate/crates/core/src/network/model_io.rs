//! JSON weight document.
//!
//! ```json
//! {"input_dim": 1,
//!  "layers": [{"weights": [[1.0], [1.0]], "bias": [0.0, -0.5], "activation": "relu"},
//!             {"weights": [[1.0, 1.0]], "bias": [0.0], "activation": "identity"}]}
//! ```
//!
//! `weights[i][j]` is the weight from input `j` to neuron `i`. The last layer is
//! the output layer. Numbers are written in shortest round-trip form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ActivationKind, Layer, Mlp, ModelError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: ActivationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub input_dim: usize,
    pub layers: Vec<LayerDoc>,
}

impl ModelDoc {
    pub fn into_mlp<S: Scalar>(self) -> Result<Mlp<S>, ModelError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, doc) in self.layers.into_iter().enumerate() {
            // NaN cannot appear in JSON text, but overflow on narrowing can.
            let rows: Vec<Vec<S>> = doc
                .weights
                .iter()
                .map(|r| r.iter().map(|&w| S::lit(w)).collect())
                .collect();
            let bias = doc.bias.iter().map(|&b| S::lit(b)).collect();
            let layer = Layer::new(rows, bias, doc.activation)
                .map_err(|detail| ModelError::DimensionMismatch { layer: k, detail })?;
            layers.push(layer);
        }
        Mlp::new(self.input_dim, layers)
    }

    pub fn from_mlp<S: Scalar>(net: &Mlp<S>) -> Self {
        Self {
            input_dim: net.input_dim(),
            layers: net
                .layers()
                .iter()
                .map(|l| LayerDoc {
                    weights: (0..l.out_dim())
                        .map(|i| l.row(i).iter().map(|w| w.to_f64_lossy()).collect())
                        .collect(),
                    bias: l.bias().iter().map(|b| b.to_f64_lossy()).collect(),
                    activation: l.activation(),
                })
                .collect(),
        }
    }
}

/// Reads and validates a weight document.
pub fn load_model<S: Scalar, R: Read>(source: R) -> Result<Mlp<S>, ModelError> {
    let doc: ModelDoc = serde_json::from_reader(source)?;
    doc.into_mlp()
}

pub fn save_model<S: Scalar, W: Write>(net: &Mlp<S>, mut sink: W) -> Result<(), ModelError> {
    serde_json::to_writer(&mut sink, &ModelDoc::from_mlp(net))?;
    sink.write_all(b"\n")?;
    Ok(())
}
