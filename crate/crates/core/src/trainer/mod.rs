//! Minibatch SGD on synthetic 2-D tasks, with an optional folding penalty.

mod backprop;
mod data;
mod penalty;

pub use backprop::Gradients;
pub use data::{init_network, make_dataset, SyntheticTask};
pub use penalty::{
    penalty_of, penalty_value_and_grad, soft_hamming, soft_pattern, PenaltyConfig, PenaltyEval,
};

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::network::{ActivationKind, Mlp, ModelError};
use crate::scalar::Scalar;
use backprop::{backward, softmax_cross_entropy};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown task '{0}' (expected two_gaussians, xor_quadrants or concentric_rings)")]
    UnknownTask(String),
    #[error("malformed config file: {0}")]
    ConfigSyntax(#[from] toml::de::Error),
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub task: SyntheticTask,
    pub n_samples: usize,
    #[serde(default)]
    pub noise: f64,
}

/// Training run description, read from a TOML file:
///
/// ```toml
/// layer_widths = [2, 8, 2]
/// activation = "relu"
/// epochs = 200
/// lr = 0.1
/// batch_size = 16
/// seed = 7
///
/// [dataset]
/// task = "two_gaussians"
/// n_samples = 200
/// noise = 0.2
///
/// [penalty]          # optional
/// lambda = 0.1
/// beta = 10.0
/// tau = 0.1
/// every_n_epochs = 5
/// phi_budget = 16
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Every layer width, input and output included.
    pub layer_widths: Vec<usize>,
    pub activation: ActivationKind,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub penalty: Option<PenaltyConfig>,
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self, TrainError> {
        let config: TrainConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: String| Err(TrainError::InvalidConfig(what));
        if self.layer_widths.len() < 2 || self.layer_widths.contains(&0) {
            return bad(format!("layer widths must be positive, got {:?}", self.layer_widths));
        }
        if self.layer_widths[0] != 2 {
            return bad(format!("synthetic tasks are 2-D, input width is {}", self.layer_widths[0]));
        }
        if *self.layer_widths.last().unwrap() < 2 {
            return bad("output width must cover both classes".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.dataset.n_samples < 4 {
            return bad(format!("n_samples must be at least 4, got {}", self.dataset.n_samples));
        }
        if let Some(p) = &self.penalty {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's minibatch passes, plus the penalty
    /// value on penalty epochs.
    pub loss: f64,
    /// Training accuracy after the epoch's updates.
    pub accuracy: f64,
    pub phi: Option<f64>,
    pub penalty: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn final_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |r| r.accuracy)
    }

    /// CSV with columns `epoch,loss,accuracy,phi,penalty`; the last two are
    /// empty on epochs without a penalty evaluation.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(["epoch", "loss", "accuracy", "phi", "penalty"])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.epochs {
            writer.write_record([
                r.epoch.to_string(),
                r.loss.to_string(),
                r.accuracy.to_string(),
                opt(r.phi),
                opt(r.penalty),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Fraction of samples whose arg-max logit equals their label.
pub fn accuracy<S: Scalar>(net: &Mlp<S>, data: &LabeledDataset<S>) -> Result<f64, ModelError> {
    let mut correct = 0usize;
    for (x, &label) in data.inputs().iter().zip(data.labels()) {
        let out = net.forward(x)?.output;
        let best = out
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > out[best] { i } else { best });
        correct += usize::from(best == label as usize);
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Draws `count` ordered pairs of samples with different labels.
fn draw_probe_pairs<S: Scalar>(
    data: &LabeledDataset<S>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(Vec<S>, Vec<S>)> {
    let n = data.len();
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if data.labels()[a] != data.labels()[b] {
            pairs.push((data.inputs()[a].clone(), data.inputs()[b].clone()));
        }
    }
    pairs
}

/// Trains a fresh network on `data` as described by `config`.
///
/// Randomness: the network is initialized from `seed`; minibatch order uses
/// `ChaCha8` stream 0 of `seed` and penalty probes use stream 1, so the
/// penalty never perturbs the batch order. A zero `lambda` skips penalty
/// evaluation entirely.
pub fn train_on<S: Scalar>(
    config: &TrainConfig,
    data: &LabeledDataset<S>,
) -> Result<(Mlp<S>, TrainHistory), TrainError> {
    config.validate()?;
    let out_dim = *config.layer_widths.last().unwrap();
    if let Some(&bad) = data.classes().iter().find(|&&c| c as usize >= out_dim) {
        return Err(TrainError::InvalidConfig(format!(
            "label {bad} does not fit an output layer of width {out_dim}"
        )));
    }
    let penalty = config.penalty.filter(|p| p.lambda > 0.0);
    if penalty.is_some() && data.num_classes() < 2 {
        return Err(TrainError::InvalidConfig("penalty needs at least two classes".into()));
    }

    let mut net = init_network::<S>(&config.layer_widths, config.activation, config.seed)?;
    let mut batch_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut probe_rng = ChaCha8Rng::seed_from_u64(config.seed);
    probe_rng.set_stream(1);
    let lr = S::lit(config.lr);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut batch_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::zeros(&net);
            for &i in batch {
                let trace = net.trace(&data.inputs()[i])?;
                let logits = trace.post.last().expect("at least one layer");
                let (loss, dlogits) = softmax_cross_entropy(logits, data.labels()[i] as usize);
                loss_sum += loss.to_f64_lossy();
                let mut post_grads: Vec<Vec<S>> =
                    trace.post.iter().map(|p| vec![S::zero(); p.len()]).collect();
                *post_grads.last_mut().unwrap() = dlogits;
                backward(&net, &trace, &post_grads, &mut grads);
            }
            grads.scale(S::one() / S::lit(batch.len() as f64));
            grads.apply_sgd(&mut net, lr);
        }
        let mut loss = loss_sum / data.len() as f64;

        let (mut phi, mut penalty_value) = (None, None);
        if let Some(p) = penalty.filter(|p| epoch % p.every_n_epochs == 0) {
            let probes = draw_probe_pairs(data, p.phi_budget, &mut probe_rng);
            let eval = penalty_value_and_grad(&net, &probes, &p)?;
            eval.gradient.apply_sgd(&mut net, lr);
            let value = eval.value.to_f64_lossy();
            loss += value;
            phi = Some(eval.phi.to_f64_lossy());
            penalty_value = Some(value);
        }

        if !loss.is_finite() || net.parameters().iter().any(|v| !v.is_finite()) {
            return Err(TrainError::Diverged { epoch, loss });
        }
        history.epochs.push(EpochRecord {
            epoch,
            loss,
            accuracy: accuracy(&net, data)?,
            phi,
            penalty: penalty_value,
        });
    }
    Ok((net, history))
}

/// Generates the configured synthetic dataset and trains on it.
pub fn train<S: Scalar>(config: &TrainConfig) -> Result<(Mlp<S>, TrainHistory), TrainError> {
    config.validate()?;
    let data = make_dataset::<S>(
        config.dataset.task,
        config.dataset.n_samples,
        config.dataset.noise,
        config.seed,
    )?;
    train_on(config, &data)
}
