//! Synthetic 2-D classification tasks and random initialization.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::dataset::LabeledDataset;
use crate::network::{ActivationKind, Layer, Mlp};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticTask {
    /// Clouds around `(-0.5, -0.5)` (label 0) and `(0.5, 0.5)` (label 1).
    TwoGaussians,
    /// Clouds around the four quadrant centers `(±0.5, ±0.5)`, labeled by
    /// whether the center's coordinates have opposite signs.
    XorQuadrants,
    /// Rings of radius 0.35 (label 0) and 0.8 (label 1).
    ConcentricRings,
}

impl SyntheticTask {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticTask::TwoGaussians => "two_gaussians",
            SyntheticTask::XorQuadrants => "xor_quadrants",
            SyntheticTask::ConcentricRings => "concentric_rings",
        }
    }
}

impl fmt::Display for SyntheticTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntheticTask {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            SyntheticTask::TwoGaussians,
            SyntheticTask::XorQuadrants,
            SyntheticTask::ConcentricRings,
        ]
        .into_iter()
        .find(|t| t.name() == s)
        .ok_or_else(|| TrainError::UnknownTask(s.to_string()))
    }
}

/// Deterministic balanced dataset in `[-1, 1]²`.
///
/// `noise` is the standard deviation of the Gaussian jitter around each
/// class's generator (center or ring radius); zero noise places every point
/// exactly on its generator. Sample `i` belongs to class `i % 2` (quadrant
/// `i % 4` for the XOR task).
pub fn make_dataset<S: Scalar>(
    task: SyntheticTask,
    n: usize,
    noise: f64,
    seed: u64,
) -> Result<LabeledDataset<S>, TrainError> {
    if n < 4 {
        return Err(TrainError::InvalidConfig(format!("need at least 4 samples, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(TrainError::InvalidConfig(format!("noise must be non-negative, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = |rng: &mut ChaCha8Rng| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        noise * z
    };
    let clamp = |v: f64| v.clamp(-1.0, 1.0);
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (point, label) = match task {
            SyntheticTask::TwoGaussians => {
                let label = (i % 2) as u32;
                let c = if label == 0 { -0.5 } else { 0.5 };
                ([c + jitter(&mut rng), c + jitter(&mut rng)], label)
            }
            SyntheticTask::XorQuadrants => {
                let (cx, cy) = [(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)][i % 4];
                let label = u32::from(cx * cy < 0.0);
                ([cx + jitter(&mut rng), cy + jitter(&mut rng)], label)
            }
            SyntheticTask::ConcentricRings => {
                let label = (i % 2) as u32;
                let radius = if label == 0 { 0.35 } else { 0.8 } + jitter(&mut rng);
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                ([radius * angle.cos(), radius * angle.sin()], label)
            }
        };
        inputs.push(point.iter().map(|&v| S::lit(clamp(v))).collect());
        labels.push(label);
    }
    LabeledDataset::new(inputs, labels).map_err(|e| TrainError::InvalidConfig(e.to_string()))
}

/// He-initialized network: weights `N(0, 2/fan_in)`, zero biases, identity
/// output layer.
///
/// `widths` lists every layer width including input and output.
pub fn init_network<S: Scalar>(
    widths: &[usize],
    activation: ActivationKind,
    seed: u64,
) -> Result<Mlp<S>, TrainError> {
    if widths.len() < 2 || widths.contains(&0) {
        return Err(TrainError::InvalidConfig(format!(
            "layer widths must list at least input and output, all positive; got {widths:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = widths.len() - 2;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            let rows = (0..fan_out)
                .map(|_| (0..fan_in).map(|_| S::lit(normal.sample(&mut rng))).collect())
                .collect();
            let act = if k == last { ActivationKind::Identity } else { activation };
            Layer::new(rows, vec![S::zero(); fan_out], act).expect("consistent shapes")
        })
        .collect();
    Mlp::new(widths[0], layers).map_err(|e| TrainError::InvalidConfig(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_with_four_points_is_the_canonical_table() {
        let data = make_dataset::<f64>(SyntheticTask::XorQuadrants, 4, 0.0, 3).unwrap();
        assert_eq!(
            data.inputs(),
            &[vec![0.5, 0.5], vec![-0.5, 0.5], vec![-0.5, -0.5], vec![0.5, -0.5]]
        );
        assert_eq!(data.labels(), &[0, 1, 0, 1]);
    }

    #[test]
    fn zero_noise_gaussians_sit_on_their_centers() {
        let data = make_dataset::<f64>(SyntheticTask::TwoGaussians, 100, 0.0, 1).unwrap();
        for (x, &label) in data.inputs().iter().zip(data.labels()) {
            let c = if label == 0 { -0.5 } else { 0.5 };
            assert_eq!(x, &vec![c, c]);
            // separated by the line x + y = 0
            assert_eq!(x[0] + x[1] > 0.0, label == 1);
        }
        assert_eq!(data.samples_of(0).len(), 50);
    }

    #[test]
    fn datasets_are_deterministic_and_bounded() {
        for task in [
            SyntheticTask::TwoGaussians,
            SyntheticTask::XorQuadrants,
            SyntheticTask::ConcentricRings,
        ] {
            let a = make_dataset::<f64>(task, 64, 0.3, 9).unwrap();
            let b = make_dataset::<f64>(task, 64, 0.3, 9).unwrap();
            assert_eq!(a, b);
            assert!(a.inputs().iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
            assert_ne!(a, make_dataset::<f64>(task, 64, 0.3, 10).unwrap());
        }
        assert!("spirals".parse::<SyntheticTask>().is_err());
        assert!(make_dataset::<f64>(SyntheticTask::TwoGaussians, 3, 0.0, 0).is_err());
    }

    #[test]
    fn init_shapes_and_determinism() {
        let net = init_network::<f64>(&[2, 8, 8, 2], ActivationKind::ReLU, 5).unwrap();
        assert_eq!(net.total_hidden(), 16);
        assert_eq!(net.layers()[2].activation(), ActivationKind::Identity);
        assert!(net.layers().iter().all(|l| l.bias().iter().all(|&b| b == 0.0)));
        assert_eq!(net, init_network::<f64>(&[2, 8, 8, 2], ActivationKind::ReLU, 5).unwrap());
        assert!(init_network::<f64>(&[2, 0, 2], ActivationKind::ReLU, 5).is_err());
        assert!(init_network::<f64>(&[2], ActivationKind::ReLU, 5).is_err());
    }
}
