#![allow(dead_code)]

pub mod oracles;

use foldscope::network::{ActivationKind, ActivationPattern, Layer, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pat(s: &str) -> ActivationPattern {
    s.parse().unwrap()
}

pub fn pats(bits: &[&str]) -> Vec<ActivationPattern> {
    bits.iter().map(|s| pat(s)).collect()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Dense net with standard normal weights and biases.
pub fn random_net(
    rng: &mut ChaCha8Rng,
    input_dim: usize,
    hidden: &[usize],
    activation: ActivationKind,
) -> Mlp<f64> {
    let mut layers = Vec::new();
    let mut width = input_dim;
    for &h in hidden.iter().chain(std::iter::once(&1)) {
        let rows = (0..h).map(|_| (0..width).map(|_| normal(rng)).collect()).collect();
        let bias = (0..h).map(|_| normal(rng)).collect();
        layers.push(Layer::new(rows, bias, activation).unwrap());
        width = h;
    }
    Mlp::new(input_dim, layers).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

pub fn random_pattern(rng: &mut ChaCha8Rng, bits: usize) -> ActivationPattern {
    ActivationPattern::from_bools((0..bits).map(|_| rng.gen_bool(0.5)))
}

/// Random path without consecutive duplicates; transitions may flip any
/// number of bits.
pub fn random_path(rng: &mut ChaCha8Rng) -> Vec<ActivationPattern> {
    let bits = rng.gen_range(1..=10);
    let len = rng.gen_range(1..=16);
    let mut path: Vec<ActivationPattern> = vec![random_pattern(rng, bits)];
    while path.len() < len {
        let next = random_pattern(rng, bits);
        if &next != path.last().unwrap() {
            path.push(next);
        }
    }
    path
}

/// Random walk on the hypercube flipping exactly one bit per step.
pub fn random_unit_walk(rng: &mut ChaCha8Rng) -> Vec<ActivationPattern> {
    let bits = rng.gen_range(1..=10);
    let len = rng.gen_range(1..=16);
    let mut path = vec![random_pattern(rng, bits)];
    while path.len() < len {
        let mut next = path.last().unwrap().clone();
        let i = rng.gen_range(0..bits);
        next.set(i, !next.get(i));
        path.push(next);
    }
    path
}

/// Monotone unit walk: every step moves one bit further from the start.
pub fn random_monotone_walk(rng: &mut ChaCha8Rng) -> Vec<ActivationPattern> {
    let bits = rng.gen_range(1..=10);
    let start = random_pattern(rng, bits);
    let mut order: Vec<usize> = (0..bits).collect();
    for i in (1..bits).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let steps = rng.gen_range(0..=bits);
    let mut path = vec![start];
    for &i in &order[..steps] {
        let mut next = path.last().unwrap().clone();
        next.set(i, !next.get(i));
        path.push(next);
    }
    path
}

/// `W=[[1],[1]], b=[0,-0.5]`, ReLU; crossings at x = 0 and x = 0.5.
pub const TWO_NEURON_DOC: &str = r#"{"input_dim": 1, "layers": [
  {"weights": [[1.0], [1.0]], "bias": [0.0, -0.5], "activation": "relu"},
  {"weights": [[1.0, 1.0]], "bias": [0.0], "activation": "identity"}]}"#;

/// Zero weights and negative biases: one region everywhere.
pub const DEAD_DOC: &str = r#"{"input_dim": 2, "layers": [
  {"weights": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]], "bias": [-1.0, -0.5, -2.0], "activation": "relu"},
  {"weights": [[1.0, 1.0, 1.0]], "bias": [0.0], "activation": "identity"}]}"#;

/// Three-neuron net whose walk from x = 0 to x = 4 visits the sub-additivity
/// counterexample path 000, 001, 111, 101 with its bits stored in the order
/// (1, 3, 2).
///
/// Layer 1 (tanh): A = tanh(x - 2), C = tanh(x - 1), switching at x = 2 and
/// x = 1. Layer 2 (ReLU): B = relu(wA·A + C - tanh 1) with
/// wA = -(tanh 2 - tanh 1)/tanh 1. B's pre-activation is exactly zero at
/// x = 2 (switching on together with A) and returns to zero at x = 3.
pub fn folded_fixture_doc() -> String {
    let (t1, t2) = (1f64.tanh(), 2f64.tanh());
    let wa = -(t2 - t1) / t1;
    serde_json::json!({
        "input_dim": 1,
        "layers": [
            {"weights": [[1.0], [1.0]], "bias": [-2.0, -1.0], "activation": "tanh"},
            {"weights": [[wa, 1.0]], "bias": [-t1], "activation": "relu"},
            {"weights": [[1.0]], "bias": [0.0], "activation": "identity"}
        ]
    })
    .to_string()
}

/// Maps a fixture pattern (bits stored as p1, p3, p2) to p1 p2 p3 order.
pub fn folded_bit_order(p: &ActivationPattern) -> String {
    [p.get(0), p.get(2), p.get(1)]
        .iter()
        .map(|&b| if b { '1' } else { '0' })
        .collect()
}
