//! Differentiable folding penalty `λ / (Φ̃ + 1)²`.
//!
//! Hard activation patterns are piecewise constant in the weights, so the
//! penalty relaxes them: each hidden post-activation `a` becomes
//! `sigmoid(a / τ)`, distances become `Σ |p_i - q_i|`, and the maximum in
//! `r1` becomes a log-sum-exp at temperature `β`. Each probe pair is walked
//! at fixed equidistant points; `Φ̃` is the mean smooth folding value over
//! the usable probe pairs.

use serde::{Deserialize, Serialize};

use super::backprop::{backward, Gradients};
use super::TrainError;
use crate::network::{sigmoid, Mlp, ModelError, Trace};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    pub lambda: f64,
    /// Log-sum-exp temperature.
    pub beta: f64,
    /// Logistic temperature of the soft binarization.
    pub tau: f64,
    #[serde(default = "default_every_n_epochs")]
    pub every_n_epochs: usize,
    /// Inter-class probe pairs drawn per penalty epoch.
    #[serde(default = "default_phi_budget")]
    pub phi_budget: usize,
    /// Equidistant points per probe segment, endpoints included.
    #[serde(default = "default_probe_points")]
    pub probe_points: usize,
}

fn default_every_n_epochs() -> usize {
    5
}

fn default_phi_budget() -> usize {
    16
}

fn default_probe_points() -> usize {
    16
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            beta: 10.0,
            tau: 0.1,
            every_n_epochs: default_every_n_epochs(),
            phi_budget: default_phi_budget(),
            probe_points: default_probe_points(),
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::InvalidConfig(format!("penalty: {what}")));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        if self.every_n_epochs == 0 {
            return bad("every_n_epochs must be at least 1");
        }
        if self.phi_budget == 0 {
            return bad("phi_budget must be at least 1");
        }
        if self.probe_points < 2 {
            return bad("probe_points must be at least 2");
        }
        Ok(())
    }
}

/// `λ / (Φ + 1)²`
pub fn penalty_of<S: Scalar>(lambda: S, phi: S) -> S {
    let denom = phi + S::one();
    lambda / (denom * denom)
}

fn soft_bits<S: Scalar>(net: &Mlp<S>, trace: &Trace<S>, inv_tau: S) -> Vec<S> {
    trace.post[..net.layers().len() - 1]
        .iter()
        .flatten()
        .map(|&a| sigmoid(a * inv_tau))
        .collect()
}

/// Logistic relaxation of the activation pattern at temperature `tau`.
pub fn soft_pattern<S: Scalar>(net: &Mlp<S>, x: &[S], tau: S) -> Result<Vec<S>, TrainError> {
    if !(tau > S::zero() && tau.is_finite()) {
        return Err(TrainError::InvalidConfig(format!("tau must be positive, got {tau}")));
    }
    let trace = net.trace(x)?;
    Ok(soft_bits(net, &trace, S::one() / tau))
}

/// `Σ |p_i - q_i|`
pub fn soft_hamming<S: Scalar>(p: &[S], q: &[S]) -> S {
    p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum()
}

fn sign<S: Scalar>(v: S) -> S {
    if v > S::zero() {
        S::one()
    } else if v < S::zero() {
        -S::one()
    } else {
        S::zero()
    }
}

#[derive(Debug, Clone)]
pub struct PenaltyEval<S> {
    pub value: S,
    /// Smooth global folding estimate `Φ̃`.
    pub phi: S,
    pub gradient: Gradients<S>,
    /// Probe pairs used for the estimate.
    pub used: usize,
    /// Probe pairs skipped for identical endpoints or zero travelled
    /// distance.
    pub skipped: usize,
}

struct ProbeWalk<S> {
    traces: Vec<Trace<S>>,
    soft: Vec<Vec<S>>,
    r1: S,
    r2: S,
    /// softmax weights of the log-sum-exp over distances to the start
    weights: Vec<S>,
}

fn walk_probe<S: Scalar>(
    net: &Mlp<S>,
    a: &[S],
    b: &[S],
    cfg: &PenaltyConfig,
) -> Result<Option<ProbeWalk<S>>, ModelError> {
    if a == b {
        return Ok(None);
    }
    let inv_tau = S::lit(1.0 / cfg.tau);
    let beta = S::lit(cfg.beta);
    let k = cfg.probe_points;
    let mut traces = Vec::with_capacity(k);
    for i in 0..k {
        let t = S::lit(i as f64 / (k - 1) as f64);
        let x: Vec<S> = a.iter().zip(b).map(|(&u, &v)| u + t * (v - u)).collect();
        traces.push(net.trace(&x)?);
    }
    let soft: Vec<Vec<S>> = traces.iter().map(|tr| soft_bits(net, tr, inv_tau)).collect();
    let r2: S = soft.windows(2).map(|w| soft_hamming(&w[0], &w[1])).sum();
    if r2 <= S::zero() {
        return Ok(None);
    }
    let dist: Vec<S> = soft.iter().map(|s| soft_hamming(&soft[0], s)).collect();
    let max = dist.iter().copied().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = dist.iter().map(|&d| (beta * (d - max)).exp()).collect();
    let sum: S = exps.iter().copied().sum();
    let r1 = max + sum.ln() / beta;
    let weights = exps.into_iter().map(|e| e / sum).collect();
    Ok(Some(ProbeWalk {
        traces,
        soft,
        r1,
        r2,
        weights,
    }))
}

/// Penalty value and its exact gradient over all weights and biases.
pub fn penalty_value_and_grad<S: Scalar>(
    net: &Mlp<S>,
    probe_pairs: &[(Vec<S>, Vec<S>)],
    cfg: &PenaltyConfig,
) -> Result<PenaltyEval<S>, TrainError> {
    cfg.validate()?;
    if probe_pairs.is_empty() {
        return Err(TrainError::InvalidConfig("no probe pairs".into()));
    }
    let lambda = S::lit(cfg.lambda);
    let mut walks = Vec::with_capacity(probe_pairs.len());
    for (a, b) in probe_pairs {
        if let Some(walk) = walk_probe(net, a, b, cfg)? {
            walks.push(walk);
        }
    }
    let skipped = probe_pairs.len() - walks.len();
    let mut gradient = Gradients::zeros(net);
    if walks.is_empty() {
        return Ok(PenaltyEval {
            value: penalty_of(lambda, S::zero()),
            phi: S::zero(),
            gradient,
            used: 0,
            skipped,
        });
    }

    let used = S::lit(walks.len() as f64);
    let phi = walks.iter().map(|w| S::one() - w.r1 / w.r2).sum::<S>() / used;
    let value = penalty_of(lambda, phi);
    if cfg.lambda == 0.0 {
        return Ok(PenaltyEval {
            value,
            phi,
            gradient,
            used: walks.len(),
            skipped,
        });
    }

    let denom = phi + S::one();
    let d_phi = -(S::lit(2.0) * lambda) / (denom * denom * denom);
    let inv_tau = S::lit(1.0 / cfg.tau);
    let hidden_layers = net.layers().len() - 1;

    for walk in &walks {
        let d_chi = d_phi / used;
        let d_r1 = -d_chi / walk.r2;
        let d_r2 = d_chi * walk.r1 / (walk.r2 * walk.r2);
        let n_points = walk.soft.len();
        let width = walk.soft[0].len();
        // derivative of the penalty with respect to every soft bit
        let mut d_soft = vec![vec![S::zero(); width]; n_points];
        for i in 1..n_points {
            let w = d_r1 * walk.weights[i];
            for n in 0..width {
                let s = sign(walk.soft[0][n] - walk.soft[i][n]);
                d_soft[0][n] = d_soft[0][n] + w * s;
                d_soft[i][n] = d_soft[i][n] - w * s;
            }
        }
        for i in 0..n_points - 1 {
            for n in 0..width {
                let s = d_r2 * sign(walk.soft[i][n] - walk.soft[i + 1][n]);
                d_soft[i][n] = d_soft[i][n] + s;
                d_soft[i + 1][n] = d_soft[i + 1][n] - s;
            }
        }
        for ((trace, soft), d) in walk.traces.iter().zip(&walk.soft).zip(&d_soft) {
            let mut post_grads: Vec<Vec<S>> = trace.post.iter().map(|p| vec![S::zero(); p.len()]).collect();
            let mut offset = 0;
            for layer_grad in post_grads.iter_mut().take(hidden_layers) {
                for g in layer_grad.iter_mut() {
                    let s = soft[offset];
                    *g = d[offset] * s * (S::one() - s) * inv_tau;
                    offset += 1;
                }
            }
            backward(net, trace, &post_grads, &mut gradient);
        }
    }

    Ok(PenaltyEval {
        value,
        phi,
        gradient,
        used: walks.len(),
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ActivationKind, Layer};
    use crate::trainer::init_network;

    fn cfg(lambda: f64) -> PenaltyConfig {
        PenaltyConfig {
            lambda,
            beta: 5.0,
            tau: 0.5,
            every_n_epochs: 1,
            phi_budget: 4,
            probe_points: 9,
        }
    }

    fn probes() -> Vec<(Vec<f64>, Vec<f64>)> {
        vec![
            (vec![-0.9, -0.4], vec![0.8, 0.7]),
            (vec![0.6, -0.8], vec![-0.5, 0.9]),
            (vec![-0.2, 0.9], vec![0.3, -0.95]),
        ]
    }

    #[test]
    fn soft_pattern_basics() {
        let net = init_network::<f64>(&[2, 4, 2], ActivationKind::Tanh, 2).unwrap();
        let soft = soft_pattern(&net, &[0.0, 0.0], 0.3).unwrap();
        // zero input and zero biases: every post-activation is 0
        assert!(soft.iter().all(|&s| s == 0.5));
        assert!(soft_pattern(&net, &[0.1, 0.2], 0.0).is_err());
        assert!(soft_pattern(&net, &[0.1, 0.2], -1.0).is_err());

        let x = [0.7, -0.2];
        let hard = net.activation_pattern(&x).unwrap();
        let soft = soft_pattern(&net, &x, 1e-6).unwrap();
        for (bit, s) in hard.iter().zip(soft) {
            assert!((s - if bit { 1.0 } else { 0.0 }).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_lambda_is_inert() {
        let net = init_network::<f64>(&[2, 4, 2], ActivationKind::ReLU, 2).unwrap();
        let eval = penalty_value_and_grad(&net, &probes(), &cfg(0.0)).unwrap();
        assert_eq!(eval.value, 0.0);
        assert!(eval.gradient.is_zero());
    }

    #[test]
    fn single_region_gives_full_pressure() {
        let net = Mlp::new(
            2,
            vec![
                Layer::new(vec![vec![0.0, 0.0]; 3], vec![-1.0; 3], ActivationKind::ReLU).unwrap(),
                Layer::new(vec![vec![1.0, 1.0, 1.0]], vec![0.0], ActivationKind::Identity).unwrap(),
            ],
        )
        .unwrap();
        let eval = penalty_value_and_grad(&net, &probes(), &cfg(0.3)).unwrap();
        // constant soft patterns travel no distance: all probes skipped, Φ̃ = 0
        assert_eq!((eval.used, eval.skipped), (0, 3));
        assert_eq!(eval.value, 0.3);
    }

    #[test]
    fn identical_endpoints_are_skipped() {
        let net = init_network::<f64>(&[2, 4, 2], ActivationKind::ReLU, 2).unwrap();
        let mut pairs = probes();
        pairs.push((vec![0.1, 0.1], vec![0.1, 0.1]));
        let eval = penalty_value_and_grad(&net, &pairs, &cfg(1.0)).unwrap();
        assert_eq!(eval.skipped, 1);
        assert!(penalty_value_and_grad(&net, &[], &cfg(1.0)).is_err());
    }

    #[test]
    fn penalty_decreases_in_phi() {
        let values: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|&p| penalty_of(1.0, p)).collect();
        assert!(values[0] > values[1] && values[1] > values[2]);
        assert_eq!(values[0], 1.0);
        assert_eq!(values[2], 0.25);
    }

    #[test]
    fn gradient_matches_central_differences() {
        for kind in [ActivationKind::ReLU, ActivationKind::Tanh, ActivationKind::GELU] {
            let net = init_network::<f64>(&[2, 4, 2], kind, 31).unwrap();
            let c = cfg(0.7);
            let eval = penalty_value_and_grad(&net, &probes(), &c).unwrap();
            let analytic = eval.gradient.flatten();
            assert!(analytic.iter().any(|g| g.abs() > 1e-6), "{kind}: gradient vanished");
            let params = net.parameters();
            let h = 1e-5;
            for (i, &g) in analytic.iter().enumerate() {
                let mut probe = net.clone();
                let mut p = params.clone();
                p[i] += h;
                probe.set_parameters(&p);
                let up = penalty_value_and_grad(&probe, &probes(), &c).unwrap().value;
                p[i] -= 2.0 * h;
                probe.set_parameters(&p);
                let down = penalty_value_and_grad(&probe, &probes(), &c).unwrap().value;
                let fd = (up - down) / (2.0 * h);
                assert!((g - fd).abs() <= 1e-4, "{kind} param {i}: {g} vs {fd}");
            }
        }
    }
}
