//! Independent reference implementations used by the property and
//! acceptance suites.

use foldscope::folding::{chi, is_monotone, r1, r2, smooth_r1};
use foldscope::network::{hamming, ActivationKind, ActivationPattern, Mlp};
use foldscope::sampler::sample_adaptive;
use foldscope::stats::mann_whitney_u;
use foldscope::Fraction;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

fn naive_hamming(p: &ActivationPattern, q: &ActivationPattern) -> u64 {
    p.iter().zip(q.iter()).filter(|(a, b)| a != b).count() as u64
}

/// chi by direct evaluation of the max/sum definition.
pub fn naive_chi(path: &[ActivationPattern]) -> Fraction {
    let far = path.iter().map(|p| naive_hamming(&path[0], p)).max().unwrap_or(0);
    let total: u64 = path.windows(2).map(|w| naive_hamming(&w[0], &w[1])).sum();
    if total == 0 {
        Fraction::ZERO
    } else {
        Fraction::new(total - far, total)
    }
}

fn reversed(path: &[ActivationPattern]) -> Vec<ActivationPattern> {
    path.iter().rev().cloned().collect()
}

pub fn check_range(path: &[ActivationPattern]) -> Check {
    let c = chi(path).map_err(|e| e.to_string())?;
    if c != naive_chi(path) {
        return Err(format!("{path:?}: chi {c} differs from direct evaluation"));
    }
    if c.numer() > c.denom() {
        return Err(format!("{path:?}: chi {c} above 1"));
    }
    Ok(())
}

/// Repeating a random pattern in place leaves r1, r2 and chi unchanged.
pub fn check_duplicate_insertion(path: &[ActivationPattern], rng: &mut ChaCha8Rng) -> Check {
    let mut padded = path.to_vec();
    for _ in 0..rng.gen_range(1..=3) {
        let at = rng.gen_range(0..padded.len());
        let copy = padded[at].clone();
        padded.insert(at, copy);
    }
    let same = r1(path) == r1(&padded) && r2(path) == r2(&padded) && chi(path) == chi(&padded);
    if same {
        Ok(())
    } else {
        Err(format!("{path:?} vs {padded:?}"))
    }
}

/// Flat implies monotone distance from the start.
pub fn check_flat_implies_monotone(path: &[ActivationPattern]) -> Check {
    let flat = chi(path).unwrap().is_zero();
    if flat && !is_monotone(path).unwrap() {
        return Err(format!("{path:?}: flat but not monotone"));
    }
    Ok(())
}

/// Flat iff monotone.
pub fn check_flat_iff_monotone(path: &[ActivationPattern]) -> Check {
    let flat = chi(path).unwrap().is_zero();
    let monotone = is_monotone(path).unwrap();
    if flat != monotone {
        return Err(format!("{path:?}: flat={flat} monotone={monotone}"));
    }
    Ok(())
}

pub fn check_reverse_flatness(path: &[ActivationPattern]) -> Check {
    let back = reversed(path);
    if chi(path).unwrap().is_zero() != chi(&back).unwrap().is_zero() {
        return Err(format!("{path:?}: flatness changes under reversal"));
    }
    Ok(())
}

pub fn check_r2_reversal(path: &[ActivationPattern]) -> Check {
    if r2(path).unwrap() != r2(&reversed(path)).unwrap() {
        return Err(format!("{path:?}: r2 changes under reversal"));
    }
    Ok(())
}

pub fn check_lse_sandwich(path: &[ActivationPattern], beta: f64) -> Check {
    let hard = r1(path).unwrap() as f64;
    let soft = smooth_r1(path, beta).unwrap();
    let upper = hard + (path.len() as f64).ln() / beta;
    let slack = 1e-12 * (1.0 + upper);
    if soft < hard - slack || soft > upper + slack {
        return Err(format!("{path:?}, beta {beta}: {hard} <= {soft} <= {upper} violated"));
    }
    Ok(())
}

/// Alternating path between two patterns at distance `c`.
pub fn looped_path(m: usize, c: usize) -> Vec<ActivationPattern> {
    let a = ActivationPattern::zeros(c.max(1));
    let b = ActivationPattern::from_bools((0..c.max(1)).map(|i| i < c));
    (0..m).map(|i| if i % 2 == 0 { a.clone() } else { b.clone() }).collect()
}

/// Mann–Whitney U of `xs` by counting winning pairs.
pub fn brute_force_u(xs: &[f64], ys: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in xs {
        for y in ys {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

pub fn check_mann_whitney(xs: &[f64], ys: &[f64]) -> Check {
    let rank = mann_whitney_u(xs, ys).map_err(|e| e.to_string())?.u_statistic;
    let count = brute_force_u(xs, ys);
    if rank != count {
        return Err(format!("{xs:?} vs {ys:?}: rank U {rank}, pair count {count}"));
    }
    Ok(())
}

/// Small sample with deliberately frequent ties.
pub fn tied_sample(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.gen_range(1..=12);
    (0..n).map(|_| rng.gen_range(0..6) as f64 * 0.5).collect()
}

/// Patterns visited along `x1 → x2` for a 1-D input, 1-hidden-layer ReLU
/// net, from the closed-form crossing parameters. `None` when two crossings
/// (or a crossing and an endpoint) lie closer than `gap`, or a neuron is
/// exactly at zero on an endpoint.
pub fn analytic_regions(net: &Mlp<f64>, x1: f64, x2: f64, gap: f64) -> Option<Vec<String>> {
    let layer = &net.layers()[0];
    let n = layer.out_dim();
    let mut bits: Vec<bool> = (0..n).map(|i| layer.weight(i, 0) * x1 + layer.bias()[i] > 0.0).collect();
    let mut crossings: Vec<(f64, usize)> = Vec::new();
    for i in 0..n {
        let (w, b) = (layer.weight(i, 0), layer.bias()[i]);
        let at_start = w * x1 + b;
        let at_end = w * x2 + b;
        if at_start == 0.0 || at_end == 0.0 {
            return None;
        }
        if (at_start > 0.0) != (at_end > 0.0) {
            let x = -b / w;
            crossings.push(((x - x1) / (x2 - x1), i));
        }
    }
    crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut marks: Vec<f64> = vec![0.0];
    marks.extend(crossings.iter().map(|c| c.0));
    marks.push(1.0);
    if marks.windows(2).any(|w| w[1] - w[0] < gap) {
        return None;
    }
    let show = |bits: &[bool]| bits.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
    let mut regions = vec![show(&bits)];
    for (_, i) in crossings {
        bits[i] = !bits[i];
        regions.push(show(&bits));
    }
    Some(regions)
}

/// Compares the adaptive sampler against the analytic region sequence on one
/// random net; `Ok(false)` when the draw has crossings too close together.
pub fn check_sampler_oracle(rng: &mut ChaCha8Rng, delta_min: f64) -> Result<bool, String> {
    let width = rng.gen_range(1..=12);
    let net = super::random_net(rng, 1, &[width], ActivationKind::ReLU);
    let x1 = rng.gen_range(-3.0..-0.5);
    let x2 = rng.gen_range(0.5..3.0);
    let Some(expected) = analytic_regions(&net, x1, x2, 10.0 * delta_min) else {
        return Ok(false);
    };
    let path = sample_adaptive(&net, &[x1], &[x2], 1e-2, delta_min).map_err(|e| e.to_string())?;
    let got: Vec<String> = path.patterns().iter().map(|p| p.to_string()).collect();
    if got != expected {
        return Err(format!("segment {x1}..{x2}: sampled {got:?}, analytic {expected:?}"));
    }
    if path.stats().jumps_accepted_at_dmin != 0 {
        return Err(format!("segment {x1}..{x2}: unexpected jumps {:?}", path.stats()));
    }
    Ok(true)
}

/// ReLU pattern from post-activations equals the one from pre-activation
/// signs.
pub fn check_pre_post(net: &Mlp<f64>, x: &[f64]) -> Check {
    let trace = net.trace(x).map_err(|e| e.to_string())?;
    let hidden = net.layers().len() - 1;
    let from_pre =
        ActivationPattern::from_bools(trace.pre[..hidden].iter().flatten().map(|&v| v > 0.0));
    let from_post = net.activation_pattern(x).map_err(|e| e.to_string())?;
    if from_pre != from_post || hamming(&from_pre, &from_post).ok() != Some(0) {
        return Err(format!("x = {x:?}: pre {from_pre} post {from_post}"));
    }
    Ok(())
}

/// Full-batch gradient descent logistic regression on 2 classes; returns
/// training accuracy.
pub fn logistic_regression_accuracy(inputs: &[Vec<f64>], labels: &[u32], iterations: usize) -> f64 {
    let dim = inputs[0].len();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let n = inputs.len() as f64;
    for _ in 0..iterations {
        let mut gw = vec![0.0; dim];
        let mut gb = 0.0;
        for (x, &y) in inputs.iter().zip(labels) {
            let z: f64 = w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b;
            let err = 1.0 / (1.0 + (-z).exp()) - y as f64;
            for (g, v) in gw.iter_mut().zip(x) {
                *g += err * v;
            }
            gb += err;
        }
        for (a, g) in w.iter_mut().zip(&gw) {
            *a -= 0.5 * g / n;
        }
        b -= 0.5 * gb / n;
    }
    let correct = inputs
        .iter()
        .zip(labels)
        .filter(|(x, &y)| {
            let z: f64 = w.iter().zip(x.iter()).map(|(a, v)| a * v).sum::<f64>() + b;
            (z > 0.0) == (y == 1)
        })
        .count();
    correct as f64 / n
}

/// Central finite differences of the penalty against its analytic gradient;
/// returns the largest deviation relative to the largest gradient entry.
pub fn penalty_gradient_error(
    net: &Mlp<f64>,
    probes: &[(Vec<f64>, Vec<f64>)],
    cfg: &foldscope::trainer::PenaltyConfig,
    step: f64,
) -> Result<f64, String> {
    use foldscope::trainer::penalty_value_and_grad;
    let eval = penalty_value_and_grad(net, probes, cfg).map_err(|e| e.to_string())?;
    let analytic = eval.gradient.flatten();
    let params = net.parameters();
    let mut probe_net = net.clone();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..params.len() {
        let mut shifted = params.clone();
        shifted[i] = params[i] + step;
        probe_net.set_parameters(&shifted);
        let up = penalty_value_and_grad(&probe_net, probes, cfg).map_err(|e| e.to_string())?.value;
        shifted[i] = params[i] - step;
        probe_net.set_parameters(&shifted);
        let down = penalty_value_and_grad(&probe_net, probes, cfg).map_err(|e| e.to_string())?.value;
        let numeric = (up - down) / (2.0 * step);
        worst = worst.max((numeric - analytic[i]).abs());
        scale = scale.max(numeric.abs()).max(analytic[i].abs());
    }
    Ok(if scale == 0.0 { worst } else { worst / scale })
}
