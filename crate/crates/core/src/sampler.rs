//! Walking a straight input segment through activation regions.

use serde::{Deserialize, Serialize};

use crate::network::{hamming, ActivationPattern, Mlp, ModelError};
use crate::scalar::Scalar;

pub const DEFAULT_DELTA_INIT: f64 = 1e-2;
pub const DEFAULT_DELTA_MIN: f64 = 1e-9;

/// Step bounds of the adaptive sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub delta_init: f64,
    pub delta_min: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            delta_init: DEFAULT_DELTA_INIT,
            delta_min: DEFAULT_DELTA_MIN,
        }
    }
}

impl SamplerConfig {
    pub fn sample<S: Scalar>(&self, net: &Mlp<S>, x1: &[S], x2: &[S]) -> Result<PathSample, SampleError> {
        sample_adaptive(net, x1, x2, self.delta_init, self.delta_min)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SampleError {
    #[error("invalid step bounds: need 0 < delta_min ({delta_min}) <= delta_init ({delta_init}) <= 1")]
    InvalidStepBounds { delta_init: f64, delta_min: f64 },
    #[error("segment endpoints are identical")]
    IdenticalEndpoints,
    #[error("equidistant sampling needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("a path needs at least one pattern")]
    EmptyPath,
    #[error("consecutive patterns {0} and {} are equal", .0 + 1)]
    ConsecutiveDuplicate(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Cost counters of one sampler run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerStats {
    /// Forward evaluations, including the start point and refinements.
    pub total_steps: u64,
    pub halvings: u64,
    /// Transitions stored with Hamming distance above one because the step
    /// had already shrunk to `delta_min`.
    pub jumps_accepted_at_dmin: u64,
}

impl SamplerStats {
    fn merged(self, other: SamplerStats) -> SamplerStats {
        SamplerStats {
            total_steps: self.total_steps + other.total_steps,
            halvings: self.halvings + other.halvings,
            jumps_accepted_at_dmin: self.jumps_accepted_at_dmin + other.jumps_accepted_at_dmin,
        }
    }
}

/// Ordered activation patterns met along a segment, with the segment
/// parameter `t` at which each one was first recorded.
///
/// Consecutive patterns are always distinct and `entry_ts` is strictly
/// increasing from `0.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    entry_ts: Vec<f64>,
    patterns: Vec<ActivationPattern>,
    stats: SamplerStats,
}

impl PathSample {
    /// Builds a path from explicit patterns, spacing the entry parameters
    /// evenly as `i / n`.
    pub fn from_patterns(patterns: Vec<ActivationPattern>) -> Result<Self, SampleError> {
        let n = patterns.len();
        Self::new(
            (0..n).map(|i| i as f64 / n as f64).collect(),
            patterns,
            SamplerStats::default(),
        )
    }

    pub fn new(
        entry_ts: Vec<f64>,
        patterns: Vec<ActivationPattern>,
        stats: SamplerStats,
    ) -> Result<Self, SampleError> {
        if patterns.is_empty() {
            return Err(SampleError::EmptyPath);
        }
        if let Some(i) = patterns.windows(2).position(|w| w[0] == w[1]) {
            return Err(SampleError::ConsecutiveDuplicate(i));
        }
        assert_eq!(entry_ts.len(), patterns.len(), "one entry parameter per pattern");
        assert_eq!(entry_ts[0], 0.0, "paths start at t = 0");
        assert!(
            entry_ts.windows(2).all(|w| w[0] < w[1]),
            "entry parameters must be strictly increasing"
        );
        Ok(Self {
            entry_ts,
            patterns,
            stats,
        })
    }

    pub fn patterns(&self) -> &[ActivationPattern] {
        &self.patterns
    }

    pub fn entry_ts(&self) -> &[f64] {
        &self.entry_ts
    }

    pub fn stats(&self) -> SamplerStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn first(&self) -> &ActivationPattern {
        &self.patterns[0]
    }

    pub fn last(&self) -> &ActivationPattern {
        &self.patterns[self.patterns.len() - 1]
    }

    /// The same walk traversed from the other end.
    ///
    /// Region `i` occupies `[t_i, t_{i+1})`, so in the reversed walk it is
    /// entered at `1 - t_{i+1}`.
    pub fn reversed(&self) -> PathSample {
        let n = self.len();
        let mut entry_ts = Vec::with_capacity(n);
        entry_ts.push(0.0);
        entry_ts.extend((1..n).rev().map(|i| 1.0 - self.entry_ts[i]));
        PathSample {
            entry_ts,
            patterns: self.patterns.iter().rev().cloned().collect(),
            stats: self.stats,
        }
    }

    /// Joins two connected paths; the shared pattern appears once.
    ///
    /// The result is parameterized with `self` on `[0, 0.5)` and `next` on
    /// `[0.5, 1]`.
    pub fn concat(&self, next: &PathSample) -> Option<PathSample> {
        if self.last() != next.first() {
            return None;
        }
        let mut entry_ts: Vec<f64> = self.entry_ts.iter().map(|t| 0.5 * t).collect();
        entry_ts.extend(next.entry_ts[1..].iter().map(|t| 0.5 + 0.5 * t));
        let mut patterns = self.patterns.clone();
        patterns.extend_from_slice(&next.patterns[1..]);
        Some(PathSample {
            entry_ts,
            patterns,
            stats: self.stats.merged(next.stats),
        })
    }
}

fn point_at<S: Scalar>(x1: &[S], x2: &[S], t: f64) -> Vec<S> {
    if t == 0.0 {
        return x1.to_vec();
    }
    if t == 1.0 {
        return x2.to_vec();
    }
    let t = S::lit(t);
    x1.iter().zip(x2).map(|(&a, &b)| a + t * (b - a)).collect()
}

fn check_segment<S: Scalar>(net: &Mlp<S>, x1: &[S], x2: &[S]) -> Result<(), SampleError> {
    for x in [x1, x2] {
        if x.len() != net.input_dim() {
            return Err(ModelError::InputDimension {
                expected: net.input_dim(),
                got: x.len(),
            }
            .into());
        }
    }
    if x1 == x2 {
        return Err(SampleError::IdenticalEndpoints);
    }
    Ok(())
}

/// Adaptive step-halving walk from `x1` to `x2`.
///
/// From the current parameter `t` a step of size `dt` is tried. When the
/// pattern there is unchanged, `t` advances without storing anything. A
/// single-bit change is stored. A larger change halves `dt` and retries,
/// unless `dt` is already at or below `delta_min`, in which case the jump is
/// stored and counted. After every stored pattern `dt` resets to
/// `delta_init`. The endpoint `t = 1` is always evaluated.
pub fn sample_adaptive<S: Scalar>(
    net: &Mlp<S>,
    x1: &[S],
    x2: &[S],
    delta_init: f64,
    delta_min: f64,
) -> Result<PathSample, SampleError> {
    if !(delta_min > 0.0 && delta_min <= delta_init && delta_init <= 1.0) {
        return Err(SampleError::InvalidStepBounds {
            delta_init,
            delta_min,
        });
    }
    check_segment(net, x1, x2)?;

    let mut stats = SamplerStats {
        total_steps: 1,
        ..SamplerStats::default()
    };
    let mut prev = net.activation_pattern(x1)?;
    let mut patterns = vec![prev.clone()];
    let mut entry_ts = vec![0.0];
    let mut t = 0.0_f64;
    let mut dt = delta_init;

    while t < 1.0 {
        let t_next = (t + dt).min(1.0);
        let next = net.activation_pattern(&point_at(x1, x2, t_next))?;
        stats.total_steps += 1;
        let accept = match hamming(&prev, &next).expect("patterns of one network") {
            0 => {
                t = t_next;
                false
            }
            1 => true,
            _ if dt <= delta_min => {
                stats.jumps_accepted_at_dmin += 1;
                true
            }
            _ => {
                dt *= 0.5;
                stats.halvings += 1;
                false
            }
        };
        if accept {
            patterns.push(next.clone());
            entry_ts.push(t_next);
            prev = next;
            t = t_next;
            dt = delta_init;
        }
    }

    Ok(PathSample {
        entry_ts,
        patterns,
        stats,
    })
}

/// Evaluates the pattern at `t = k / (n_points - 1)` and collapses runs of
/// equal patterns.
pub fn sample_equidistant<S: Scalar>(
    net: &Mlp<S>,
    x1: &[S],
    x2: &[S],
    n_points: usize,
) -> Result<PathSample, SampleError> {
    if n_points < 2 {
        return Err(SampleError::TooFewPoints(n_points));
    }
    check_segment(net, x1, x2)?;
    let mut patterns: Vec<ActivationPattern> = Vec::new();
    let mut entry_ts = Vec::new();
    for k in 0..n_points {
        let t = if k == n_points - 1 {
            1.0
        } else {
            k as f64 / (n_points - 1) as f64
        };
        let pattern = net.activation_pattern(&point_at(x1, x2, t))?;
        if patterns.last() != Some(&pattern) {
            patterns.push(pattern);
            entry_ts.push(t);
        }
    }
    Ok(PathSample {
        entry_ts,
        patterns,
        stats: SamplerStats {
            total_steps: n_points as u64,
            ..SamplerStats::default()
        },
    })
}

/// Collapses runs of equal consecutive patterns, preserving order.
pub fn dedup_consecutive(raw: &[ActivationPattern]) -> Result<Vec<ActivationPattern>, SampleError> {
    if raw.is_empty() {
        return Err(SampleError::EmptyPath);
    }
    let mut out = raw.to_vec();
    out.dedup();
    Ok(out)
}
