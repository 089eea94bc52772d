//! Folding measures of a path through activation space.
//!
//! For a path `π_1, …, π_n`:
//!
//! * `r1` is the largest Hamming distance from `π_1` to any later pattern,
//! * `r2` is the total Hamming distance travelled between consecutive patterns,
//! * `chi = 1 - r1 / r2`, zero for flat paths and approaching one for paths
//!   that keep turning back on themselves.
//!
//! All three are exact; `chi` is an integer ratio.

use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::network::{hamming, ActivationPattern, PatternError};
use crate::sampler::{PathSample, SamplerStats};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FoldingError {
    #[error("path is empty")]
    EmptyPath,
    #[error("paths are not connected: first path ends at {end}, second starts at {start}")]
    Disconnected { end: String, start: String },
    #[error("temperature beta must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("path travels zero distance; the smooth folding value is undefined (the path is flat)")]
    SingularPath,
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Exact non-negative rational, serialized as `{"num": .., "den": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fraction(Ratio<u64>);

impl Fraction {
    pub const ZERO: Fraction = Fraction(Ratio::new_raw(0, 1));

    pub fn new(num: u64, den: u64) -> Self {
        Fraction(Ratio::new(num, den))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `|self - a - b|`
    pub fn abs_diff_sum(self, a: Fraction, b: Fraction) -> Fraction {
        let sum = a.0 + b.0;
        Fraction(if self.0 >= sum { self.0 - sum } else { sum - self.0 })
    }
}

impl From<Ratio<u64>> for Fraction {
    fn from(r: Ratio<u64>) -> Self {
        Fraction(r)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

#[derive(Serialize, Deserialize)]
struct FractionRepr {
    num: u64,
    den: u64,
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        FractionRepr {
            num: self.numer(),
            den: self.denom(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = FractionRepr::deserialize(d)?;
        if repr.den == 0 {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Fraction::new(repr.num, repr.den))
    }
}

fn non_empty(path: &[ActivationPattern]) -> Result<(), FoldingError> {
    if path.is_empty() {
        Err(FoldingError::EmptyPath)
    } else {
        Ok(())
    }
}

fn distances_from_start(path: &[ActivationPattern]) -> Result<Vec<u32>, FoldingError> {
    non_empty(path)?;
    path.iter()
        .map(|p| hamming(&path[0], p).map_err(Into::into))
        .collect()
}

/// Maximum Hamming distance from the first pattern.
pub fn r1(path: &[ActivationPattern]) -> Result<u64, FoldingError> {
    Ok(distances_from_start(path)?.into_iter().max().unwrap_or(0) as u64)
}

/// Sum of Hamming distances between consecutive patterns.
pub fn r2(path: &[ActivationPattern]) -> Result<u64, FoldingError> {
    non_empty(path)?;
    path.windows(2)
        .map(|w| hamming(&w[0], &w[1]).map(u64::from).map_err(Into::into))
        .sum()
}

/// `1 - r1/r2`, defined as zero when the path travels no distance.
pub fn chi(path: &[ActivationPattern]) -> Result<Fraction, FoldingError> {
    let total = r2(path)?;
    if total == 0 {
        return Ok(Fraction::ZERO);
    }
    Ok(Fraction::new(total - r1(path)?, total))
}

pub fn reverse(path: &PathSample) -> PathSample {
    path.reversed()
}

/// Joins connected paths, where `p1` must end at the pattern `p2` starts with.
pub fn concat(p1: &PathSample, p2: &PathSample) -> Result<PathSample, FoldingError> {
    p1.concat(p2).ok_or_else(|| FoldingError::Disconnected {
        end: p1.last().to_string(),
        start: p2.first().to_string(),
    })
}

/// Deviation from additivity, `|chi(p1 ⊕ p2) - chi(p1) - chi(p2)|`.
pub fn interaction(p1: &PathSample, p2: &PathSample) -> Result<Fraction, FoldingError> {
    let joined = concat(p1, p2)?;
    Ok(chi(joined.patterns())?.abs_diff_sum(chi(p1.patterns())?, chi(p2.patterns())?))
}

fn check_beta(beta: f64) -> Result<(), FoldingError> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(FoldingError::InvalidBeta(beta))
    }
}

/// Max-shifted log-sum-exp, `(1/β)·ln Σ exp(β·v_i)`.
pub fn log_sum_exp(values: &[f64], beta: f64) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|&v| (beta * (v - max)).exp()).sum();
    max + sum.ln() / beta
}

/// Log-sum-exp relaxation of [`r1`] at temperature `beta`.
///
/// Satisfies `r1 <= smooth_r1 <= r1 + ln(n)/beta`.
pub fn smooth_r1(path: &[ActivationPattern], beta: f64) -> Result<f64, FoldingError> {
    check_beta(beta)?;
    let distances: Vec<f64> = distances_from_start(path)?
        .into_iter()
        .map(f64::from)
        .collect();
    Ok(log_sum_exp(&distances, beta))
}

/// `1 - smooth_r1/r2`; may dip slightly below [`chi`].
pub fn smooth_chi(path: &[ActivationPattern], beta: f64) -> Result<f64, FoldingError> {
    let soft = smooth_r1(path, beta)?;
    let total = r2(path)?;
    if total == 0 {
        return Err(FoldingError::SingularPath);
    }
    Ok(1.0 - soft / total as f64)
}

/// Whether the Hamming distance to the first pattern never decreases.
///
/// A flat path (`chi == 0`) is always monotone. The converse holds for
/// paths whose consecutive patterns differ in exactly one bit, but not in
/// general: `101, 111, 001, 000` is monotone with `chi = 1/2`.
pub fn is_monotone(path: &[ActivationPattern]) -> Result<bool, FoldingError> {
    Ok(distances_from_start(path)?.windows(2).all(|w| w[0] <= w[1]))
}

/// Folding summary of one segment walk and of its reversal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldingReport {
    pub r1: u64,
    pub r2: u64,
    pub chi: Fraction,
    pub chi_decimal: f64,
    pub chi_reversed: Fraction,
    pub chi_reversed_decimal: f64,
    pub n_patterns: usize,
    pub flat: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smooth_r1: Option<f64>,
    pub stats: SamplerStats,
}

impl FoldingReport {
    pub fn from_path(path: &PathSample) -> Result<Self, FoldingError> {
        let patterns = path.patterns();
        let chi_forward = chi(patterns)?;
        let chi_backward = chi(path.reversed().patterns())?;
        Ok(Self {
            r1: r1(patterns)?,
            r2: r2(patterns)?,
            chi: chi_forward,
            chi_decimal: chi_forward.to_f64(),
            chi_reversed: chi_backward,
            chi_reversed_decimal: chi_backward.to_f64(),
            n_patterns: patterns.len(),
            flat: chi_forward.is_zero(),
            smooth_r1: None,
            stats: path.stats(),
        })
    }

    pub fn with_smooth_r1(mut self, path: &PathSample, beta: f64) -> Result<Self, FoldingError> {
        self.smooth_r1 = Some(smooth_r1(path.patterns(), beta)?);
        Ok(self)
    }
}
