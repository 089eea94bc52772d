//! Global folding over the class pairs of a labeled dataset.
//!
//! For every ordered pair of classes `(a, b)` a budget of sample pairs is
//! drawn, each pair is walked from the `a` sample to the `b` sample, and the
//! median of the non-zero folding values is kept as `chi_plus(a, b)`. The
//! global measure `phi` is the mean of `chi_plus` over all ordered pairs of
//! distinct classes.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::folding::{chi, FoldingError, Fraction};
use crate::network::Mlp;
use crate::sampler::{SampleError, SamplerConfig};
use crate::scalar::Scalar;
use crate::stats::{mann_whitney_u, MannWhitneyResult};

pub const DEFAULT_BUDGET_PER_PAIR: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum GlobalError {
    #[error("sample list is empty")]
    EmptySamples,
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("need at least 2 classes, dataset has {0}")]
    TooFewClasses(usize),
    #[error("value list is empty")]
    EmptyValues,
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Folding(#[from] FoldingError),
}

/// Draws distinct `(from, to)` index pairs uniformly without replacement.
///
/// A lazily materialized Fisher–Yates shuffle over the `n_from * n_to`
/// flattened pairs; the first `k` draws do not depend on how many are taken.
pub struct PairStream {
    rng: ChaCha8Rng,
    n_to: u64,
    total: u64,
    drawn: u64,
    displaced: HashMap<u64, u64>,
}

impl PairStream {
    /// `ChaCha8` seeded from `seed`, on the given stream.
    pub fn new(n_from: usize, n_to: usize, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            rng,
            n_to: n_to as u64,
            total: n_from as u64 * n_to as u64,
            drawn: 0,
            displaced: HashMap::new(),
        }
    }
}

impl Iterator for PairStream {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        if self.drawn >= self.total {
            return None;
        }
        let i = self.drawn;
        let j = self.rng.gen_range(i..self.total);
        let at_j = self.displaced.get(&j).copied().unwrap_or(j);
        let at_i = self.displaced.get(&i).copied().unwrap_or(i);
        self.displaced.insert(j, at_i);
        self.displaced.remove(&i);
        self.drawn += 1;
        Some(((at_j / self.n_to) as usize, (at_j % self.n_to) as usize))
    }
}

fn chi_values_for<S: Scalar>(
    net: &Mlp<S>,
    from: &[&[S]],
    to: &[&[S]],
    budget: usize,
    pairs: PairStream,
    sampler: &SamplerConfig,
) -> Result<Vec<Fraction>, GlobalError> {
    if from.is_empty() || to.is_empty() {
        return Err(GlobalError::EmptySamples);
    }
    if budget == 0 {
        return Err(GlobalError::ZeroBudget);
    }
    pairs
        .take(budget)
        .map(|(a, b)| {
            if from[a] == to[b] {
                return Ok(Fraction::ZERO);
            }
            let path = sampler.sample(net, from[a], to[b])?;
            Ok(chi(path.patterns())?)
        })
        .collect()
}

/// Folding values of up to `budget` distinct sample pairs drawn with `seed`.
pub fn pairwise_chi<S: Scalar>(
    net: &Mlp<S>,
    from: &[&[S]],
    to: &[&[S]],
    budget: usize,
    seed: u64,
    sampler: &SamplerConfig,
) -> Result<Vec<Fraction>, GlobalError> {
    let pairs = PairStream::new(from.len(), to.len(), seed, 0);
    chi_values_for(net, from, to, budget, pairs, sampler)
}

/// Median of the strictly positive values, taking the lower middle value for
/// even counts. Zero when no value is positive.
pub fn chi_plus(values: &[Fraction]) -> Result<Fraction, GlobalError> {
    if values.is_empty() {
        return Err(GlobalError::EmptyValues);
    }
    let mut positive: Vec<Fraction> = values.iter().copied().filter(|v| !v.is_zero()).collect();
    if positive.is_empty() {
        return Ok(Fraction::ZERO);
    }
    positive.sort_unstable();
    Ok(positive[(positive.len() - 1) / 2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPairStats {
    pub class_from: u32,
    pub class_to: u32,
    pub chi_values: Vec<Fraction>,
    pub chi_plus: Fraction,
    pub n_zero: usize,
    pub n_pairs_evaluated: usize,
}

/// Exact rational with arbitrary precision, serialized as decimal strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigFraction(pub BigRational);

impl BigFraction {
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Serialize, Deserialize)]
struct BigFractionRepr {
    num: String,
    den: String,
}

impl Serialize for BigFraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        BigFractionRepr {
            num: self.0.numer().to_string(),
            den: self.0.denom().to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BigFraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = BigFractionRepr::deserialize(d)?;
        let num: BigInt = repr.num.parse().map_err(D::Error::custom)?;
        let den: BigInt = repr.den.parse().map_err(D::Error::custom)?;
        if den.is_zero() {
            return Err(D::Error::custom("zero denominator"));
        }
        Ok(BigFraction(BigRational::new(num, den)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalFoldingReport {
    pub phi: BigFraction,
    pub phi_decimal: f64,
    /// Ordered pairs of distinct classes.
    pub per_pair: Vec<ClassPairStats>,
    /// Pairs within one class.
    pub intra_stats: Vec<ClassPairStats>,
    /// Intra-class against inter-class `chi_plus` values.
    pub mw_test: Option<MannWhitneyResult>,
}

impl GlobalFoldingReport {
    /// Rows `class_from,class_to,chi_plus,n_pairs,n_zero`, inter-class pairs
    /// first.
    pub fn write_pair_csv<W: std::io::Write>(&self, sink: W) -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(["class_from", "class_to", "chi_plus", "n_pairs", "n_zero"])?;
        for stats in self.per_pair.iter().chain(&self.intra_stats) {
            writer.write_record([
                stats.class_from.to_string(),
                stats.class_to.to_string(),
                stats.chi_plus.to_f64().to_string(),
                stats.n_pairs_evaluated.to_string(),
                stats.n_zero.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalConfig {
    pub budget_per_pair: usize,
    pub seed: u64,
    pub sampler: SamplerConfig,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            budget_per_pair: DEFAULT_BUDGET_PER_PAIR,
            seed: 0,
            sampler: SamplerConfig::default(),
        }
    }
}

/// Global folding measure over all ordered class pairs.
///
/// Class pairs run in parallel on the ambient rayon pool; the pair with class
/// indices `(i, j)` draws from generator stream `i * L + j`, so the report
/// does not depend on scheduling.
pub fn global_phi<S: Scalar>(
    net: &Mlp<S>,
    data: &LabeledDataset<S>,
    config: &GlobalConfig,
) -> Result<GlobalFoldingReport, GlobalError> {
    let classes = data.classes();
    let l = classes.len();
    if l < 2 {
        return Err(GlobalError::TooFewClasses(l));
    }
    let members: Vec<Vec<&[S]>> = classes.iter().map(|&c| data.samples_of(c)).collect();
    let jobs: Vec<(usize, usize)> = (0..l).flat_map(|i| (0..l).map(move |j| (i, j))).collect();

    let all: Vec<ClassPairStats> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let pairs = PairStream::new(
                members[i].len(),
                members[j].len(),
                config.seed,
                (i * l + j) as u64,
            );
            let values = chi_values_for(
                net,
                &members[i],
                &members[j],
                config.budget_per_pair,
                pairs,
                &config.sampler,
            )?;
            Ok(ClassPairStats {
                class_from: classes[i],
                class_to: classes[j],
                chi_plus: chi_plus(&values)?,
                n_zero: values.iter().filter(|v| v.is_zero()).count(),
                n_pairs_evaluated: values.len(),
                chi_values: values,
            })
        })
        .collect::<Result<_, GlobalError>>()?;

    let (intra_stats, per_pair): (Vec<_>, Vec<_>) =
        all.into_iter().partition(|s| s.class_from == s.class_to);

    let sum = per_pair.iter().fold(BigRational::zero(), |acc, s| {
        acc + BigRational::new(s.chi_plus.numer().into(), s.chi_plus.denom().into())
    });
    let phi = BigFraction(sum / BigRational::from_integer(BigInt::from(l * (l - 1))));

    let intra: Vec<f64> = intra_stats.iter().map(|s| s.chi_plus.to_f64()).collect();
    let inter: Vec<f64> = per_pair.iter().map(|s| s.chi_plus.to_f64()).collect();
    let mw_test = mann_whitney_u(&intra, &inter).ok();

    Ok(GlobalFoldingReport {
        phi_decimal: phi.to_f64(),
        phi,
        per_pair,
        intra_stats,
        mw_test,
    })
}
