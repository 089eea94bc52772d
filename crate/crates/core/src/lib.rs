//! Space-folding analysis for feed-forward networks.
//!
//! A straight segment between two inputs is mapped through a network to the
//! sequence of binary activation patterns it visits. How far that sequence
//! wanders away from, and back towards, its starting pattern in Hamming
//! distance is summarized by the folding measure `chi`; averaging over class
//! pairs of a dataset gives the global measure `phi`.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the double precision types used by the command line tool.


pub mod cli;
pub mod dataset;
pub mod folding;
pub mod global;
pub mod network;
pub mod sampler;
pub mod scalar;
pub mod stats;
pub mod trainer;


pub use dataset::LabeledDataset;
pub use folding::{chi, r1, r2, smooth_chi, smooth_r1, FoldingReport, Fraction};
pub use global::{global_phi, GlobalConfig, GlobalFoldingReport};
pub use network::{hamming, ActivationKind, ActivationPattern, Layer, Mlp};
pub use sampler::{sample_adaptive, sample_equidistant, PathSample, SamplerConfig, SamplerStats};
pub use scalar::Scalar;

pub type Mlp64 = Mlp<f64>;
pub type Mlp32 = Mlp<f32>;
pub type Layer64 = Layer<f64>;
pub type Dataset64 = LabeledDataset<f64>;
pub type Dataset32 = LabeledDataset<f32>;
/// Exact folding value.
pub type Chi = Fraction;
