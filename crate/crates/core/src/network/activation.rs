use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Pointwise nonlinearity applied after a layer's affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    #[serde(rename = "relu")]
    ReLU,
    /// Exact error-function GELU, `x·Φ(x)`.
    #[serde(rename = "gelu")]
    GELU,
    /// `x·sigmoid(x)`, also known as Swish.
    #[serde(rename = "silu")]
    SiLU,
    Tanh,
    Identity,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 5] = [
        ActivationKind::ReLU,
        ActivationKind::GELU,
        ActivationKind::SiLU,
        ActivationKind::Tanh,
        ActivationKind::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::ReLU => "relu",
            ActivationKind::GELU => "gelu",
            ActivationKind::SiLU => "silu",
            ActivationKind::Tanh => "tanh",
            ActivationKind::Identity => "identity",
        }
    }

    pub fn apply<S: Scalar>(self, v: S) -> S {
        apply_activation(self, v)
    }

    /// Derivative with respect to the pre-activation value.
    ///
    /// ReLU uses the convention `σ'(0) = 0`, matching the pattern bit at zero.
    pub fn derivative<S: Scalar>(self, v: S) -> S {
        match self {
            ActivationKind::ReLU => {
                if v > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            ActivationKind::GELU => {
                let half = S::lit(0.5);
                let cdf = half * (S::one() + (v * S::FRAC_1_SQRT_2()).erf());
                let pdf = (-(v * v) * half).exp() * S::FRAC_1_SQRT_2() * S::FRAC_2_SQRT_PI() * half;
                cdf + v * pdf
            }
            ActivationKind::SiLU => {
                let s = sigmoid(v);
                s * (S::one() + v * (S::one() - s))
            }
            ActivationKind::Tanh => {
                let t = v.tanh();
                S::one() - t * t
            }
            ActivationKind::Identity => S::one(),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown activation '{0}' (expected relu, gelu, silu, tanh or identity)")]
pub struct UnknownActivation(pub String);

impl FromStr for ActivationKind {
    type Err = UnknownActivation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownActivation(s.to_string()))
    }
}

/// Numerically stable logistic function.
pub fn sigmoid<S: Scalar>(v: S) -> S {
    if v >= S::zero() {
        S::one() / (S::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (S::one() + e)
    }
}

pub fn apply_activation<S: Scalar>(kind: ActivationKind, v: S) -> S {
    match kind {
        ActivationKind::ReLU => v.max(S::zero()),
        ActivationKind::GELU => S::lit(0.5) * v * (S::one() + (v * S::FRAC_1_SQRT_2()).erf()),
        ActivationKind::SiLU => v * sigmoid(v),
        ActivationKind::Tanh => v.tanh(),
        ActivationKind::Identity => v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_definition() {
        assert_eq!(apply_activation(ActivationKind::ReLU, -2.0), 0.0);
        assert_eq!(apply_activation(ActivationKind::ReLU, 3.5), 3.5);
    }

    #[test]
    fn every_kind_fixes_zero() {
        for kind in ActivationKind::ALL {
            assert_eq!(apply_activation(kind, 0.0f64), 0.0, "{kind}");
            assert_eq!(apply_activation(kind, 0.0f32), 0.0, "{kind}");
        }
    }

    #[test]
    fn gelu_is_exact_erf_form() {
        // 1·Φ(1) = 0.8413447460685429
        let g = apply_activation(ActivationKind::GELU, 1.0f64);
        assert!((g - 0.841_344_746_068_542_9).abs() < 1e-15);
        // the tanh approximation gives 0.8411919906082768
        assert!((g - 0.841_191_990_608_276_8).abs() > 1e-4);
    }

    #[test]
    fn positive_iff_input_positive() {
        for kind in ActivationKind::ALL {
            for v in [-3.0, -0.75, -1e-9, 0.0, 1e-9, 0.2, 4.0f64] {
                assert_eq!(apply_activation(kind, v) > 0.0, v > 0.0, "{kind} at {v}");
            }
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-6;
        for kind in ActivationKind::ALL {
            for v in [-2.3, -0.4, 0.3, 1.7f64] {
                let fd = (apply_activation(kind, v + h) - apply_activation(kind, v - h)) / (2.0 * h);
                assert!((kind.derivative(v) - fd).abs() < 1e-8, "{kind} at {v}");
            }
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("ReLU".parse::<ActivationKind>().unwrap(), ActivationKind::ReLU);
        assert_eq!("silu".parse::<ActivationKind>().unwrap(), ActivationKind::SiLU);
        assert!("swiglu".parse::<ActivationKind>().is_err());
    }
}
