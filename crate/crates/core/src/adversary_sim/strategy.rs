//! The behaviors faulty agents can follow in a simulated run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// What each faulty agent reports.
///
/// Function-level strategies fabricate a whole cost function; gradient-level
/// strategies only answer gradient queries and cannot be used where a full
/// reported cost is required. `HonestEcho` keeps faulty agents truthful and
/// serves as the control case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "name",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub enum AdversaryStrategy<T> {
    /// Faulty agents report their true cost.
    HonestEcho,
    /// Report a fabricated strictly convex cost minimizing at `target`.
    FakeFunction { target: Vec<T> },
    /// Report the true cost scaled by `lambda`.
    ScaledTruth { lambda: T },
    /// Report the true cost translated by `delta`.
    ShiftedTruth { delta: Vec<T> },
    /// Report a cost with no finite minimum.
    NegativeBomb,
    /// All faulty agents report one identical fabricated cost pulling toward
    /// a far-away random point.
    ColludingPull,
    /// Answer gradient queries with the true gradient negated and amplified
    /// by `lambda`.
    SignFlip { lambda: T },
    /// Answer gradient queries with pure noise of scale `sigma`.
    RandomNoise { sigma: T },
    /// Answer every gradient query with zero.
    ZeroGradient,
}

impl<T: Real> AdversaryStrategy<T> {
    /// Stable name, matching the serialized form.
    pub fn name(&self) -> &'static str {
        match self {
            Self::HonestEcho => "honest_echo",
            Self::FakeFunction { .. } => "fake_function",
            Self::ScaledTruth { .. } => "scaled_truth",
            Self::ShiftedTruth { .. } => "shifted_truth",
            Self::NegativeBomb => "negative_bomb",
            Self::ColludingPull => "colluding_pull",
            Self::SignFlip { .. } => "sign_flip",
            Self::RandomNoise { .. } => "random_noise",
            Self::ZeroGradient => "zero_gradient",
        }
    }

    /// Whether the strategy produces whole reported cost functions.
    pub fn is_function_level(&self) -> bool {
        matches!(
            self,
            Self::HonestEcho
                | Self::FakeFunction { .. }
                | Self::ScaledTruth { .. }
                | Self::ShiftedTruth { .. }
                | Self::NegativeBomb
                | Self::ColludingPull
        )
    }

    /// Whether the strategy only answers gradient queries.
    pub fn is_gradient_level(&self) -> bool {
        !self.is_function_level()
    }

    /// Checks parameter shapes against the scenario dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::FakeFunction { target } => {
                if target.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: target.len(),
                    });
                }
                if target.iter().any(|v| !v.finite()) {
                    return Err(Error::invalid("target", "components must be finite"));
                }
            }
            Self::ScaledTruth { lambda } => {
                if !lambda.finite() {
                    return Err(Error::invalid("lambda", "must be finite"));
                }
            }
            Self::ShiftedTruth { delta } => {
                if delta.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: delta.len(),
                    });
                }
                if delta.iter().any(|v| !v.finite()) {
                    return Err(Error::invalid("delta", "components must be finite"));
                }
            }
            Self::SignFlip { lambda } => {
                if *lambda <= T::zero() || !lambda.finite() {
                    return Err(Error::invalid("lambda", "must be positive and finite"));
                }
            }
            Self::RandomNoise { sigma } => {
                if *sigma < T::zero() || !sigma.finite() {
                    return Err(Error::invalid("sigma", "must be non-negative and finite"));
                }
            }
            Self::HonestEcho | Self::NegativeBomb | Self::ColludingPull | Self::ZeroGradient => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn serialized_form_uses_name_and_params() {
        let s: AdversaryStrategy<f64> = AdversaryStrategy::ScaledTruth { lambda: 2.0 };
        assert_eq!(
            serde_json::to_value(&s).unwrap(),
            json!({"name": "scaled_truth", "params": {"lambda": 2.0}})
        );
        let unit: AdversaryStrategy<f64> = AdversaryStrategy::HonestEcho;
        assert_eq!(
            serde_json::to_value(&unit).unwrap(),
            json!({"name": "honest_echo"})
        );
    }

    #[test]
    fn round_trips_through_json() {
        let all: Vec<AdversaryStrategy<f64>> = vec![
            AdversaryStrategy::HonestEcho,
            AdversaryStrategy::FakeFunction {
                target: vec![1.0, 2.0],
            },
            AdversaryStrategy::ScaledTruth { lambda: 0.5 },
            AdversaryStrategy::ShiftedTruth {
                delta: vec![-1.0, 3.0],
            },
            AdversaryStrategy::NegativeBomb,
            AdversaryStrategy::ColludingPull,
            AdversaryStrategy::SignFlip { lambda: 2.0 },
            AdversaryStrategy::RandomNoise { sigma: 1.5 },
            AdversaryStrategy::ZeroGradient,
        ];
        for s in all {
            let text = serde_json::to_string(&s).unwrap();
            let back: AdversaryStrategy<f64> = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
            assert_eq!(s.is_function_level(), !s.is_gradient_level());
        }
    }

    #[test]
    fn parameter_shapes_are_validated() {
        let bad_target: AdversaryStrategy<f64> =
            AdversaryStrategy::FakeFunction { target: vec![1.0] };
        assert!(bad_target.validate(2).is_err());
        let bad_sigma: AdversaryStrategy<f64> = AdversaryStrategy::RandomNoise { sigma: -1.0 };
        assert!(bad_sigma.validate(1).is_err());
        let bad_flip: AdversaryStrategy<f64> = AdversaryStrategy::SignFlip { lambda: 0.0 };
        assert!(bad_flip.validate(1).is_err());
        let ok: AdversaryStrategy<f64> = AdversaryStrategy::ShiftedTruth {
            delta: vec![0.0, 0.0],
        };
        assert!(ok.validate(2).is_ok());
    }
}
