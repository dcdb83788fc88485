//! Uncertainty-boosted pseudo labels for semi-supervised semantic segmentation.
//!
//! The pipeline turns a per-pixel class probability map into a soft pseudo label:
//!
//! 1. [`tensor::argmax_labels`] and [`tensor::one_hot`] produce the hard pseudo label.
//! 2. [`voter`] counts class votes in a rectangular vicinity of every pixel.
//! 3. [`confidence`] scores each pixel by its negative entropy and min-max normalizes
//!    the scores into blend weights.
//! 4. [`booster::boost`] blends the one-hot label with the regional vote, leaning on
//!    the vote where the model is least confident.
//!
//! [`sim`] is a small cross-pseudo-supervision trainer on synthetic images used to
//! compare booster policies, and [`bounds`] evaluates the PAC-Bayes gap bounds and the
//! finite-family discrepancy estimator that motivate the booster.

pub mod booster;
pub mod bounds;
pub mod confidence;
mod error;
pub mod metrics;
pub mod sim;
pub mod tenfile;
pub mod tensor;
pub mod voter;

pub use booster::{boost, boost_report, BoostPolicy, BoostReport, BoostedLabel};
pub use confidence::{adaptive_weights, confidence, WeightMap};
pub use error::{Error, Result};
pub use metrics::ConfusionMatrix;
pub use tenfile::{read_tensor, write_tensor, DType, FormatError, Tensor, TensorData};
pub use tensor::{argmax_labels, one_hot, LabelMap, OneHotMap, ProbMap, IGNORE};
pub use voter::{vote_integral, vote_naive, vote_uniform, Border, VicinitySpec, VoteMap};
