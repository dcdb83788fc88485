//! Per-pixel confidence and the adaptive blend weights derived from it.
//!
//! Confidence is the negative entropy `Σ_k p_k ln p_k` (natural log, `0·ln 0 = 0`), so a
//! one-hot row scores 0 and a uniform row scores `-ln K`. Weights are the confidences
//! min-max normalized over one image: the most confident pixel gets weight 1 and keeps its
//! pseudo label, the least confident gets weight 0 and takes the booster distribution.

use crate::error::{Error, Result};
use crate::tensor::ProbMap;

/// Raw confidences and normalized weights for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    pub height: usize,
    pub width: usize,
    /// Negative entropy per pixel, in `[-ln K, 0]`.
    pub conf: Vec<f64>,
    /// Normalized weight per pixel, in `[0, 1]`.
    pub weight: Vec<f32>,
}

impl WeightMap {
    pub fn mean_weight(&self) -> f64 {
        mean(self.weight.iter().map(|&w| f64::from(w)))
    }

    pub fn mean_conf(&self) -> f64 {
        mean(self.conf.iter().copied())
    }
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    values.sum::<f64>() / n as f64
}

/// Negative entropy of a single probability row. Zero entries contribute nothing.
pub fn negative_entropy(row: impl IntoIterator<Item = f64>) -> f64 {
    row.into_iter()
        .filter(|&p| p != 0.0)
        .map(|p| p * p.ln())
        .sum()
}

/// Confidence plane of `pred`, one value per pixel.
pub fn confidence(pred: &ProbMap) -> Result<Vec<f64>> {
    pred.rows()
        .enumerate()
        .map(|(pixel, row)| {
            if let Some((class, &value)) =
                row.iter().enumerate().find(|(_, &p)| p < 0.0 || p.is_nan())
            {
                return Err(if value.is_nan() {
                    Error::NanProbability { pixel, class }
                } else {
                    Error::NegativeProbability {
                        pixel,
                        class,
                        value,
                    }
                });
            }
            Ok(negative_entropy(row.iter().map(|&p| f64::from(p))))
        })
        .collect()
}

/// Min-max normalizes `conf` into `[0, 1]`. A constant plane maps to all ones.
pub fn adaptive_weights(conf: &[f64]) -> Result<Vec<f32>> {
    adaptive_weights_masked(conf, None)
}

/// As [`adaptive_weights`], with min and max taken only over pixels where `valid` is
/// true. Excluded pixels get weight 1.
pub fn adaptive_weights_masked(conf: &[f64], valid: Option<&[bool]>) -> Result<Vec<f32>> {
    if let Some(mask) = valid {
        if mask.len() != conf.len() {
            return Err(Error::ShapeMismatch(format!(
                "mask has {} entries for {} confidences",
                mask.len(),
                conf.len()
            )));
        }
    }
    let included = |i: usize| valid.is_none_or(|m| m[i]);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (index, &c) in conf.iter().enumerate() {
        if !c.is_finite() {
            return Err(Error::NonFinite { index, value: c });
        }
        if included(index) {
            lo = lo.min(c);
            hi = hi.max(c);
        }
    }
    let range = hi - lo;
    Ok(conf
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if !included(i) || range <= 0.0 || !range.is_finite() {
                1.0
            } else {
                ((c - lo) / range) as f32
            }
        })
        .collect())
}

/// Confidence and weights of `pred` in one call.
pub fn weight_map(pred: &ProbMap) -> Result<WeightMap> {
    let conf = confidence(pred)?;
    let weight = adaptive_weights(&conf)?;
    Ok(WeightMap {
        height: pred.height(),
        width: pred.width(),
        conf,
        weight,
    })
}
