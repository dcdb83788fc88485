//! PAC-Bayes gap bounds and the finite-family empirical discrepancy.
//!
//! Posteriors are products of identity-covariance Gaussians whose means come from a
//! linear map applied to a mean input representation, `μ = M·x̄`. The prior uses the
//! labeled-data weights, the vanilla posterior the weights seen on unlabeled data, and the
//! boosted posterior adds a booster offset to those weights.
//!
//! The expected-risk bound is
//!
//! ```text
//! R_E ≤ R_G + √(KL / 2N) + √(ln(2√N/δ) / 2N)
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Row-major `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::ShapeMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix applied to a {}-vector",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Product of `d` unit-variance Gaussians with the given means.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    mean: Vec<f64>,
}

impl GaussianPosterior {
    pub fn new(mean: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = mean.iter().enumerate().find(|(_, m)| !m.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { mean })
    }

    /// Mean `weights · x`.
    pub fn from_linear(weights: &Matrix, x: &[f64]) -> Result<Self> {
        Self::new(weights.mul_vec(x)?)
    }

    /// Mean `(weights + offset) · x`.
    pub fn boosted(weights: &Matrix, offset: &Matrix, x: &[f64]) -> Result<Self> {
        Self::from_linear(&weights.add(offset)?, x)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KlMode {
    /// `d·‖μ_p − μ_q‖²`, the closed form used for bound reproduction.
    #[default]
    Paper,
    /// `½·‖μ_p − μ_q‖²`, the KL divergence of identity-covariance Gaussians.
    Standard,
}

impl fmt::Display for KlMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KlMode::Paper => "paper",
            KlMode::Standard => "standard",
        })
    }
}

impl FromStr for KlMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(KlMode::Paper),
            "standard" => Ok(KlMode::Standard),
            other => Err(Error::InvalidArgument(format!(
                "unknown KL mode {other:?} (expected paper or standard)"
            ))),
        }
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// KL divergence from `p` to `q` under `mode`.
pub fn kl_gaussian_product(
    q: &GaussianPosterior,
    p: &GaussianPosterior,
    mode: KlMode,
) -> Result<f64> {
    if q.dim() != p.dim() {
        return Err(Error::ShapeMismatch(format!(
            "posterior has dimension {}, prior {}",
            q.dim(),
            p.dim()
        )));
    }
    let sq = squared_distance(q.mean(), p.mean());
    Ok(match mode {
        KlMode::Paper => q.dim() as f64 * sq,
        KlMode::Standard => 0.5 * sq,
    })
}

fn check_sample(n: u64, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence δ = {delta} must lie in (0, 1)"
        )));
    }
    Ok(())
}

/// `ln(2√N/δ)`.
fn log_term(n: u64, delta: f64) -> f64 {
    (2.0 * (n as f64).sqrt() / delta).ln()
}

/// `√((kl + ln(2√N/δ)) / 2N)`.
pub fn gap_bound(kl: f64, n: u64, delta: f64) -> Result<f64> {
    check_sample(n, delta)?;
    if !(kl.is_finite() && kl >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "KL value {kl} must be finite and non-negative"
        )));
    }
    Ok(((kl + log_term(n, delta)) / (2.0 * n as f64)).sqrt())
}

/// Terms of the expected-risk upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskBound {
    pub empirical_risk: f64,
    pub kl: f64,
    /// `√(kl / 2N)`.
    pub kl_term: f64,
    /// `√(ln(2√N/δ) / 2N)`.
    pub confidence_term: f64,
    pub total: f64,
}

/// Upper bound on the expected risk of posterior `q` against prior `p`.
pub fn risk_upper_bound(
    empirical_risk: f64,
    q: &GaussianPosterior,
    p: &GaussianPosterior,
    n: u64,
    delta: f64,
    mode: KlMode,
) -> Result<RiskBound> {
    check_sample(n, delta)?;
    if !(0.0..=1.0).contains(&empirical_risk) {
        return Err(Error::InvalidArgument(format!(
            "empirical risk {empirical_risk} must lie in [0, 1]"
        )));
    }
    let kl = kl_gaussian_product(q, p, mode)?;
    let two_n = 2.0 * n as f64;
    let kl_term = (kl / two_n).sqrt();
    let confidence_term = (log_term(n, delta) / two_n).sqrt();
    Ok(RiskBound {
        empirical_risk,
        kl,
        kl_term,
        confidence_term,
        total: empirical_risk + kl_term + confidence_term,
    })
}

/// A linear toy model seen from both sides of the labeled/unlabeled split.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInstance {
    /// Weights learned on labeled data.
    pub labeled_weights: Matrix,
    /// Mean labeled representation.
    pub labeled_input: Vec<f64>,
    /// Weights as applied to unlabeled data.
    pub unlabeled_weights: Matrix,
    /// Mean unlabeled representation.
    pub unlabeled_input: Vec<f64>,
    /// Booster offset added to the unlabeled weights.
    pub offset: Matrix,
}

/// Vanilla and boosted bounds of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundComparison {
    pub vanilla: RiskBound,
    pub boosted: RiskBound,
}

impl BoundInstance {
    pub fn prior(&self) -> Result<GaussianPosterior> {
        GaussianPosterior::from_linear(&self.labeled_weights, &self.labeled_input)
    }

    pub fn vanilla_posterior(&self) -> Result<GaussianPosterior> {
        GaussianPosterior::from_linear(&self.unlabeled_weights, &self.unlabeled_input)
    }

    pub fn boosted_posterior(&self) -> Result<GaussianPosterior> {
        GaussianPosterior::boosted(&self.unlabeled_weights, &self.offset, &self.unlabeled_input)
    }

    /// Both bounds with the same empirical risk, sample count and δ.
    pub fn compare(
        &self,
        empirical_risk: f64,
        n: u64,
        delta: f64,
        mode: KlMode,
    ) -> Result<BoundComparison> {
        let prior = self.prior()?;
        Ok(BoundComparison {
            vanilla: risk_upper_bound(
                empirical_risk,
                &self.vanilla_posterior()?,
                &prior,
                n,
                delta,
                mode,
            )?,
            boosted: risk_upper_bound(
                empirical_risk,
                &self.boosted_posterior()?,
                &prior,
                n,
                delta,
                mode,
            )?,
        })
    }
}

/// Bound on a single image's risk from the labeled risk and the discrepancy:
/// `R_X ≤ R_D + ½·disc + μ*`, where `μ*` is the joint optimal risk (user supplied).
pub fn transfer_bound(labeled_risk: f64, discrepancy: f64, joint_optimal_risk: f64) -> f64 {
    labeled_risk + 0.5 * discrepancy + joint_optimal_risk
}

/// A per-pixel classifier over feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    /// `below` when `x[feature] < threshold`, otherwise `above`.
    Threshold {
        feature: usize,
        threshold: f64,
        below: usize,
        above: usize,
    },
    /// Argmax of `weights · x + bias`, lowest index on ties.
    Linear { weights: Matrix, bias: Vec<f64> },
}

impl Hypothesis {
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            Hypothesis::Threshold {
                feature,
                threshold,
                below,
                above,
            } => {
                let value = x.get(*feature).ok_or_else(|| {
                    Error::ShapeMismatch(format!("feature {feature} of a {}-vector", x.len()))
                })?;
                Ok(if *value < *threshold { *below } else { *above })
            }
            Hypothesis::Linear { weights, bias } => {
                let scores = weights.mul_vec(x)?;
                if bias.len() != scores.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} biases for {} scores",
                        bias.len(),
                        scores.len()
                    )));
                }
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (class, (s, b)) in scores.iter().zip(bias).enumerate() {
                    if s + b > best_score {
                        best = class;
                        best_score = s + b;
                    }
                }
                Ok(best)
            }
        }
    }
}

/// Non-empty finite hypothesis set.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisFamily {
    members: Vec<Hypothesis>,
}

impl HypothesisFamily {
    pub fn new(members: Vec<Hypothesis>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidArgument("hypothesis family is empty".into()));
        }
        Ok(Self { members })
    }

    /// One-feature threshold rules between two classes.
    pub fn thresholds(
        feature: usize,
        thresholds: &[f64],
        below: usize,
        above: usize,
    ) -> Result<Self> {
        Self::new(
            thresholds
                .iter()
                .map(|&threshold| Hypothesis::Threshold {
                    feature,
                    threshold,
                    below,
                    above,
                })
                .collect(),
        )
    }

    pub fn members(&self) -> &[Hypothesis] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PairLoss {
    /// `[h1(x) ≠ h2(x)]`.
    #[default]
    ZeroOne,
    /// `(h1(x) − h2(x))²` on class indices.
    L2,
}

impl PairLoss {
    fn eval(self, a: usize, b: usize) -> f64 {
        match self {
            PairLoss::ZeroOne => f64::from(u8::from(a != b)),
            PairLoss::L2 => {
                let d = a as f64 - b as f64;
                d * d
            }
        }
    }
}

/// Result of [`empirical_discrepancy`], with the maximizing ordered pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub value: f64,
    pub pair: (usize, usize),
}

/// `2 · max_(h1,h2) |mean_L loss(h1, h2) − mean_I loss(h1, h2)|` over all ordered pairs of
/// the family. A lower bound on the supremum over any larger hypothesis space.
pub fn empirical_discrepancy(
    family: &HypothesisFamily,
    sample_l: &[Vec<f64>],
    sample_i: &[Vec<f64>],
    loss: PairLoss,
) -> Result<Discrepancy> {
    if sample_l.is_empty() || sample_i.is_empty() {
        return Err(Error::InvalidArgument(
            "discrepancy needs two non-empty samples".into(),
        ));
    }
    let predict_all = |sample: &[Vec<f64>]| -> Result<Vec<Vec<usize>>> {
        family
            .members()
            .iter()
            .map(|h| sample.iter().map(|x| h.predict(x)).collect())
            .collect()
    };
    let on_l = predict_all(sample_l)?;
    let on_i = predict_all(sample_i)?;
    let mean_loss = |preds: &[Vec<usize>], a: usize, b: usize| -> f64 {
        let n = preds[a].len() as f64;
        preds[a]
            .iter()
            .zip(&preds[b])
            .map(|(&x, &y)| loss.eval(x, y))
            .sum::<f64>()
            / n
    };
    let mut best = Discrepancy {
        value: 0.0,
        pair: (0, 0),
    };
    for a in 0..family.len() {
        for b in 0..family.len() {
            let gap = 2.0 * (mean_loss(&on_l, a, b) - mean_loss(&on_i, a, b)).abs();
            if gap > best.value {
                best = Discrepancy {
                    value: gap,
                    pair: (a, b),
                };
            }
        }
    }
    Ok(best)
}
