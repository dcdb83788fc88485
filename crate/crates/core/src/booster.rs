//! The uncertainty booster: `p̂ = W·p_oh + (1 − W)·C`.
//!
//! `p_oh` is the one-hot argmax of the prediction, `W` the per-pixel confidence weight and
//! `C` the booster distribution chosen by [`BoostPolicy`].

use std::fmt;
use std::str::FromStr;

use crate::confidence::{weight_map, WeightMap};
use crate::error::{Error, Result};
use crate::tensor::{argmax_labels, one_hot, LabelMap, OneHotMap, ProbMap};
use crate::voter::{vote_integral, vote_uniform, VicinitySpec, VoteMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BoostPolicy {
    /// Regional vote of the image's own pseudo label.
    #[default]
    Ruv,
    /// Uniform `1/K` distribution everywhere.
    Uniform,
    /// No boosting: the one-hot pseudo label is returned unchanged.
    None,
}

impl BoostPolicy {
    pub const ALL: [BoostPolicy; 3] = [BoostPolicy::None, BoostPolicy::Uniform, BoostPolicy::Ruv];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoostPolicy::Ruv => "ruv",
            BoostPolicy::Uniform => "uniform",
            BoostPolicy::None => "none",
        }
    }

    /// Whether the vicinity affects the result.
    pub fn uses_vicinity(&self) -> bool {
        matches!(self, BoostPolicy::Ruv)
    }
}

impl fmt::Display for BoostPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoostPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ruv" => Ok(BoostPolicy::Ruv),
            "uniform" => Ok(BoostPolicy::Uniform),
            "none" => Ok(BoostPolicy::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown policy {other:?} (expected ruv, uniform or none)"
            ))),
        }
    }
}

/// Soft pseudo label produced by [`boost`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedLabel {
    height: usize,
    width: usize,
    classes: usize,
    data: Vec<f32>,
    vicinity: VicinitySpec,
    policy: BoostPolicy,
}

impl BoostedLabel {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, index: usize) -> &[f32] {
        &self.data[index * self.classes..(index + 1) * self.classes]
    }

    pub fn vicinity(&self) -> VicinitySpec {
        self.vicinity
    }

    pub fn policy(&self) -> BoostPolicy {
        self.policy
    }

    /// View as a probability map, e.g. to re-harden with [`argmax_labels`].
    pub fn to_prob_map(&self) -> ProbMap {
        ProbMap::new(self.height, self.width, self.classes, self.data.clone())
            .expect("boosted label has a valid shape")
    }
}

/// Every intermediate of one boosting pass.
#[derive(Debug, Clone)]
pub struct BoostTrace {
    pub pseudo: LabelMap,
    pub one_hot: OneHotMap,
    /// Booster distribution; `None` under [`BoostPolicy::None`].
    pub votes: Option<VoteMap>,
    pub weights: WeightMap,
    pub boosted: BoostedLabel,
}

/// `W_i·p_oh + (1 − W_i)·C` per pixel, evaluated in f64.
pub fn blend(one_hot: &OneHotMap, votes: &VoteMap, weights: &[f32]) -> Result<Vec<f32>> {
    let k = one_hot.classes();
    if votes.classes() != k
        || votes.pixels() != one_hot.pixels()
        || weights.len() != one_hot.pixels()
    {
        return Err(Error::ShapeMismatch(format!(
            "blend of {}x{} one-hot, {}x{} votes and {} weights",
            one_hot.pixels(),
            k,
            votes.pixels(),
            votes.classes(),
            weights.len()
        )));
    }
    let mut out = Vec::with_capacity(one_hot.pixels() * k);
    for (pixel, &w) in weights.iter().enumerate() {
        let w = f64::from(w);
        for (&hot, &vote) in one_hot.pixel(pixel).iter().zip(votes.pixel(pixel)) {
            out.push((w * f64::from(hot) + (1.0 - w) * f64::from(vote)) as f32);
        }
    }
    Ok(out)
}

/// Runs the full pipeline and keeps the intermediates.
pub fn boost_traced(pred: &ProbMap, v: &VicinitySpec, policy: BoostPolicy) -> Result<BoostTrace> {
    let v = VicinitySpec::new(v.height(), v.width(), v.border())?;
    let pseudo = argmax_labels(pred)?;
    let one_hot = one_hot(&pseudo, pred.classes())?;
    let weights = weight_map(pred)?;
    let (votes, data) = match policy {
        BoostPolicy::None => (None, one_hot.to_f32()),
        BoostPolicy::Ruv | BoostPolicy::Uniform => {
            let votes = if policy == BoostPolicy::Ruv {
                vote_integral(&one_hot, &v)?
            } else {
                vote_uniform(&one_hot)
            };
            let data = blend(&one_hot, &votes, &weights.weight)?;
            (Some(votes), data)
        }
    };
    let boosted = BoostedLabel {
        height: pred.height(),
        width: pred.width(),
        classes: pred.classes(),
        data,
        vicinity: v,
        policy,
    };
    Ok(BoostTrace {
        pseudo,
        one_hot,
        votes,
        weights,
        boosted,
    })
}

/// Uncertainty-boosted soft pseudo label for `pred`.
pub fn boost(pred: &ProbMap, v: &VicinitySpec, policy: BoostPolicy) -> Result<BoostedLabel> {
    boost_traced(pred, v, policy).map(|t| t.boosted)
}

/// Observables of one boosting pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostReport {
    pub policy: BoostPolicy,
    pub vicinity: VicinitySpec,
    pub pixels: usize,
    /// Fraction of pixels whose argmax differs between the boosted label and the pseudo label.
    pub changed_fraction: f64,
    pub mean_weight: f64,
    pub mean_conf: f64,
    /// Mean booster probability per class (the one-hot label itself under `none`).
    pub class_vote_mass: Vec<f64>,
}

impl BoostReport {
    pub fn from_trace(trace: &BoostTrace) -> Result<Self> {
        let rehardened = argmax_labels(&trace.boosted.to_prob_map())?;
        let pixels = trace.pseudo.pixels();
        let changed = trace
            .pseudo
            .data()
            .iter()
            .zip(rehardened.data())
            .filter(|(a, b)| a != b)
            .count();
        let k = trace.boosted.classes();
        let mut mass = vec![0f64; k];
        let source: Vec<f32> = match &trace.votes {
            Some(v) => v.data().to_vec(),
            None => trace.one_hot.to_f32(),
        };
        for row in source.chunks_exact(k) {
            for (m, &x) in mass.iter_mut().zip(row) {
                *m += f64::from(x);
            }
        }
        let denom = pixels.max(1) as f64;
        mass.iter_mut().for_each(|m| *m /= denom);
        Ok(Self {
            policy: trace.boosted.policy(),
            vicinity: trace.boosted.vicinity(),
            pixels,
            changed_fraction: if pixels == 0 {
                0.0
            } else {
                changed as f64 / pixels as f64
            },
            mean_weight: trace.weights.mean_weight(),
            mean_conf: trace.weights.mean_conf(),
            class_vote_mass: mass,
        })
    }

    /// `key,value` CSV lines with six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        out += &format!("policy,{}\n", self.policy);
        out += &format!("vicinity,{}\n", self.vicinity);
        out += &format!("border,{}\n", self.vicinity.border());
        out += &format!("pixels,{}\n", self.pixels);
        out += &format!("changed_fraction,{:.6}\n", self.changed_fraction);
        out += &format!("mean_weight,{:.6}\n", self.mean_weight);
        out += &format!("mean_conf,{:.6}\n", self.mean_conf);
        for (class, m) in self.class_vote_mass.iter().enumerate() {
            out += &format!("vote_mass_{class},{m:.6}\n");
        }
        out
    }
}

pub fn boost_report(pred: &ProbMap, v: &VicinitySpec, policy: BoostPolicy) -> Result<BoostReport> {
    BoostReport::from_trace(&boost_traced(pred, v, policy)?)
}
