use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::data::FeatureMap;
use crate::error::{Error, Result};
use crate::tensor::{LabelMap, ProbMap, IGNORE};

/// Per-pixel softmax classifier: `softmax(W·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classes: usize,
    features: usize,
    /// `K×F`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub weight_momentum: Vec<f64>,
    pub bias_momentum: Vec<f64>,
}

/// Parameter gradient, same layout as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradient {
    pub fn zeros(classes: usize, features: usize) -> Self {
        Self {
            weights: vec![0.0; classes * features],
            bias: vec![0.0; classes],
        }
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Gradient, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += scale * b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += scale * b;
        }
    }
}

/// Training target for one image.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    /// Class indices; IGNORE pixels are skipped.
    Hard(&'a LabelMap),
    /// Per-pixel soft distributions, `H×W×K`.
    Soft(&'a [f32]),
}

impl LinearModel {
    pub fn zeros(classes: usize, features: usize) -> Self {
        Self {
            classes,
            features,
            weights: vec![0.0; classes * features],
            bias: vec![0.0; classes],
            weight_momentum: vec![0.0; classes * features],
            bias_momentum: vec![0.0; classes],
        }
    }

    /// Weights drawn from `N(0, 1/F)`, zero bias.
    pub fn init(classes: usize, features: usize, seed: u64) -> Self {
        let mut model = Self::zeros(classes, features);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (features.max(1) as f64).sqrt()).expect("positive std");
        model
            .weights
            .iter_mut()
            .for_each(|w| *w = normal.sample(&mut rng));
        model
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> usize {
        self.features
    }

    fn check(&self, x: &FeatureMap) -> Result<()> {
        if x.features() != self.features {
            return Err(Error::ShapeMismatch(format!(
                "model expects {} features, image has {}",
                self.features,
                x.features()
            )));
        }
        if let Some((index, &value)) = self
            .weights
            .iter()
            .chain(&self.bias)
            .enumerate()
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::NonFinite { index, value });
        }
        Ok(())
    }

    /// Softmax probabilities in f64, `H×W×K`.
    pub fn probabilities(&self, x: &FeatureMap) -> Result<Vec<f64>> {
        self.check(x)?;
        let k = self.classes;
        let mut out = vec![0f64; x.pixels() * k];
        for (pixel, row) in out.chunks_exact_mut(k).enumerate() {
            let features = x.pixel(pixel);
            for (class, z) in row.iter_mut().enumerate() {
                let w = &self.weights[class * self.features..(class + 1) * self.features];
                *z = self.bias[class] + w.iter().zip(features).map(|(a, b)| a * b).sum::<f64>();
            }
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for z in row.iter_mut() {
                *z = (*z - max).exp();
                total += *z;
            }
            row.iter_mut().for_each(|z| *z /= total);
        }
        Ok(out)
    }

    /// Per-pixel class probabilities as a [`ProbMap`].
    pub fn forward(&self, x: &FeatureMap) -> Result<ProbMap> {
        let probs = self.probabilities(x)?;
        ProbMap::new(
            x.height(),
            x.width(),
            self.classes,
            probs.into_iter().map(|p| p as f32).collect(),
        )
    }

    /// Mean per-pixel cross-entropy against `target` and its gradient.
    pub fn loss_and_gradient(&self, x: &FeatureMap, target: Target<'_>) -> Result<(f64, Gradient)> {
        let probs = self.probabilities(x)?;
        let k = self.classes;
        match target {
            Target::Hard(labels) if labels.pixels() != x.pixels() => {
                return Err(Error::ShapeMismatch(
                    "label map does not match image".into(),
                ))
            }
            Target::Soft(t) if t.len() != x.pixels() * k => {
                return Err(Error::ShapeMismatch(
                    "soft target does not match image".into(),
                ))
            }
            Target::Hard(labels) => labels.check_classes(k)?,
            Target::Soft(_) => {}
        }
        let mut grad = Gradient::zeros(k, self.features);
        let mut loss = 0.0;
        let mut counted = 0usize;
        let mut dz = vec![0f64; k];
        for pixel in 0..x.pixels() {
            let p = &probs[pixel * k..(pixel + 1) * k];
            match target {
                Target::Hard(labels) => {
                    let label = labels.data()[pixel];
                    if label == IGNORE {
                        continue;
                    }
                    let y = usize::from(label);
                    loss -= p[y].ln();
                    dz.copy_from_slice(p);
                    dz[y] -= 1.0;
                }
                Target::Soft(t) => {
                    let t = &t[pixel * k..(pixel + 1) * k];
                    let mut mass = 0.0;
                    for (j, &tj) in t.iter().enumerate() {
                        let tj = f64::from(tj);
                        if tj != 0.0 {
                            loss -= tj * p[j].ln();
                        }
                        mass += tj;
                    }
                    for j in 0..k {
                        dz[j] = mass * p[j] - f64::from(t[j]);
                    }
                }
            }
            counted += 1;
            let features = x.pixel(pixel);
            for (class, &d) in dz.iter().enumerate() {
                grad.bias[class] += d;
                let row = &mut grad.weights[class * self.features..(class + 1) * self.features];
                for (g, &f) in row.iter_mut().zip(features) {
                    *g += d * f;
                }
            }
        }
        if counted > 0 {
            let n = counted as f64;
            loss /= n;
            grad.weights.iter_mut().for_each(|g| *g /= n);
            grad.bias.iter_mut().for_each(|g| *g /= n);
        }
        Ok((loss, grad))
    }

    /// SGD step with momentum and L2 weight decay:
    /// `v ← μ·v + (g + λ·θ)`, `θ ← θ − lr·v`.
    pub fn sgd_step(&mut self, grad: &Gradient, lr: f64, momentum: f64, weight_decay: f64) {
        fn update(
            params: &mut [f64],
            buf: &mut [f64],
            grad: &[f64],
            lr: f64,
            momentum: f64,
            wd: f64,
        ) {
            for ((p, v), g) in params.iter_mut().zip(buf.iter_mut()).zip(grad) {
                *v = momentum * *v + (g + wd * *p);
                *p -= lr * *v;
            }
        }
        update(
            &mut self.weights,
            &mut self.weight_momentum,
            &grad.weights,
            lr,
            momentum,
            weight_decay,
        );
        update(
            &mut self.bias,
            &mut self.bias_momentum,
            &grad.bias,
            lr,
            momentum,
            weight_decay,
        );
    }
}
