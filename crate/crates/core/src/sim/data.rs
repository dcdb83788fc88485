use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor::LabelMap;

/// Number of intensity channels per synthetic pixel.
pub const CHANNELS: usize = 3;
/// Features per pixel: intensities, row and column in `[-1, 1]`, 3×3 local mean intensities.
pub const FEATURES: usize = 2 * CHANNELS + 2;

/// Generation parameters for a synthetic segmentation set.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetParams {
    pub images: usize,
    pub height: usize,
    pub width: usize,
    pub classes: usize,
    pub labeled_fraction: f64,
    /// Standard deviation of the additive intensity noise.
    pub noise: f64,
    /// Seed of the class colors, shared by every image generated from these parameters.
    pub palette_seed: u64,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self {
            images: 20,
            height: 32,
            width: 32,
            classes: 3,
            labeled_fraction: 0.1,
            noise: 0.35,
            palette_seed: 0,
        }
    }
}

/// Per-pixel feature vectors of one image, `H×W×F` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    height: usize,
    width: usize,
    features: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, features: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * features {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width}x{features} feature map with {} values",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            features,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn pixel(&self, index: usize) -> &[f64] {
        &self.data[index * self.features..(index + 1) * self.features]
    }
}

/// Isotropic Gaussian score bump for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub row: f64,
    pub col: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

impl Blob {
    fn score(&self, row: f64, col: f64) -> f64 {
        let d2 = (row - self.row).powi(2) + (col - self.col).powi(2);
        self.amplitude * (-d2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Label field where each pixel takes the class whose blob scores highest there.
pub fn render_blobs(height: usize, width: usize, blobs: &[Blob]) -> Result<LabelMap> {
    if blobs.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one blob is required".into(),
        ));
    }
    let mut labels = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for (class, blob) in blobs.iter().enumerate() {
                let s = blob.score(r as f64, c as f64);
                if s > best_score {
                    best = class;
                    best_score = s;
                }
            }
            labels.push(best as u16);
        }
    }
    LabelMap::new(height, width, labels)
}

/// Synthetic images with dense labels and a labeled/unlabeled split.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub params: DatasetParams,
    pub seed: u64,
    pub images: Vec<FeatureMap>,
    pub labels: Vec<LabelMap>,
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

impl SynthDataset {
    /// Default parameters with the given size and class count.
    pub fn generate(
        seed: u64,
        images: usize,
        height: usize,
        width: usize,
        classes: usize,
    ) -> Result<Self> {
        Self::generate_with(
            seed,
            &DatasetParams {
                images,
                height,
                width,
                classes,
                ..DatasetParams::default()
            },
        )
    }

    pub fn generate_with(seed: u64, params: &DatasetParams) -> Result<Self> {
        let DatasetParams {
            images,
            height,
            width,
            classes,
            labeled_fraction,
            noise,
            palette_seed,
        } = *params;
        if classes < 2 {
            return Err(Error::InvalidArgument(
                "synthetic data needs at least two classes".into(),
            ));
        }
        if classes >= usize::from(crate::tensor::IGNORE) || height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "cannot generate {height}x{width} images with {classes} classes"
            )));
        }
        if !(0.0..=1.0).contains(&labeled_fraction) || noise.is_nan() || noise < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "labeled fraction {labeled_fraction} or noise {noise} out of range"
            )));
        }
        let palette = class_palette(&mut ChaCha8Rng::seed_from_u64(palette_seed), classes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, noise).expect("noise is finite and non-negative");

        let mut feature_maps = Vec::with_capacity(images);
        let mut label_maps = Vec::with_capacity(images);
        for _ in 0..images {
            let blobs: Vec<Blob> = (0..classes)
                .map(|_| Blob {
                    row: rng.random_range(0.0..height as f64),
                    col: rng.random_range(0.0..width as f64),
                    sigma: rng.random_range(0.15..0.35) * height.max(width) as f64,
                    amplitude: rng.random_range(0.6..1.4),
                })
                .collect();
            let labels = render_blobs(height, width, &blobs)?;
            // Per-image illumination shift.
            let gain = rng.random_range(0.9..1.1);
            let offset: [f64; CHANNELS] = std::array::from_fn(|_| rng.random_range(-0.05..0.05));
            let mut intensity = vec![0f64; height * width * CHANNELS];
            for (pixel, &label) in labels.data().iter().enumerate() {
                for ch in 0..CHANNELS {
                    intensity[pixel * CHANNELS + ch] = gain
                        * (palette[usize::from(label)][ch] - 0.5)
                        + offset[ch]
                        + noise.sample(&mut rng);
                }
            }
            feature_maps.push(features_from_intensity(height, width, &intensity));
            label_maps.push(labels);
        }

        let mut order: Vec<usize> = (0..images).collect();
        order.shuffle(&mut rng);
        let n_labeled = if images == 0 {
            0
        } else {
            ((labeled_fraction * images as f64).round() as usize).clamp(1, images)
        };
        let mut labeled = order[..n_labeled].to_vec();
        let mut unlabeled = order[n_labeled..].to_vec();
        labeled.sort_unstable();
        unlabeled.sort_unstable();

        Ok(Self {
            params: params.clone(),
            seed,
            images: feature_maps,
            labels: label_maps,
            labeled,
            unlabeled,
        })
    }

    pub fn classes(&self) -> usize {
        self.params.classes
    }

    /// Pixel count per class over all images.
    pub fn label_histogram(&self) -> Vec<u64> {
        let mut total = vec![0u64; self.classes()];
        for labels in &self.labels {
            let h = labels
                .histogram(self.classes())
                .expect("generated labels are in range");
            total.iter_mut().zip(h).for_each(|(t, c)| *t += c);
        }
        total
    }
}

/// Class colors in `[0,1]^3`, kept at least 0.45 apart when a few draws allow it.
fn class_palette(rng: &mut ChaCha8Rng, classes: usize) -> Vec<[f64; CHANNELS]> {
    let mut palette: Vec<[f64; CHANNELS]> = Vec::with_capacity(classes);
    while palette.len() < classes {
        let mut candidate = [0.0; CHANNELS];
        for _ in 0..32 {
            candidate = std::array::from_fn(|_| rng.random::<f64>());
            let far = palette.iter().all(|p| {
                p.iter()
                    .zip(&candidate)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    >= 0.45
            });
            if far {
                break;
            }
        }
        palette.push(candidate);
    }
    palette
}

fn features_from_intensity(height: usize, width: usize, intensity: &[f64]) -> FeatureMap {
    let mut data = Vec::with_capacity(height * width * FEATURES);
    let norm = |i: usize, n: usize| {
        if n > 1 {
            2.0 * i as f64 / (n - 1) as f64 - 1.0
        } else {
            0.0
        }
    };
    for r in 0..height {
        for c in 0..width {
            let pixel = r * width + c;
            data.extend_from_slice(&intensity[pixel * CHANNELS..(pixel + 1) * CHANNELS]);
            data.push(norm(r, height));
            data.push(norm(c, width));
            let (r0, r1) = (r.saturating_sub(1), (r + 1).min(height - 1));
            let (c0, c1) = (c.saturating_sub(1), (c + 1).min(width - 1));
            let count = ((r1 - r0 + 1) * (c1 - c0 + 1)) as f64;
            for ch in 0..CHANNELS {
                let mut sum = 0.0;
                for rr in r0..=r1 {
                    for cc in c0..=c1 {
                        sum += intensity[(rr * width + cc) * CHANNELS + ch];
                    }
                }
                data.push(sum / count);
            }
        }
    }
    FeatureMap {
        height,
        width,
        features: FEATURES,
        data,
    }
}
