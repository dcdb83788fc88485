//! Dense per-pixel containers: probability maps, label maps and one-hot maps.
//!
//! All maps are row-major with the class index varying fastest, so pixel `i` of an
//! `H×W×K` map occupies `data[i*K..(i+1)*K]`.

use crate::error::{Error, Result};

/// Label reserved for void pixels. Excluded from one-hot expansion, voting and metrics.
pub const IGNORE: u16 = u16::MAX;

fn check_len(what: &str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::ShapeMismatch(format!(
            "{what}: expected {expected} elements, got {actual}"
        )));
    }
    Ok(())
}

fn checked_volume(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::ShapeMismatch(format!("dimensions {dims:?} overflow")))
}

/// Per-pixel class probabilities, `H×W×K` 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    height: usize,
    width: usize,
    classes: usize,
    data: Vec<f32>,
}

impl ProbMap {
    /// Wraps `data` without validating its values; see [`ProbMap::check_normalized`].
    pub fn new(height: usize, width: usize, classes: usize, data: Vec<f32>) -> Result<Self> {
        if classes == 0 {
            return Err(Error::InvalidArgument(
                "a probability map needs at least one class".into(),
            ));
        }
        check_len(
            "probability map",
            checked_volume(&[height, width, classes])?,
            data.len(),
        )?;
        Ok(Self {
            height,
            width,
            classes,
            data,
        })
    }

    pub fn uniform(height: usize, width: usize, classes: usize) -> Result<Self> {
        let value = 1.0 / classes.max(1) as f32;
        let len = checked_volume(&[height, width, classes])?;
        Self::new(height, width, classes, vec![value; len])
    }

    /// Builds a map from `f(pixel, class)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        classes: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        let pixels = checked_volume(&[height, width])?;
        let mut data = Vec::with_capacity(pixels * classes);
        for pixel in 0..pixels {
            for class in 0..classes {
                data.push(f(pixel, class));
            }
        }
        Self::new(height, width, classes, data)
    }

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

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.classes)
    }

    /// Checks every value is in `[0, 1]` and every pixel row sums to `1 ± tolerance`.
    pub fn check_normalized(&self, tolerance: f64) -> Result<()> {
        for (pixel, row) in self.rows().enumerate() {
            let mut sum = 0.0f64;
            for (class, &p) in row.iter().enumerate() {
                if p.is_nan() {
                    return Err(Error::NanProbability { pixel, class });
                }
                if p < 0.0 {
                    return Err(Error::NegativeProbability {
                        pixel,
                        class,
                        value: p,
                    });
                }
                if p > 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "probability {p} above 1 at pixel {pixel}, class {class}"
                    )));
                }
                sum += f64::from(p);
            }
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::InvalidArgument(format!(
                    "pixel {pixel} sums to {sum}, outside 1 ± {tolerance}"
                )));
            }
        }
        Ok(())
    }
}

/// `H×W` class indices, with [`IGNORE`] marking void pixels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    height: usize,
    width: usize,
    data: Vec<u16>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, data: Vec<u16>) -> Result<Self> {
        check_len("label map", checked_volume(&[height, width])?, data.len())?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, label: u16) -> Result<Self> {
        Self::new(
            height,
            width,
            vec![label; checked_volume(&[height, width])?],
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u16> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.data[row * self.width + col]
    }

    /// Largest non-IGNORE label, if any.
    pub fn max_label(&self) -> Option<u16> {
        self.data.iter().copied().filter(|&l| l != IGNORE).max()
    }

    /// Fails on the first non-IGNORE label that is not below `classes`.
    pub fn check_classes(&self, classes: usize) -> Result<()> {
        match self
            .data
            .iter()
            .enumerate()
            .find(|&(_, &l)| l != IGNORE && usize::from(l) >= classes)
        {
            Some((pixel, &value)) => Err(Error::LabelOutOfRange {
                pixel,
                value,
                classes,
            }),
            None => Ok(()),
        }
    }

    /// Pixel count per class; IGNORE pixels are not counted.
    pub fn histogram(&self, classes: usize) -> Result<Vec<u64>> {
        self.check_classes(classes)?;
        let mut counts = vec![0u64; classes];
        for &l in self.data.iter().filter(|&&l| l != IGNORE) {
            counts[usize::from(l)] += 1;
        }
        Ok(counts)
    }
}

/// `H×W×K` indicator map holding a single 1 per labeled pixel and all zeros for void pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotMap {
    height: usize,
    width: usize,
    classes: usize,
    data: Vec<u8>,
}

impl OneHotMap {
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

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> &[u8] {
        &self.data[index * self.classes..(index + 1) * self.classes]
    }

    /// Index of the hot class at `pixel`, `None` for a void pixel.
    pub fn hot_index(&self, pixel: usize) -> Option<usize> {
        self.pixel(pixel).iter().position(|&v| v != 0)
    }

    /// Number of pixels hot in each class.
    pub fn class_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.classes];
        for row in self.data.chunks_exact(self.classes.max(1)) {
            for (total, &v) in totals.iter_mut().zip(row) {
                *total += u64::from(v);
            }
        }
        totals
    }

    /// The map as 32-bit floats in the same layout.
    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&v| f32::from(v)).collect()
    }
}

/// Expands `labels` into a one-hot map over `classes` classes.
pub fn one_hot(labels: &LabelMap, classes: usize) -> Result<OneHotMap> {
    if classes == 0 {
        return Err(Error::InvalidArgument(
            "one-hot expansion needs at least one class".into(),
        ));
    }
    labels.check_classes(classes)?;
    let mut data = vec![0u8; checked_volume(&[labels.pixels(), classes])?];
    for (row, &label) in data.chunks_exact_mut(classes).zip(labels.data()) {
        if label != IGNORE {
            row[usize::from(label)] = 1;
        }
    }
    Ok(OneHotMap {
        height: labels.height(),
        width: labels.width(),
        classes,
        data,
    })
}

/// Per-pixel argmax. Ties go to the lowest class index.
pub fn argmax_labels(pred: &ProbMap) -> Result<LabelMap> {
    if pred.classes() >= usize::from(IGNORE) {
        return Err(Error::InvalidArgument(format!(
            "{} classes cannot be stored as 16-bit labels",
            pred.classes()
        )));
    }
    let mut labels = Vec::with_capacity(pred.pixels());
    for (pixel, row) in pred.rows().enumerate() {
        let mut best = 0usize;
        for (class, &p) in row.iter().enumerate() {
            if p.is_nan() {
                return Err(Error::NanProbability { pixel, class });
            }
            if p > row[best] {
                best = class;
            }
        }
        labels.push(best as u16);
    }
    LabelMap::new(pred.height(), pred.width(), labels)
}
