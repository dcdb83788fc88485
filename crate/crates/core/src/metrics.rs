//! Confusion matrices and mean Intersection-over-Union.

use crate::error::{Error, Result};
use crate::tensor::{LabelMap, IGNORE};

/// `K×K` pixel counts, rows are ground truth and columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_labels(classes: usize, truth: &LabelMap, pred: &LabelMap) -> Result<Self> {
        let mut cm = Self::new(classes);
        cm.accumulate(truth, pred)?;
        Ok(cm)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Adds one image. Pixels with IGNORE in either map are skipped.
    pub fn accumulate(&mut self, truth: &LabelMap, pred: &LabelMap) -> Result<()> {
        if truth.height() != pred.height() || truth.width() != pred.width() {
            return Err(Error::ShapeMismatch(format!(
                "truth is {}x{}, prediction is {}x{}",
                truth.height(),
                truth.width(),
                pred.height(),
                pred.width()
            )));
        }
        truth.check_classes(self.classes)?;
        pred.check_classes(self.classes)?;
        for (&t, &p) in truth.data().iter().zip(pred.data()) {
            if t == IGNORE || p == IGNORE {
                continue;
            }
            self.counts[usize::from(t) * self.classes + usize::from(p)] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::ShapeMismatch(format!(
                "cannot merge {}-class and {}-class matrices",
                self.classes, other.classes
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// `TP / (TP + FP + FN)` for `class`, `None` when the class has an empty union.
    pub fn iou(&self, class: usize) -> Option<f64> {
        let tp = self.get(class, class);
        let row: u64 = (0..self.classes).map(|p| self.get(class, p)).sum();
        let col: u64 = (0..self.classes).map(|t| self.get(t, class)).sum();
        let union = row + col - tp;
        (union > 0).then(|| tp as f64 / union as f64)
    }

    pub fn per_class_iou(&self) -> Vec<Option<f64>> {
        (0..self.classes).map(|c| self.iou(c)).collect()
    }

    /// Mean IoU over classes with a non-empty union; 0 if there are none.
    pub fn miou(&self) -> f64 {
        let present: Vec<f64> = self.per_class_iou().into_iter().flatten().collect();
        if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        }
    }
}
